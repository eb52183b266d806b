#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace loolab {

/// elpd reported as a sum over observations.
///
/// se is sqrt(n * sample variance of the pointwise values), i.e. the standard
/// error of the sum, not of the mean. This simple estimator is known to be
/// optimistic for small n; no correction is applied.
struct ElpdEstimate {
  double elpd = 0.0;
  double se = 0.0;
  std::vector<double> pointwise;

  double mean() const { return elpd / static_cast<double>(pointwise.size()); }
};

/// Paired comparison of two models on the same observations (A minus B).
struct PairedDiff {
  double diff = 0.0;
  double se_diff = 0.0;
  std::vector<double> pointwise_diff;
};

/// Requires at least 2 entries, all finite.
ElpdEstimate elpd_from_pointwise(std::span<const double> pointwise);

/// Requires equal lengths >= 2, all finite.
PairedDiff paired_diff(std::span<const double> pointwise_a, std::span<const double> pointwise_b);

/// sqrt(n * sample variance). Deviations are taken from the first element, so a
/// constant vector yields exactly 0.
double sum_standard_error(std::span<const double> values);

/// S x n matrix of log p(y_i | theta^(s)), row-major by draw.
class LogLikDraws {
 public:
  static constexpr std::size_t kMinDraws = 100;

  /// Throws unless S >= 100, n >= 1, values.size() == S * n and all finite.
  LogLikDraws(std::size_t draws, std::size_t observations, std::vector<double> values);

  std::size_t draws() const noexcept { return draws_; }
  std::size_t observations() const noexcept { return observations_; }
  double operator()(std::size_t s, std::size_t i) const noexcept {
    return values_[s * observations_ + i];
  }
  std::vector<double> column(std::size_t i) const;
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t draws_;
  std::size_t observations_;
  std::vector<double> values_;
};

struct ParetoDiagnostics {
  std::vector<double> khat;
  std::vector<std::size_t> flagged;
  double threshold = 0.7;
};

/// khat_i > threshold for exactly the returned indices.
std::vector<std::size_t> flag_khat(std::span<const double> khat, double threshold);

struct GpdFit {
  double k = 0.0;
  double sigma = 1.0;
};

/// Generalized Pareto fit to exceedances (sorted ascending, all >= 0) with the
/// Zhang-Stephens empirical Bayes estimator. With weak_prior the shape is
/// shrunk toward 0.5 as (n k + 5) / (n + 10), the adjustment used for PSIS.
/// Throws NumericalError on fewer than 5 exceedances or a constant tail.
GpdFit gpd_fit(std::span<const double> exceedances, bool weak_prior = false);

/// Quantile function of GPD(location 0, sigma, k).
double gpd_quantile(double p, double k, double sigma);

struct PsisResult {
  ElpdEstimate estimate;
  ParetoDiagnostics diagnostics;
};

/// Smoothed log importance weights for one observation, truncated at the raw
/// maximum and not normalized. khat receives the fitted shape, or -infinity
/// when the tail is degenerate (weights are then left unsmoothed).
std::vector<double> psis_log_weights(std::span<const double> log_ratios, double& khat);

/// Pareto-smoothed importance-sampling LOO from posterior log-likelihood draws.
PsisResult psis_loo(const LogLikDraws& draws, double khat_threshold = 0.7);

}  // namespace loolab
