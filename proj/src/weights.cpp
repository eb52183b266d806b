#include "loolab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loolab/error.hpp"
#include "loolab/loo.hpp"
#include "loolab/rng.hpp"

namespace loolab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// exp(x - max x) normalized; -inf entries map to exactly 0.
std::vector<double> softmax(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = std::exp(x[k] - m);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> column_sums(const PointwiseMatrix& m) {
  std::vector<double> out(m.models(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = 0; k < m.models(); ++k) out[k] += m(i, k);
  return out;
}

void require_finite_matrix(const PointwiseMatrix& m, std::string_view scheme) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t k = 0; k < m.models(); ++k) {
      if (!std::isfinite(m(i, k))) {
        throw NumericalError(std::string(scheme) + ": log density at observation " + std::to_string(i) +
                             ", model " + std::to_string(k) + " is -inf (observation impossible under model)");
      }
    }
  }
}

}  // namespace

PointwiseMatrix::PointwiseMatrix(std::size_t rows, std::size_t models, std::vector<double> values,
                                 std::vector<std::string> labels)
    : rows_(rows), models_(models), values_(std::move(values)), labels_(std::move(labels)) {
  if (models_ < 2) throw DomainError("pointwise matrix: need at least 2 models (K >= 2)");
  if (rows_ < 2) throw DomainError("pointwise matrix: need at least 2 observations");
  if (values_.size() != rows_ * models_) throw DomainError("pointwise matrix: size mismatch");
  if (labels_.empty()) {
    for (std::size_t k = 0; k < models_; ++k) labels_.push_back("M" + std::to_string(k));
  }
  if (labels_.size() != models_) throw DomainError("pointwise matrix: need one label per model");
  for (std::size_t j = 0; j < values_.size(); ++j) {
    const double v = values_[j];
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw DomainError("pointwise matrix: entry (" + std::to_string(j / models_) + ", " +
                        std::to_string(j % models_) + ") is NaN or +inf");
    }
  }
}

PointwiseMatrix PointwiseMatrix::from_columns(const std::vector<std::vector<double>>& columns,
                                              std::vector<std::string> labels) {
  if (columns.empty()) throw DomainError("pointwise matrix: no columns");
  const std::size_t n = columns.front().size();
  std::vector<double> values(n * columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k].size() != n) throw DomainError("pointwise matrix: columns differ in length");
    for (std::size_t i = 0; i < n; ++i) values[i * columns.size() + k] = columns[k][i];
  }
  return PointwiseMatrix(n, columns.size(), std::move(values), std::move(labels));
}

std::vector<double> PointwiseMatrix::column(std::size_t k) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, k);
  return out;
}

bool PointwiseMatrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double PointwiseMatrix::column_variance(std::size_t k) const {
  const double se = sum_standard_error(column(k));
  return se * se / static_cast<double>(rows_);
}

std::string_view scheme_name(Scheme s) noexcept {
  switch (s) {
    case Scheme::PseudoBma: return "pseudo_bma";
    case Scheme::PseudoBmaPlus: return "pseudo_bma_plus";
    case Scheme::Stacking: return "stacking";
    case Scheme::Bma: return "bma";
  }
  return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view text) noexcept {
  std::string t(text);
  std::replace(t.begin(), t.end(), '-', '_');
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "pseudo_bma") return Scheme::PseudoBma;
  if (t == "pseudo_bma_plus" || t == "pseudo_bma+") return Scheme::PseudoBmaPlus;
  if (t == "stacking") return Scheme::Stacking;
  if (t == "bma") return Scheme::Bma;
  return std::nullopt;
}

WeightVector pseudo_bma(const PointwiseMatrix& matrix) {
  require_finite_matrix(matrix, "pseudo_bma");
  WeightVector out;
  out.scheme = Scheme::PseudoBma;
  out.weights = softmax(column_sums(matrix));
  return out;
}

WeightVector pseudo_bma_plus(const PointwiseMatrix& matrix, std::size_t bootstrap_samples, std::uint64_t seed) {
  if (bootstrap_samples < 100) {
    throw DomainError("pseudo_bma_plus: need B >= 100 bootstrap samples, got " +
                      std::to_string(bootstrap_samples));
  }
  require_finite_matrix(matrix, "pseudo_bma_plus");
  const std::size_t n = matrix.rows();
  const std::size_t K = matrix.models();
  const double nn = static_cast<double>(n);

  // n * sum_i omega_i m_ik == elpd_k + sum_i (n omega_i - 1) d_ik with
  // d_ik = m_ik - m_0k, using sum_i omega_i == 1. A constant column gives
  // d == 0 and reproduces elpd_k bit for bit.
  const std::vector<double> elpd = column_sums(matrix);
  std::vector<double> dev(n * K);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < K; ++k) dev[i * K + k] = matrix(i, k) - matrix(0, k);

  const CounterRng root(seed);
  std::vector<double> mean(K, 0.0), omega(n), boot(K);
  for (std::size_t b = 0; b < bootstrap_samples; ++b) {
    CounterRng rng = root.split(b);
    double total = 0.0;
    for (double& w : omega) {
      w = rng.exponential();
      total += w;
    }
    boot = elpd;
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = nn * omega[i] / total - 1.0;
      for (std::size_t k = 0; k < K; ++k) boot[k] += scale * dev[i * K + k];
    }
    const auto w = softmax(boot);
    // Running mean: identical replicates leave it unchanged.
    for (std::size_t k = 0; k < K; ++k) mean[k] += (w[k] - mean[k]) / static_cast<double>(b + 1);
  }

  WeightVector out;
  out.scheme = Scheme::PseudoBmaPlus;
  out.weights = std::move(mean);
  out.bootstrap_samples = bootstrap_samples;
  return out;
}

WeightVector bma(std::span<const double> log_marginals, std::span<const double> prior_probs) {
  const std::size_t K = log_marginals.size();
  if (K < 2) throw DomainError("bma: need at least 2 models");
  if (prior_probs.size() != K) throw DomainError("bma: prior length differs from number of models");
  double prior_total = 0.0;
  for (double p : prior_probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("bma: prior probabilities must be >= 0");
    prior_total += p;
  }
  if (std::abs(prior_total - 1.0) > 1e-9) throw DomainError("bma: prior probabilities must sum to 1");

  std::vector<double> logpost(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double lm = log_marginals[k];
    if (std::isnan(lm) || lm == std::numeric_limits<double>::infinity())
      throw DomainError("bma: log marginal " + std::to_string(k) + " is NaN or +inf");
    logpost[k] = prior_probs[k] > 0.0 ? lm + std::log(prior_probs[k]) : kNegInf;
  }
  if (std::all_of(logpost.begin(), logpost.end(), [](double v) { return v == kNegInf; }))
    throw NumericalError("bma: every model has zero posterior probability");

  WeightVector out;
  out.scheme = Scheme::Bma;
  out.weights = softmax(logpost);
  return out;
}

WeightVector bma(std::span<const double> log_marginals) {
  std::vector<double> prior(log_marginals.size(), 1.0 / static_cast<double>(log_marginals.size()));
  return bma(log_marginals, prior);
}

}  // namespace loolab
