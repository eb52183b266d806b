#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loolab {

/// n x K matrix of log p(y_i | y_{-i}, M_k), row-major by observation.
///
/// Entries are finite or -infinity (an observation that a model rules out);
/// NaN and +infinity are rejected. Schemes that need finite totals check for
/// -infinity themselves.
class PointwiseMatrix {
 public:
  PointwiseMatrix(std::size_t rows, std::size_t models, std::vector<double> values,
                  std::vector<std::string> labels = {});

  /// Columns are per-model pointwise vectors of equal length.
  static PointwiseMatrix from_columns(const std::vector<std::vector<double>>& columns,
                                      std::vector<std::string> labels = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t models() const noexcept { return models_; }
  double operator()(std::size_t i, std::size_t k) const noexcept { return values_[i * models_ + k]; }
  std::vector<double> column(std::size_t k) const;
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool all_finite() const noexcept;
  /// Sample variance of column k (0 exactly for a constant column).
  double column_variance(std::size_t k) const;

 private:
  std::size_t rows_;
  std::size_t models_;
  std::vector<double> values_;
  std::vector<std::string> labels_;
};

enum class Scheme { PseudoBma, PseudoBmaPlus, Stacking, Bma };

std::string_view scheme_name(Scheme s) noexcept;
/// Accepts "pseudo-bma", "pseudo_bma", "pseudo-bma-plus", "stacking", "bma", ...
std::optional<Scheme> parse_scheme(std::string_view text) noexcept;

struct WeightVector {
  std::vector<double> weights;
  Scheme scheme = Scheme::PseudoBma;
  // Stacking diagnostics.
  std::size_t iterations = 0;
  bool converged = true;
  double kkt_residual = 0.0;
  // Pseudo-BMA+ bootstrap size.
  std::size_t bootstrap_samples = 0;

  double operator[](std::size_t k) const { return weights[k]; }
  std::size_t size() const noexcept { return weights.size(); }
};

/// w_k proportional to exp(elpd_k), elpd_k the column sums.
WeightVector pseudo_bma(const PointwiseMatrix& matrix);

/// Bayesian-bootstrap regularized pseudo-BMA. Deterministic in (matrix, B, seed);
/// replicate b draws its Dirichlet(1, ..., 1) weights from its own counter stream.
WeightVector pseudo_bma_plus(const PointwiseMatrix& matrix, std::size_t bootstrap_samples = 1000,
                             std::uint64_t seed = 0);

struct StackingOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 100000;
};

/// Simplex weights maximizing sum_i log sum_k w_k exp(matrix(i, k)).
///
/// converged == false when the KKT residual is still above tol at the
/// iteration cap; the best iterate is returned in that case.
WeightVector stacking(const PointwiseMatrix& matrix, const StackingOptions& options = {});

/// sum_i log sum_k w_k exp(matrix(i, k)), stabilized per row.
double stacking_objective(std::span<const double> weights, const PointwiseMatrix& matrix);

/// Normalized gradient of the stacking objective, d/dw_k divided by n. At any
/// simplex point sum_k w_k g_k == 1.
std::vector<double> stacking_gradient(std::span<const double> weights, const PointwiseMatrix& matrix);

/// Strict KKT residual: max |g_k - 1| over w_k > 0 and max (g_k - 1)+ over w_k == 0.
double stacking_kkt_residual(std::span<const double> weights, const PointwiseMatrix& matrix);

/// w_k proportional to prior_k * exp(log_marginal_k). -infinity marginals get weight 0.
WeightVector bma(std::span<const double> log_marginals, std::span<const double> prior_probs);

/// Uniform prior over the models.
WeightVector bma(std::span<const double> log_marginals);

}  // namespace loolab
