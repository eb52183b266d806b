#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loolab/models.hpp"
#include "loolab/weights.hpp"

namespace loolab {

/// Smallest epsilon accepted; far above double resolution near 1 and 1/2.
inline constexpr double kMinEpsilon = 0x1.0p-45;

enum class Mode { Idealized, Epsilon };

/// Null/alternative comparison reproducing one of three nested-model examples:
///
///   1. BernoulliPoint(1)   vs BetaBernoulli(a, b); idealized data all 1s,
///      perturbed truth theta = 1 - eps.
///   2. BernoulliPoint(1/2) vs BetaBernoulli(a, b); idealized data 1,0,1,0,...,
///      perturbed truth theta = 1/2 + eps.
///   3. NormalPoint(0, 1)   vs NormalConjugate(0, tau0, 1); idealized data all
///      0s, perturbed truth N(eps, 1). The normal families are chosen so that
///      the idealized LOO densities are constant.
///
/// Model index 0 is always the null and index 1 the alternative ("complex") model.
struct ExperimentConfig {
  int example_id = 1;
  Mode mode = Mode::Idealized;
  /// Epsilon mode only; strictly increasing, each >= kMinEpsilon.
  std::vector<double> epsilons;
  double a = 1.0;
  double b = 1.0;
  double tau0 = 1.0;
  std::vector<std::size_t> n_grid;
  std::vector<Scheme> schemes{Scheme::PseudoBma, Scheme::PseudoBmaPlus, Scheme::Stacking, Scheme::Bma};
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  double threshold = 0.95;
  std::size_t bootstrap_samples = 1000;
  double tol = 1e-10;
  /// 0 picks the hardware concurrency. Results do not depend on it.
  std::size_t threads = 1;

  /// Throws DomainError naming the offending field.
  void validate() const;
};

/// The two models compared in an example.
std::pair<ModelSpec, ModelSpec> example_models(const ExperimentConfig& config);

/// Data-generating process for one replication. Idealized mode ignores epsilon.
DgpSpec example_dgp(const ExperimentConfig& config, double epsilon, std::size_t replication);

/// Exact-LOO pointwise matrix (null, alternative) for a data set.
PointwiseMatrix example_matrix(const ExperimentConfig& config, const Dataset& data);

struct Cell {
  Scheme scheme = Scheme::Stacking;
  double epsilon = 0.0;
  std::size_t n = 0;
  std::size_t replication = 0;
  std::optional<WeightVector> weights;
  /// Set instead of weights when the scheme cannot be evaluated for this cell.
  std::string error;
  /// Whether the data differ from the idealized sequence of the same length.
  bool deviates_from_idealized = false;
};

struct Trajectory {
  double epsilon = 0.0;
  std::vector<Cell> cells;
};

/// All cells for a single epsilon (config.epsilons must hold exactly one
/// value in epsilon mode), ordered by (replication, n, scheme).
Trajectory run_example(const ExperimentConfig& config);

struct Crossing {
  Scheme scheme = Scheme::Stacking;
  double epsilon = 0.0;
  /// Smallest grid n whose median complex-model weight reaches the threshold.
  std::optional<std::size_t> n_star;
};

struct DeviationFrequency {
  double epsilon = 0.0;
  std::size_t n = 0;
  /// Fraction of replications whose data differ from the idealized sequence.
  double fraction = 0.0;
};

struct SweepResult {
  std::vector<Cell> cells;
  std::vector<Crossing> crossings;
  std::vector<DeviationFrequency> deviations;
  std::size_t error_count = 0;
};

/// run_example over every epsilon of the config, plus threshold crossings.
/// Idealized configs are treated as a single epsilon of 0.
SweepResult run_epsilon_sweep(const ExperimentConfig& config);

/// Median complex-model weight per grid n, and the first n reaching threshold.
std::vector<double> median_complex_weight(const std::vector<Cell>& cells, Scheme scheme, double epsilon,
                                          const std::vector<std::size_t>& n_grid);
std::optional<std::size_t> find_n_star(const std::vector<double>& medians,
                                       const std::vector<std::size_t>& n_grid, double threshold);

struct ConvergenceRow {
  std::size_t n = 0;
  /// sup over the query grid of |p_null(y) - p_alt(y | idealized data)|.
  double gap = 0.0;
};

/// Predictive gap between null and alternative on idealized data. Bernoulli
/// examples query y in {0, 1}; the normal example queries 601 points on [-3, 3].
std::vector<ConvergenceRow> nested_convergence_probe(const ExperimentConfig& config,
                                                     const std::vector<std::size_t>& n_grid);

/// Same probe for an arbitrary pair of models and idealized data kind.
std::vector<ConvergenceRow> nested_convergence_probe(const ModelSpec& null_model, const ModelSpec& alt_model,
                                                     const DgpSpec& data, const std::vector<double>& query,
                                                     const std::vector<std::size_t>& n_grid);

}  // namespace loolab
