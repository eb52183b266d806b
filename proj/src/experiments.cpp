#include "loolab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "loolab/error.hpp"
#include "loolab/rng.hpp"

namespace loolab {

namespace {

constexpr std::uint64_t kDataStream = 0xda7a;
constexpr std::uint64_t kBootstrapStream = 0xb007;

void fail(const std::string& field, const std::string& what) { throw DomainError(field + ": " + what); }

DgpSpec idealized_dgp(int example_id) {
  switch (example_id) {
    case 1: return {IdealizedAllOnes{}, 0};
    case 2: return {IdealizedAlternatingPairs{}, 0};
    default: return {IdealizedAllZeros{}, 0};
  }
}

WeightVector compute_scheme(Scheme scheme, const ExperimentConfig& config, const PointwiseMatrix& matrix,
                            const std::pair<ModelSpec, ModelSpec>& models, const Dataset& data,
                            std::size_t n, std::size_t replication) {
  switch (scheme) {
    case Scheme::PseudoBma: return pseudo_bma(matrix);
    case Scheme::PseudoBmaPlus:
      return pseudo_bma_plus(matrix, config.bootstrap_samples,
                             derive_seed(config.seed, kBootstrapStream, replication, n));
    case Scheme::Stacking: return stacking(matrix, StackingOptions{config.tol, 100000});
    case Scheme::Bma: {
      const double lm[2] = {log_marginal_likelihood(models.first, data),
                            log_marginal_likelihood(models.second, data)};
      return bma(lm);
    }
  }
  throw DomainError("unknown scheme");
}

// Runs fn(r) for r in [0, count) on up to `threads` workers. Each index is
// handled exactly once and writes only its own slot, so output is schedule-free.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t r = 0; r < count; ++r) fn(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t r = next++; r < count; r = next++) fn(r);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (example_id < 1 || example_id > 3) fail("example_id", "must be 1, 2 or 3");
  if (n_grid.empty()) fail("n_grid", "must not be empty");
  if (n_grid.front() < 2) fail("n_grid", "sample sizes must be >= 2");
  for (std::size_t j = 1; j < n_grid.size(); ++j)
    if (n_grid[j] <= n_grid[j - 1]) fail("n_grid", "must be strictly increasing");
  if (schemes.empty()) fail("schemes", "must name at least one scheme");
  if (replications < 1) fail("replications", "must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold", "must lie in (0, 1)");
  if (bootstrap_samples < 100) fail("B", "must be >= 100");
  if (!(tol > 0.0)) fail("tol", "must be > 0");
  if (example_id <= 2) {
    if (!(a > 0.0 && std::isfinite(a))) fail("a", "must be > 0");
    if (!(b > 0.0 && std::isfinite(b))) fail("b", "must be > 0");
  } else if (!(tau0 > 0.0 && std::isfinite(tau0))) {
    fail("tau0", "must be > 0");
  }

  if (mode == Mode::Idealized) {
    if (replications != 1) fail("replications", "idealized mode is deterministic and needs exactly 1");
    if (!epsilons.empty()) fail("epsilon", "not used in idealized mode");
    return;
  }
  if (epsilons.empty()) fail("epsilon", "epsilon mode needs at least one value");
  const double upper = example_id == 1 ? 1.0 : example_id == 2 ? 0.5 : HUGE_VAL;
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    const double e = epsilons[j];
    if (!(e >= kMinEpsilon)) fail("epsilon", "must be >= 2^-45 to stay resolvable in double precision");
    if (!(e <= upper) || !std::isfinite(e)) fail("epsilon", "too large for example " + std::to_string(example_id));
    if (j > 0 && e <= epsilons[j - 1]) fail("epsilon", "grid must be strictly increasing");
  }
}

std::pair<ModelSpec, ModelSpec> example_models(const ExperimentConfig& config) {
  switch (config.example_id) {
    case 1: return {ModelSpec(BernoulliPoint{1.0}), ModelSpec(BetaBernoulli{config.a, config.b})};
    case 2: return {ModelSpec(BernoulliPoint{0.5}), ModelSpec(BetaBernoulli{config.a, config.b})};
    case 3: return {ModelSpec(NormalPoint{0.0, 1.0}), ModelSpec(NormalConjugate{0.0, config.tau0, 1.0})};
    default: throw DomainError("example_id: must be 1, 2 or 3");
  }
}

DgpSpec example_dgp(const ExperimentConfig& config, double epsilon, std::size_t replication) {
  if (config.mode == Mode::Idealized) return idealized_dgp(config.example_id);
  // Replication r uses the same uniform stream for every epsilon, so data at
  // different epsilons are coupled.
  const std::uint64_t seed = derive_seed(config.seed, kDataStream, replication);
  switch (config.example_id) {
    case 1: return {BernoulliIid{1.0 - epsilon}, seed};
    case 2: return {BernoulliIid{0.5 + epsilon}, seed};
    default: return {NormalIid{epsilon, 1.0}, seed};
  }
}

PointwiseMatrix example_matrix(const ExperimentConfig& config, const Dataset& data) {
  const auto models = example_models(config);
  return PointwiseMatrix::from_columns(
      {exact_loo_pointwise(models.first, data), exact_loo_pointwise(models.second, data)}, {"H0", "H1"});
}

Trajectory run_example(const ExperimentConfig& config) {
  config.validate();
  if (config.mode == Mode::Epsilon && config.epsilons.size() != 1)
    throw DomainError("epsilon: run_example takes exactly one epsilon");
  const double epsilon = config.mode == Mode::Epsilon ? config.epsilons.front() : 0.0;
  const auto models = example_models(config);
  const std::size_t n_max = config.n_grid.back();
  const Dataset ideal = simulate(idealized_dgp(config.example_id), n_max);

  const std::size_t per_rep = config.n_grid.size() * config.schemes.size();
  Trajectory out;
  out.epsilon = epsilon;
  out.cells.resize(config.replications * per_rep);

  parallel_for(config.replications, config.threads, [&](std::size_t r) {
    const Dataset full = simulate(example_dgp(config, epsilon, r), n_max);
    std::size_t slot = r * per_rep;
    for (std::size_t n : config.n_grid) {
      Dataset data;
      data.values.assign(full.values.begin(), full.values.begin() + static_cast<std::ptrdiff_t>(n));
      const bool deviates = !std::equal(data.values.begin(), data.values.end(), ideal.values.begin());
      const PointwiseMatrix matrix = PointwiseMatrix::from_columns(
          {exact_loo_pointwise(models.first, data), exact_loo_pointwise(models.second, data)}, {"H0", "H1"});
      for (Scheme scheme : config.schemes) {
        Cell& cell = out.cells[slot++];
        cell.scheme = scheme;
        cell.epsilon = epsilon;
        cell.n = n;
        cell.replication = r;
        cell.deviates_from_idealized = deviates;
        try {
          cell.weights = compute_scheme(scheme, config, matrix, models, data, n, r);
        } catch (const Error& e) {
          cell.error = e.what();
        }
      }
    }
  });
  return out;
}

std::vector<double> median_complex_weight(const std::vector<Cell>& cells, Scheme scheme, double epsilon,
                                          const std::vector<std::size_t>& n_grid) {
  std::vector<double> out;
  out.reserve(n_grid.size());
  for (std::size_t n : n_grid) {
    std::vector<double> w;
    for (const Cell& c : cells) {
      if (c.scheme == scheme && c.epsilon == epsilon && c.n == n && c.weights) w.push_back(c.weights->weights[1]);
    }
    out.push_back(w.empty() ? std::nan("") : median(std::move(w)));
  }
  return out;
}

std::optional<std::size_t> find_n_star(const std::vector<double>& medians, const std::vector<std::size_t>& n_grid,
                                       double threshold) {
  for (std::size_t j = 0; j < n_grid.size() && j < medians.size(); ++j) {
    if (medians[j] >= threshold) return n_grid[j];
  }
  return std::nullopt;
}

SweepResult run_epsilon_sweep(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> eps_grid =
      config.mode == Mode::Epsilon ? config.epsilons : std::vector<double>{0.0};

  SweepResult out;
  for (double eps : eps_grid) {
    ExperimentConfig single = config;
    if (config.mode == Mode::Epsilon) single.epsilons = {eps};
    Trajectory t = run_example(single);

    for (std::size_t n : config.n_grid) {
      std::size_t total = 0, deviating = 0;
      for (const Cell& c : t.cells) {
        if (c.n == n && c.scheme == config.schemes.front()) {
          ++total;
          deviating += c.deviates_from_idealized;
        }
      }
      out.deviations.push_back({eps, n, static_cast<double>(deviating) / static_cast<double>(total)});
    }
    for (Scheme scheme : config.schemes) {
      const auto medians = median_complex_weight(t.cells, scheme, eps, config.n_grid);
      out.crossings.push_back({scheme, eps, find_n_star(medians, config.n_grid, config.threshold)});
    }
    for (Cell& c : t.cells) {
      if (!c.error.empty()) ++out.error_count;
      out.cells.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<ConvergenceRow> nested_convergence_probe(const ModelSpec& null_model, const ModelSpec& alt_model,
                                                     const DgpSpec& data, const std::vector<double>& query,
                                                     const std::vector<std::size_t>& n_grid) {
  std::vector<ConvergenceRow> out;
  for (std::size_t n : n_grid) {
    const Dataset d = simulate(data, n);
    double gap = 0.0;
    for (double y : query) {
      const double p0 = std::exp(posterior_predictive_logpdf(null_model, d, y));
      const double p1 = std::exp(posterior_predictive_logpdf(alt_model, d, y));
      gap = std::max(gap, std::abs(p0 - p1));
    }
    out.push_back({n, gap});
  }
  return out;
}

std::vector<ConvergenceRow> nested_convergence_probe(const ExperimentConfig& config,
                                                     const std::vector<std::size_t>& n_grid) {
  const auto models = example_models(config);
  std::vector<double> query;
  if (config.example_id <= 2) {
    query = {0.0, 1.0};
  } else {
    for (int j = 0; j <= 600; ++j) query.push_back(-3.0 + 0.01 * j);
  }
  return nested_convergence_probe(models.first, models.second, idealized_dgp(config.example_id), query, n_grid);
}

}  // namespace loolab
