#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace loolab {

// Conjugate model families. All densities below are closed form.

/// Bernoulli likelihood with theta fixed at theta0 in [0, 1].
struct BernoulliPoint {
  double theta0;
};

/// Bernoulli likelihood with a Beta(a, b) prior on theta.
struct BetaBernoulli {
  double a;
  double b;
};

/// Normal likelihood with mean fixed at mu0 and known sd sigma.
struct NormalPoint {
  double mu0;
  double sigma;
};

/// Normal likelihood with known sd sigma and a Normal(mu0, tau0^2) prior on the mean.
struct NormalConjugate {
  double mu0;
  double tau0;
  double sigma;
};

using ModelFamily = std::variant<BernoulliPoint, BetaBernoulli, NormalPoint, NormalConjugate>;

/// A validated model: hyperparameters are checked on construction.
class ModelSpec {
 public:
  ModelSpec(BernoulliPoint m);
  ModelSpec(BetaBernoulli m);
  ModelSpec(NormalPoint m);
  ModelSpec(NormalConjugate m);

  const ModelFamily& family() const noexcept { return family_; }
  bool is_binary() const noexcept;
  /// Human-readable label, e.g. "BetaBernoulli(a=1,b=1)".
  std::string name() const;

 private:
  ModelFamily family_;
};

/// Ordered observations. Bernoulli data are coded 0/1.
struct Dataset {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> view() const noexcept { return values; }
  bool operator==(const Dataset&) const = default;
};

// Data-generating processes used by the experiments.

struct BernoulliIid {
  double theta;
};
struct NormalIid {
  double mu;
  double sigma;
};
struct IdealizedAllOnes {};
/// 1, 0, 1, 0, ... : every consecutive pair holds exactly one success.
struct IdealizedAlternatingPairs {};
struct IdealizedAllZeros {};

using DgpKind = std::variant<BernoulliIid, NormalIid, IdealizedAllOnes, IdealizedAlternatingPairs,
                             IdealizedAllZeros>;

struct DgpSpec {
  DgpKind kind;
  std::uint64_t seed = 0;
};

/// log p(y_i | y_{-i}) for every i, in closed form. Requires n >= 2.
///
/// Entries may be -infinity when an observation contradicts a boundary point
/// mass (theta0 in {0, 1}).
std::vector<double> exact_loo_pointwise(const ModelSpec& model, const Dataset& data);

/// log p(y | M). For point masses at the boundary, 0 * log 0 is taken as 0.
double log_marginal_likelihood(const ModelSpec& model, const Dataset& data);

/// log p(y_new | y) under the posterior given all of `data` (may be empty).
double posterior_predictive_logpdf(const ModelSpec& model, const Dataset& data, double y_new);

/// Deterministic given (kind, seed, n). Element i depends only on (seed, i),
/// so simulate(d, n) is a prefix of simulate(d, m) for m > n.
Dataset simulate(const DgpSpec& dgp, std::size_t n);

/// Throws DomainError unless every value is admissible for the model.
void check_compatible(const ModelSpec& model, std::span<const double> values);

}  // namespace loolab
