#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "loolab/error.hpp"
#include "loolab/loo.hpp"
#include "loolab/models.hpp"
#include "support/oracles.hpp"

using namespace loolab;

TEST_CASE("gpd_fit recovers the shape of simulated tails") {
  SUBCASE("k = 0.5") {
    const auto x = oracle::gpd_sample(0.5, 1.0, 10000, 1234);
    const auto fit = gpd_fit(x);
    CHECK(std::abs(fit.k - 0.5) < 0.05);
    CHECK(fit.sigma == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("exponential, k = 0") {
    const auto x = oracle::gpd_sample(0.0, 1.0, 10000, 99);
    CHECK(std::abs(gpd_fit(x).k) < 0.05);
  }
  SUBCASE("light tail, k = -0.3") {
    const auto x = oracle::gpd_sample(-0.3, 2.0, 10000, 7);
    CHECK(std::abs(gpd_fit(x).k + 0.3) < 0.05);
  }
}

TEST_CASE("gpd_fit errors") {
  CHECK_THROWS_AS(gpd_fit(std::vector<double>{0.1, 0.2, 0.3, 0.4}), NumericalError);
  CHECK_THROWS_AS(gpd_fit(std::vector<double>(10, 0.5)), NumericalError);
  CHECK_THROWS_AS(gpd_fit(std::vector<double>{0.5, 0.1, 0.2, 0.3, 0.4}), DomainError);
}

TEST_CASE("weak prior shrinks toward 0.5") {
  const auto x = oracle::gpd_sample(0.1, 1.0, 20, 3);
  const auto raw = gpd_fit(x, false), shrunk = gpd_fit(x, true);
  CHECK(shrunk.k == doctest::Approx((raw.k * 20 + 5) / 30).epsilon(1e-12));
}

TEST_CASE("gpd_quantile inverts the cdf") {
  for (double k : {-0.4, 0.0, 0.3, 1.2}) {
    for (double p : {0.01, 0.5, 0.99}) {
      const double q = gpd_quantile(p, k, 1.7);
      const double cdf = k == 0.0 ? 1 - std::exp(-q / 1.7) : 1 - std::pow(1 + k * q / 1.7, -1 / k);
      CHECK(cdf == doctest::Approx(p).epsilon(1e-12));
    }
  }
}

TEST_CASE("psis_loo: exact beta posterior on ten ones") {
  // All ten ratios share one posterior sample, so a single draw set has
  // Monte Carlo sd near 0.017; the 0.02 band is checked on the median.
  const Dataset d{std::vector<double>(10, 1.0)};
  std::vector<double> err;
  for (std::uint64_t seed = 0; seed < 21; ++seed) {
    const auto res = psis_loo(oracle::beta_bernoulli_draws(1, 1, d, 4000, seed));
    err.push_back(std::abs(res.estimate.elpd - 10 * std::log(10.0 / 11.0)));
    for (double k : res.diagnostics.khat) CHECK(k < 0.7);
    CHECK(res.diagnostics.flagged.empty());
  }
  std::nth_element(err.begin(), err.begin() + 10, err.end());
  CHECK(err[10] < 0.02);
}

TEST_CASE("psis_loo: constant log-likelihood gives uniform weights") {
  const LogLikDraws draws(200, 5, std::vector<double>(1000, -1.25));
  const auto res = psis_loo(draws);
  CHECK(res.estimate.elpd == doctest::Approx(5 * -1.25).epsilon(1e-13));
  for (double k : res.diagnostics.khat) CHECK(k == -INFINITY);
  double khat = 0;
  const auto lw = psis_log_weights(std::vector<double>(200, 1.25), khat);
  for (double w : lw) CHECK(w == 0.0);
}

TEST_CASE("psis_loo: normal conjugate within 3 se of exact LOO") {
  const NormalConjugate m{0.0, 1.0, 1.0};
  const Dataset d = simulate({NormalIid{0.0, 1.0}, 31}, 20);
  const auto exact = elpd_from_pointwise(exact_loo_pointwise(ModelSpec(m), d));
  const auto res = psis_loo(oracle::normal_conjugate_draws(m, d, 4000, 8));
  CHECK(std::abs(res.estimate.elpd - exact.elpd) < 3 * res.estimate.se);
  CHECK(std::abs(res.estimate.elpd - exact.elpd) < 0.05);
}

TEST_CASE("psis_loo: error shrinks with more draws") {
  const NormalConjugate m{0.0, 1.0, 1.0};
  const Dataset d = simulate({NormalIid{0.5, 1.0}, 3}, 20);
  const double exact = elpd_from_pointwise(exact_loo_pointwise(ModelSpec(m), d)).elpd;
  std::vector<double> err_small, err_large;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    err_small.push_back(std::abs(psis_loo(oracle::normal_conjugate_draws(m, d, 500, seed)).estimate.elpd - exact));
    err_large.push_back(
        std::abs(psis_loo(oracle::normal_conjugate_draws(m, d, 4000, 100 + seed)).estimate.elpd - exact));
  }
  std::sort(err_small.begin(), err_small.end());
  std::sort(err_large.begin(), err_large.end());
  const double med_small = 0.5 * (err_small[9] + err_small[10]);
  const double med_large = 0.5 * (err_large[9] + err_large[10]);
  CHECK(med_large < med_small);
}

TEST_CASE("psis_loo flags a high-leverage observation") {
  // One far outlier under a tight prior: its leave-one-out posterior moves a lot.
  const NormalConjugate m{0.0, 10.0, 0.2};
  Dataset d = simulate({NormalIid{0.0, 0.2}, 5}, 10);
  d.values[4] = 6.0;
  const auto res = psis_loo(oracle::normal_conjugate_draws(m, d, 4000, 1));
  CHECK(res.diagnostics.khat[4] > 0.7);
  CHECK(std::find(res.diagnostics.flagged.begin(), res.diagnostics.flagged.end(), 4u) !=
        res.diagnostics.flagged.end());
}
