#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "loolab/error.hpp"
#include "loolab/loo.hpp"

namespace loolab {

namespace {

std::size_t tail_length(std::size_t draws) {
  const double s = static_cast<double>(draws);
  return static_cast<std::size_t>(std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(s))));
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace

std::vector<double> psis_log_weights(std::span<const double> log_ratios, double& khat) {
  const std::size_t draws = log_ratios.size();
  const double raw_max = *std::max_element(log_ratios.begin(), log_ratios.end());
  std::vector<double> lw(draws);
  for (std::size_t s = 0; s < draws; ++s) lw[s] = log_ratios[s] - raw_max;

  khat = -std::numeric_limits<double>::infinity();
  const std::size_t m = tail_length(draws);
  if (m < 5 || m >= draws) return lw;

  std::vector<std::size_t> order(draws);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lw[a] < lw[b]; });

  const double cutoff = lw[order[draws - m - 1]];
  const double exp_cutoff = std::exp(cutoff);
  std::vector<double> exceed(m);
  for (std::size_t j = 0; j < m; ++j) exceed[j] = std::exp(lw[order[draws - m + j]]) - exp_cutoff;

  if (exceed.back() - exceed.front() <= 0.0) return lw;

  const GpdFit fit = gpd_fit(exceed, /*weak_prior=*/true);
  khat = fit.k;
  if (std::isfinite(fit.k)) {
    for (std::size_t j = 0; j < m; ++j) {
      const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
      lw[order[draws - m + j]] = std::log(gpd_quantile(p, fit.k, fit.sigma) + exp_cutoff);
    }
  }
  // Truncate at the raw maximum, which is 0 after the shift.
  for (double& v : lw) v = std::min(v, 0.0);
  return lw;
}

PsisResult psis_loo(const LogLikDraws& draws, double khat_threshold) {
  const std::size_t n = draws.observations();
  const std::size_t s_count = draws.draws();
  std::vector<double> pointwise(n), khat(n);
  std::vector<double> log_ratios(s_count), joint(s_count);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < s_count; ++s) log_ratios[s] = -draws(s, i);
    const auto lw = psis_log_weights(log_ratios, khat[i]);
    for (std::size_t s = 0; s < s_count; ++s) joint[s] = lw[s] + draws(s, i);
    pointwise[i] = log_sum_exp(joint) - log_sum_exp(lw);
  }

  PsisResult out;
  out.estimate = elpd_from_pointwise(pointwise);
  out.diagnostics.flagged = flag_khat(khat, khat_threshold);
  out.diagnostics.khat = std::move(khat);
  out.diagnostics.threshold = khat_threshold;
  return out;
}

}  // namespace loolab
