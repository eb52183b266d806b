#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "loolab/error.hpp"
#include "loolab/loo.hpp"

namespace loolab {

namespace {

constexpr std::size_t kMinExceedances = 5;
constexpr std::size_t kMinGridPoints = 30;

// Profile log-likelihood per observation of the GPD at b = -theta.
double profile_loglik(double theta, std::span<const double> x) {
  const double b = -theta;
  double k = 0.0;
  for (double v : x) k += std::log1p(b * v);
  k /= static_cast<double>(x.size());
  return std::log(b / k) - k - 1.0;
}

}  // namespace

// Zhang & Stephens (2009): posterior mean of theta = -k / sigma over a fixed
// grid of M candidates, weighted by the profile likelihood.
GpdFit gpd_fit(std::span<const double> exceedances, bool weak_prior) {
  const std::size_t n = exceedances.size();
  if (n < kMinExceedances) {
    throw NumericalError("gpd_fit: need at least " + std::to_string(kMinExceedances) +
                         " exceedances, got " + std::to_string(n));
  }
  if (!std::is_sorted(exceedances.begin(), exceedances.end())) {
    throw DomainError("gpd_fit: exceedances must be sorted ascending");
  }
  if (exceedances.front() < 0.0) throw DomainError("gpd_fit: exceedances must be >= 0");
  if (exceedances.back() - exceedances.front() <= 0.0) {
    throw NumericalError("gpd_fit: constant tail, shape is not identifiable");
  }

  const double prior = 3.0;
  const std::size_t m = kMinGridPoints + static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const double xmax = exceedances.back();
  // First quartile; ties at zero move up to the first positive exceedance.
  std::size_t q = static_cast<std::size_t>(std::floor(static_cast<double>(n) / 4.0 + 0.5)) - 1;
  while (exceedances[q] <= 0.0) ++q;
  const double xstar = exceedances[q];

  std::vector<double> theta(m), loglik(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double jj = static_cast<double>(j + 1);
    theta[j] = 1.0 / xmax + (1.0 - std::sqrt(static_cast<double>(m) / (jj - 0.5))) / prior / xstar;
    loglik[j] = static_cast<double>(n) * profile_loglik(theta[j], exceedances);
  }
  const double lmax = *std::max_element(loglik.begin(), loglik.end());
  double wsum = 0.0, theta_hat = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double w = std::exp(loglik[j] - lmax);
    wsum += w;
    theta_hat += w * theta[j];
  }
  theta_hat /= wsum;

  double k = 0.0;
  for (double v : exceedances) k += std::log1p(-theta_hat * v);
  k /= static_cast<double>(n);
  GpdFit fit;
  fit.sigma = -k / theta_hat;
  if (weak_prior) {
    const double nn = static_cast<double>(n);
    k = (k * nn + 10.0 * 0.5) / (nn + 10.0);
  }
  fit.k = std::isnan(k) ? std::numeric_limits<double>::infinity() : k;
  return fit;
}

double gpd_quantile(double p, double k, double sigma) {
  if (k == 0.0) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

}  // namespace loolab
