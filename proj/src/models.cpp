#include "loolab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "loolab/error.hpp"
#include "loolab/rng.hpp"

namespace loolab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double normal_logpdf(double y, double mean, double var) {
  const double d = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

// log of theta^y (1 - theta)^(1-y) with 0 * log 0 = 0.
double point_bernoulli_logpmf(double theta0, double y) {
  if (y == 1.0) return theta0 > 0.0 ? std::log(theta0) : kNegInf;
  return theta0 < 1.0 ? std::log1p(-theta0) : kNegInf;
}

std::size_t count_successes(std::span<const double> values) {
  std::size_t s = 0;
  for (double y : values) s += (y == 1.0);
  return s;
}

// Posterior of the mean after m observations summing to total.
struct NormalPosterior {
  double mean;
  double var;
};

NormalPosterior normal_posterior(const NormalConjugate& m, double count, double total) {
  const double prior_prec = 1.0 / (m.tau0 * m.tau0);
  const double lik_prec = count / (m.sigma * m.sigma);
  const double prec = prior_prec + lik_prec;
  return {(m.mu0 * prior_prec + total / (m.sigma * m.sigma)) / prec, 1.0 / prec};
}

}  // namespace

ModelSpec::ModelSpec(BernoulliPoint m) : family_(m) {
  require(m.theta0 >= 0.0 && m.theta0 <= 1.0, "BernoulliPoint: theta0 must lie in [0, 1]");
}

ModelSpec::ModelSpec(BetaBernoulli m) : family_(m) {
  require(positive_finite(m.a) && positive_finite(m.b), "BetaBernoulli: a and b must be > 0");
}

ModelSpec::ModelSpec(NormalPoint m) : family_(m) {
  require(std::isfinite(m.mu0), "NormalPoint: mu0 must be finite");
  require(positive_finite(m.sigma), "NormalPoint: sigma must be > 0");
}

ModelSpec::ModelSpec(NormalConjugate m) : family_(m) {
  require(std::isfinite(m.mu0), "NormalConjugate: mu0 must be finite");
  require(positive_finite(m.tau0), "NormalConjugate: tau0 must be > 0");
  require(positive_finite(m.sigma), "NormalConjugate: sigma must be > 0");
}

bool ModelSpec::is_binary() const noexcept {
  return std::holds_alternative<BernoulliPoint>(family_) ||
         std::holds_alternative<BetaBernoulli>(family_);
}

std::string ModelSpec::name() const {
  std::ostringstream os;
  os.precision(6);
  std::visit(overloaded{
                 [&](const BernoulliPoint& m) { os << "BernoulliPoint(theta0=" << m.theta0 << ")"; },
                 [&](const BetaBernoulli& m) { os << "BetaBernoulli(a=" << m.a << ",b=" << m.b << ")"; },
                 [&](const NormalPoint& m) {
                   os << "NormalPoint(mu0=" << m.mu0 << ",sigma=" << m.sigma << ")";
                 },
                 [&](const NormalConjugate& m) {
                   os << "NormalConjugate(mu0=" << m.mu0 << ",tau0=" << m.tau0 << ",sigma=" << m.sigma
                      << ")";
                 },
             },
             family_);
  return os.str();
}

void check_compatible(const ModelSpec& model, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double y = values[i];
    if (model.is_binary()) {
      if (y != 0.0 && y != 1.0) {
        throw DomainError(model.name() + ": observation " + std::to_string(i) +
                          " is not 0/1");
      }
    } else if (!std::isfinite(y)) {
      throw DomainError(model.name() + ": observation " + std::to_string(i) + " is not finite");
    }
  }
}

std::vector<double> exact_loo_pointwise(const ModelSpec& model, const Dataset& data) {
  const std::size_t n = data.size();
  if (n < 2) throw DomainError("leave-one-out needs at least 2 observations");
  check_compatible(model, data.values);

  std::vector<double> out(n);
  std::visit(
      overloaded{
          [&](const BernoulliPoint& m) {
            for (std::size_t i = 0; i < n; ++i) out[i] = point_bernoulli_logpmf(m.theta0, data.values[i]);
          },
          [&](const BetaBernoulli& m) {
            // Dropping y_i removes one success (y_i = 1) or one failure (y_i = 0).
            const std::size_t s = count_successes(data.values);
            const double ones = static_cast<double>(s);
            const double zeros = static_cast<double>(n - s);
            const double denom = m.a + m.b + static_cast<double>(n) - 1.0;
            const double log_p1 = std::log((m.a + ones - 1.0) / denom);
            const double log_p0 = std::log((m.b + zeros - 1.0) / denom);
            for (std::size_t i = 0; i < n; ++i) out[i] = data.values[i] == 1.0 ? log_p1 : log_p0;
          },
          [&](const NormalPoint& m) {
            const double var = m.sigma * m.sigma;
            for (std::size_t i = 0; i < n; ++i) out[i] = normal_logpdf(data.values[i], m.mu0, var);
          },
          [&](const NormalConjugate& m) {
            // Sum of deviations from mu0 keeps the centred case exact.
            double total_dev = 0.0;
            for (double y : data.values) total_dev += y - m.mu0;
            const double lik_var = m.sigma * m.sigma;
            const auto post = normal_posterior(m, static_cast<double>(n - 1), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
              const double y = data.values[i];
              const double shift = post.var * (total_dev - (y - m.mu0)) / lik_var;
              out[i] = normal_logpdf(y, m.mu0 + shift, lik_var + post.var);
            }
          },
      },
      model.family());
  return out;
}

double log_marginal_likelihood(const ModelSpec& model, const Dataset& data) {
  check_compatible(model, data.values);
  const double n = static_cast<double>(data.size());
  return std::visit(
      overloaded{
          [&](const BernoulliPoint& m) {
            const double s = static_cast<double>(count_successes(data.values));
            double out = 0.0;
            if (s > 0) out += m.theta0 > 0.0 ? s * std::log(m.theta0) : kNegInf;
            if (n - s > 0) out += m.theta0 < 1.0 ? (n - s) * std::log1p(-m.theta0) : kNegInf;
            return out;
          },
          [&](const BetaBernoulli& m) {
            const double s = static_cast<double>(count_successes(data.values));
            return log_beta(m.a + s, m.b + n - s) - log_beta(m.a, m.b);
          },
          [&](const NormalPoint& m) {
            double out = 0.0;
            for (double y : data.values) out += normal_logpdf(y, m.mu0, m.sigma * m.sigma);
            return out;
          },
          [&](const NormalConjugate& m) {
            // y ~ N(mu0 1, sigma^2 I + tau0^2 11'): determinant lemma and
            // Sherman-Morrison give the density without forming the matrix.
            const double s2 = m.sigma * m.sigma;
            const double t2 = m.tau0 * m.tau0;
            double sum_d = 0.0, sum_d2 = 0.0;
            for (double y : data.values) {
              const double d = y - m.mu0;
              sum_d += d;
              sum_d2 += d * d;
            }
            const double logdet = n * std::log(s2) + std::log1p(n * t2 / s2);
            const double quad = (sum_d2 - t2 * sum_d * sum_d / (s2 + n * t2)) / s2;
            return -0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + quad);
          },
      },
      model.family());
}

double posterior_predictive_logpdf(const ModelSpec& model, const Dataset& data, double y_new) {
  check_compatible(model, data.values);
  check_compatible(model, std::span<const double>(&y_new, 1));
  const double n = static_cast<double>(data.size());
  return std::visit(
      overloaded{
          [&](const BernoulliPoint& m) { return point_bernoulli_logpmf(m.theta0, y_new); },
          [&](const BetaBernoulli& m) {
            const double s = static_cast<double>(count_successes(data.values));
            const double denom = m.a + m.b + n;
            return y_new == 1.0 ? std::log((m.a + s) / denom) : std::log((m.b + n - s) / denom);
          },
          [&](const NormalPoint& m) { return normal_logpdf(y_new, m.mu0, m.sigma * m.sigma); },
          [&](const NormalConjugate& m) {
            double total = 0.0;
            for (double y : data.values) total += y;
            const auto post = normal_posterior(m, n, total);
            return normal_logpdf(y_new, post.mean, m.sigma * m.sigma + post.var);
          },
      },
      model.family());
}

Dataset simulate(const DgpSpec& dgp, std::size_t n) {
  if (n == 0) throw DomainError("simulate: n must be >= 1");
  Dataset out;
  out.values.resize(n);
  std::visit(overloaded{
                 [&](const BernoulliIid& d) {
                   if (!(d.theta >= 0.0 && d.theta <= 1.0))
                     throw DomainError("BernoulliIid: theta must lie in [0, 1]");
                   for (std::size_t i = 0; i < n; ++i)
                     out.values[i] = uniform_at(dgp.seed, i) < d.theta ? 1.0 : 0.0;
                 },
                 [&](const NormalIid& d) {
                   if (!std::isfinite(d.mu) || !positive_finite(d.sigma))
                     throw DomainError("NormalIid: need finite mu and sigma > 0");
                   for (std::size_t i = 0; i < n; ++i)
                     out.values[i] = d.mu + d.sigma * normal_at(dgp.seed, i);
                 },
                 [&](const IdealizedAllOnes&) { std::fill(out.values.begin(), out.values.end(), 1.0); },
                 [&](const IdealizedAlternatingPairs&) {
                   for (std::size_t i = 0; i < n; ++i) out.values[i] = (i % 2 == 0) ? 1.0 : 0.0;
                 },
                 [&](const IdealizedAllZeros&) { std::fill(out.values.begin(), out.values.end(), 0.0); },
             },
             dgp.kind);
  return out;
}

}  // namespace loolab
