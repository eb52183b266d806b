#include "loolab/loo.hpp"

#include <cmath>
#include <string>

#include "loolab/error.hpp"

namespace loolab {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DomainError(std::string(what) + ": entry " + std::to_string(i) + " is not finite");
    }
  }
}

}  // namespace

double sum_standard_error(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double ref = values[0];
  double mean = 0.0;
  for (double v : values) mean += v - ref;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    const double d = (v - ref) - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  return std::sqrt(static_cast<double>(n) * var);
}

ElpdEstimate elpd_from_pointwise(std::span<const double> pointwise) {
  if (pointwise.size() < 2) throw DomainError("elpd: need at least 2 pointwise values");
  require_finite(pointwise, "elpd");
  ElpdEstimate out;
  out.pointwise.assign(pointwise.begin(), pointwise.end());
  for (double v : pointwise) out.elpd += v;
  out.se = sum_standard_error(pointwise);
  return out;
}

PairedDiff paired_diff(std::span<const double> pointwise_a, std::span<const double> pointwise_b) {
  if (pointwise_a.size() != pointwise_b.size()) {
    throw DomainError("paired_diff: length mismatch (" + std::to_string(pointwise_a.size()) + " vs " +
                      std::to_string(pointwise_b.size()) + ")");
  }
  if (pointwise_a.size() < 2) throw DomainError("paired_diff: need at least 2 observations");
  require_finite(pointwise_a, "paired_diff (a)");
  require_finite(pointwise_b, "paired_diff (b)");

  PairedDiff out;
  out.pointwise_diff.resize(pointwise_a.size());
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < pointwise_a.size(); ++i) {
    out.pointwise_diff[i] = pointwise_a[i] - pointwise_b[i];
    sum_a += pointwise_a[i];
    sum_b += pointwise_b[i];
  }
  out.diff = sum_a - sum_b;
  out.se_diff = sum_standard_error(out.pointwise_diff);
  return out;
}

LogLikDraws::LogLikDraws(std::size_t draws, std::size_t observations, std::vector<double> values)
    : draws_(draws), observations_(observations), values_(std::move(values)) {
  if (draws_ < kMinDraws) {
    throw DomainError("log-likelihood draws: need at least " + std::to_string(kMinDraws) +
                      " draws, got " + std::to_string(draws_));
  }
  if (observations_ == 0) throw DomainError("log-likelihood draws: no observations");
  if (values_.size() != draws_ * observations_) {
    throw DomainError("log-likelihood draws: expected " + std::to_string(draws_ * observations_) +
                      " values, got " + std::to_string(values_.size()));
  }
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) {
      throw DomainError("log-likelihood draws: draw " + std::to_string(j / observations_) +
                        ", observation " + std::to_string(j % observations_) + " is not finite");
    }
  }
}

std::vector<double> LogLikDraws::column(std::size_t i) const {
  std::vector<double> out(draws_);
  for (std::size_t s = 0; s < draws_; ++s) out[s] = (*this)(s, i);
  return out;
}

std::vector<std::size_t> flag_khat(std::span<const double> khat, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < khat.size(); ++i) {
    if (khat[i] > threshold) out.push_back(i);
  }
  return out;
}

}  // namespace loolab
