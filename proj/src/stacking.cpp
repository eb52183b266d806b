#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "loolab/error.hpp"
#include "loolab/weights.hpp"

namespace loolab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Weights at or below this are candidates for being set exactly to zero.
constexpr double kSnapWeight = 1e-9;

// Row-stabilized densities: dens(i, k) = exp(m(i, k) - max_k m(i, k)).
struct Scaled {
  std::vector<double> dens;
  std::vector<double> row_max;
};

Scaled scale_rows(const PointwiseMatrix& m) {
  const std::size_t n = m.rows(), K = m.models();
  Scaled s{std::vector<double>(n * K), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double mx = kNegInf;
    for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, m(i, k));
    if (mx == kNegInf) {
      throw NumericalError("stacking: observation " + std::to_string(i) + " is impossible under every model");
    }
    s.row_max[i] = mx;
    for (std::size_t k = 0; k < K; ++k) s.dens[i * K + k] = std::exp(m(i, k) - mx);
  }
  return s;
}

struct Eval {
  double objective;
  std::vector<double> grad;  // normalized by n
};

Eval evaluate(const Scaled& s, std::span<const double> w, std::size_t n, std::size_t K) {
  Eval e{0.0, std::vector<double>(K, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &s.dens[i * K];
    double mix = 0.0;
    for (std::size_t k = 0; k < K; ++k) mix += w[k] * row[k];
    if (mix <= 0.0) {
      e.objective = kNegInf;
      for (std::size_t k = 0; k < K; ++k) {
        if (row[k] > 0.0) e.grad[k] = std::numeric_limits<double>::infinity();
      }
      continue;
    }
    e.objective += s.row_max[i] + std::log(mix);
    for (std::size_t k = 0; k < K; ++k) e.grad[k] += row[k] / mix;
  }
  for (double& g : e.grad) g /= static_cast<double>(n);
  return e;
}

double strict_residual(std::span<const double> w, std::span<const double> g) {
  double r = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    r = std::max(r, w[k] > 0.0 ? std::abs(g[k] - 1.0) : std::max(g[k] - 1.0, 0.0));
  }
  return r;
}

// Complementarity form, usable while no weight is exactly zero.
double soft_residual(std::span<const double> w, std::span<const double> g) {
  double r = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    r = std::max({r, w[k] * std::abs(g[k] - 1.0), g[k] - 1.0});
  }
  return r;
}

// Zero out vanishing weights whose gradient says they should be zero.
bool snap(std::vector<double>& w, std::span<const double> g) {
  bool changed = false;
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] > 0.0 && w[k] <= kSnapWeight && g[k] < 1.0) {
      w[k] = 0.0;
      changed = true;
    }
    total += w[k];
  }
  if (changed) {
    for (double& v : w) v /= total;
  }
  return changed;
}

// Projected Newton direction on the support: maximizes the local quadratic
// model subject to the weights still summing to one. Bitwise identical columns
// are merged and their step is split in proportion to the current weights, so
// the system stays nonsingular and ties keep their ratio. Returns false when
// no usable direction exists.
bool newton_direction(const Scaled& s, std::span<const double> w, std::span<const double> g, std::size_t n,
                      std::size_t K, std::vector<double>& dir) {
  std::vector<std::size_t> group(K, K), rep;
  for (std::size_t k = 0; k < K; ++k) {
    if (w[k] <= 0.0) continue;
    for (std::size_t r : rep) {
      bool same = true;
      for (std::size_t i = 0; i < n && same; ++i) same = s.dens[i * K + k] == s.dens[i * K + r];
      if (same) {
        group[k] = group[r];
        break;
      }
    }
    if (group[k] == K) {
      group[k] = rep.size();
      rep.push_back(k);
    }
  }
  const std::size_t m = rep.size();
  dir.assign(K, 0.0);
  if (m < 2) return false;
  const std::size_t dim = m + 1;
  std::vector<double> A(dim * (dim + 1), 0.0);  // augmented [A | rhs]
  auto at = [&](std::size_t r, std::size_t c) -> double& { return A[r * (dim + 1) + c]; };
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &s.dens[i * K];
    double mix = 0.0;
    for (std::size_t k = 0; k < K; ++k) mix += w[k] * row[k];
    const double inv2 = 1.0 / (mix * mix);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b <= a; ++b) at(a, b) += row[rep[a]] * row[rep[b]] * inv2;
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < a; ++b) at(b, a) = at(a, b) /= static_cast<double>(n);
    at(a, a) /= static_cast<double>(n);
    trace += at(a, a);
  }
  for (std::size_t a = 0; a < m; ++a) {
    at(a, a) += 1e-12 * trace;
    at(a, m) = at(m, a) = 1.0;
    at(a, dim) = g[rep[a]];
  }
  for (std::size_t c = 0; c < dim; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < dim; ++r)
      if (std::abs(at(r, c)) > std::abs(at(piv, c))) piv = r;
    if (at(piv, c) == 0.0) return false;
    if (piv != c)
      for (std::size_t j = 0; j <= dim; ++j) std::swap(at(piv, j), at(c, j));
    for (std::size_t r = c + 1; r < dim; ++r) {
      const double f = at(r, c) / at(c, c);
      for (std::size_t j = c; j <= dim; ++j) at(r, j) -= f * at(c, j);
    }
  }
  std::vector<double> x(dim);
  for (std::size_t c = dim; c-- > 0;) {
    double v = at(c, dim);
    for (std::size_t j = c + 1; j < dim; ++j) v -= at(c, j) * x[j];
    x[c] = v / at(c, c);
  }
  std::vector<double> mass(m, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    if (group[k] < K) mass[group[k]] += w[k];
  for (std::size_t k = 0; k < K; ++k)
    if (group[k] < K) dir[k] = x[group[k]] * (w[k] / mass[group[k]]);
  return std::all_of(dir.begin(), dir.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

double stacking_objective(std::span<const double> weights, const PointwiseMatrix& matrix) {
  if (weights.size() != matrix.models()) throw DomainError("stacking_objective: weight length mismatch");
  const auto s = scale_rows(matrix);
  return evaluate(s, weights, matrix.rows(), matrix.models()).objective;
}

std::vector<double> stacking_gradient(std::span<const double> weights, const PointwiseMatrix& matrix) {
  if (weights.size() != matrix.models()) throw DomainError("stacking_gradient: weight length mismatch");
  const auto s = scale_rows(matrix);
  return evaluate(s, weights, matrix.rows(), matrix.models()).grad;
}

double stacking_kkt_residual(std::span<const double> weights, const PointwiseMatrix& matrix) {
  return strict_residual(weights, stacking_gradient(weights, matrix));
}

// Exponentiated-gradient ascent from the barycenter. The step is accepted when
// the directional derivative at the new point is still non-negative, which for
// a concave objective guarantees monotone progress without comparing nearly
// equal objective values. Steps grow after acceptance and halve on rejection.
// Close to the optimum a Newton step on the support takes over.
WeightVector stacking(const PointwiseMatrix& matrix, const StackingOptions& options) {
  if (!(options.tol > 0.0)) throw DomainError("stacking: tol must be > 0");
  const std::size_t n = matrix.rows(), K = matrix.models();
  const auto s = scale_rows(matrix);

  std::vector<double> w(K, 1.0 / static_cast<double>(K));
  Eval cur = evaluate(s, w, n, K);
  double eta = 1.0;
  std::vector<double> trial(K), dir;

  WeightVector out;
  out.scheme = Scheme::Stacking;
  out.converged = false;

  auto finished = [&](const std::vector<double>& weights, const Eval& e) {
    return strict_residual(weights, e.grad) <= options.tol;
  };

  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    if (finished(w, cur)) {
      out.converged = true;
      break;
    }
    // A zeroed weight whose gradient now exceeds the support's re-enters.
    bool revived = false;
    for (std::size_t k = 0; k < K; ++k) {
      if (w[k] == 0.0 && cur.grad[k] > 1.0 + options.tol) {
        w[k] = 1e-6;
        revived = true;
      }
    }
    if (revived) {
      double total = 0.0;
      for (double v : w) total += v;
      for (double& v : w) v /= total;
      cur = evaluate(s, w, n, K);
      continue;
    }
    if (soft_residual(w, cur.grad) <= std::sqrt(options.tol)) {
      std::vector<double> snapped = w;
      if (snap(snapped, cur.grad)) {
        Eval e = evaluate(s, snapped, n, K);
        if (e.objective >= cur.objective) {
          w = std::move(snapped);
          cur = std::move(e);
          continue;
        }
      }
    }

    if (soft_residual(w, cur.grad) <= 1e-3 && newton_direction(s, w, cur.grad, n, K, dir)) {
      // Largest step keeping every weight non-negative; the blocking weight lands on zero.
      double t_max = std::numeric_limits<double>::infinity();
      std::size_t block = K;
      for (std::size_t k = 0; k < K; ++k) {
        if (dir[k] < 0.0 && w[k] / -dir[k] < t_max) {
          t_max = w[k] / -dir[k];
          block = k;
        }
      }
      const double before = strict_residual(w, cur.grad);
      bool taken = false;
      for (double t = std::min(1.0, t_max); t > 1e-12 && !taken; t *= 0.5) {
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          trial[k] = (t == t_max && k == block) ? 0.0 : std::max(w[k] + t * dir[k], 0.0);
          total += trial[k];
        }
        for (double& v : trial) v /= total;
        Eval next = evaluate(s, trial, n, K);
        if (next.objective > cur.objective || strict_residual(trial, next.grad) < before) {
          w = trial;
          cur = std::move(next);
          taken = true;
        }
      }
      if (taken) continue;
    }

    bool accepted = false;
    while (eta > 1e-300) {
      double gmax = kNegInf;
      for (std::size_t k = 0; k < K; ++k)
        if (w[k] > 0.0) gmax = std::max(gmax, cur.grad[k]);
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        trial[k] = w[k] > 0.0 ? w[k] * std::exp(eta * (cur.grad[k] - gmax)) : 0.0;
        total += trial[k];
      }
      for (double& v : trial) v /= total;

      Eval next = evaluate(s, trial, n, K);
      double slope = 0.0;
      for (std::size_t k = 0; k < K; ++k) slope += next.grad[k] * (trial[k] - w[k]);
      if (next.objective > kNegInf && slope >= 0.0 && trial != w) {
        w = trial;
        cur = std::move(next);
        eta *= 2.0;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // no representable improving step left
  }

  if (!out.converged && finished(w, cur)) out.converged = true;
  out.iterations = it;
  out.kkt_residual = strict_residual(w, cur.grad);
  out.weights = std::move(w);
  return out;
}

}  // namespace loolab
