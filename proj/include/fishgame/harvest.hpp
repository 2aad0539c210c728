#pragma once

// Single-player optimal fishing: the fishing output J(alpha) = mean(alpha*theta),
// its adjoint-based derivatives, projection onto the L-infinity / L1
// constraint sets, projected gradient ascent, and the large-diffusivity
// functionals J0 and J1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fishgame/elliptic.hpp"
#include "fishgame/grid.hpp"

namespace fishgame {

enum class ConstraintMode { Equality, Inequality };

inline const char* to_string(ConstraintMode m) {
  return m == ConstraintMode::Equality ? "equality" : "inequality";
}

/// Pointwise cap kappa and volume budget V0 (a mean).
struct StrategyConstraints {
  double kappa = 1.0;
  double V0 = 0.1;
  ConstraintMode mode = ConstraintMode::Inequality;

  void validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (!(V0 > 0.0)) throw std::invalid_argument("V0 must be positive");
    if (V0 > kappa) throw std::invalid_argument("infeasible constraints: V0 > kappa");
  }
};

/// Threshold tau with mean(clamp(g + tau, 0, kappa)) = V0, by bisection.
inline double bathtub_shift(const Field& g, double kappa, double V0, double tol = 1e-12) {
  auto volume = [&](double tau) {
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      s += g.grid.weight(k) * std::clamp(g[k] + tau, 0.0, kappa);
    return s / g.grid.volume();
  };
  double lo = -g.max();
  double hi = kappa - g.min();
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (volume(mid) < V0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (mid == lo && mid == hi) break;
  }
  return 0.5 * (lo + hi);
}

/// L2 projection onto {0 <= alpha <= kappa, mean(alpha) = V0} (Equality) or
/// {..., mean(alpha) <= V0} (Inequality).
inline Field project(const Field& g, const StrategyConstraints& c) {
  c.validate();
  if (c.mode == ConstraintMode::Inequality) {
    Field clamped = map(g, [&](double v) { return std::clamp(v, 0.0, c.kappa); });
    if (mean(clamped) <= c.V0) return clamped;
  }
  const double tau = bathtub_shift(g, c.kappa, c.V0);
  return map(g, [&](double v) { return std::clamp(v + tau, 0.0, c.kappa); });
}

/// State, adjoint, value and gradient density at one strategy.
struct HarvestEval {
  Field theta;
  Field adjoint;
  Field gradient;  // (1 - p) * theta
  double value = 0.0;
};

/// J(alpha) = mean(alpha * theta_alpha).
inline double fishing_output(const LogisticProblem& problem, const Field& alpha) {
  const auto rep = solve_steady(problem, alpha);
  return mean_product(alpha, rep.solution);
}

/// -mu*Lap(p) - p*(K - alpha - 2*theta) = alpha.
inline Field adjoint_state(const LogisticProblem& problem, const Field& alpha, const Field& theta) {
  const Field potential = problem.K() - alpha - 2.0 * theta;
  return solve_linear_reaction(problem.grid(), problem.mu(), potential, alpha);
}

inline HarvestEval evaluate_harvest(const LogisticProblem& problem, const Field& alpha) {
  HarvestEval e;
  auto rep = solve_steady(problem, alpha);
  if (!rep.converged) throw SolverError("steady state did not converge");
  e.theta = std::move(rep.solution);
  e.adjoint = adjoint_state(problem, alpha, e.theta);
  e.gradient = zip(e.adjoint, e.theta, [](double p, double t) { return (1.0 - p) * t; });
  e.value = mean_product(alpha, e.theta);
  return e;
}

/// L2 gradient density of J: dJ(alpha)[h] = mean(g * h).
inline Field gateaux_gradient(const LogisticProblem& problem, const Field& alpha) {
  return evaluate_harvest(problem, alpha).gradient;
}

/// Second derivative J''(alpha)[h, h] = 2 [mean((1-p) h dtheta) - mean(p dtheta^2)],
/// with -mu*Lap(dtheta) - dtheta*(K - alpha - 2 theta) = -h*theta.
inline double gateaux_second(const LogisticProblem& problem, const Field& alpha, const Field& h) {
  const auto e = evaluate_harvest(problem, alpha);
  const Field potential = problem.K() - alpha - 2.0 * e.theta;
  const Field dtheta = solve_linear_reaction(problem.grid(), problem.mu(), potential, -(h * e.theta));
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double w = h.grid.weight(k);
    a += w * (1.0 - e.adjoint[k]) * h[k] * dtheta[k];
    b += w * e.adjoint[k] * dtheta[k] * dtheta[k];
  }
  return 2.0 * (a - b) / h.grid.volume();
}

enum class StartKind { Constant, BangBangLeft, BangBangRight };

struct OptimizeOptions {
  double tol = 1e-7;
  int max_iter = 5000;
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_increase = 1e-4;
  std::vector<StartKind> starts{StartKind::Constant, StartKind::BangBangLeft,
                                StartKind::BangBangRight};
  /// Additional starting strategies, tried after `starts` (projected first).
  std::vector<Field> extra_starts;
  /// Two local optima closer than this in L2 count as the same.
  double distinct_tol = 1e-4;
};

struct LocalOptimum {
  Field alpha;
  double J = 0.0;
};

struct OptimizeReport {
  Field alpha_star;
  Field theta;
  Field switch_function;  // (1 - p) * theta
  double J_value = 0.0;
  int iterations = 0;
  double projected_gradient_norm = 0.0;
  bool saturated_volume = false;
  bool converged = false;
  /// Distinct end points over all starts, best first.
  std::vector<LocalOptimum> local_optima;
};

/// Bang-bang start kappa * 1_{x <= x0 + l} (left) or 1_{x >= x1 - l} (right),
/// projected so that its volume matches V0 exactly on the grid.
inline Field bang_bang_start(const Grid& grid, const StrategyConstraints& c, bool left) {
  const double frac = std::min(1.0, c.V0 / c.kappa);
  const double len = frac * (grid.upper(0) - grid.lower(0));
  Field f = Field::from_function(grid, [&](double x, double) {
    const bool in = left ? (x <= grid.lower(0) + len) : (x >= grid.upper(0) - len);
    return in ? c.kappa : 0.0;
  });
  StrategyConstraints eq = c;
  eq.mode = ConstraintMode::Equality;
  return project(f, eq);
}

inline Field make_start(const Grid& grid, const StrategyConstraints& c, StartKind kind) {
  switch (kind) {
    case StartKind::Constant:
      return Field(grid, c.V0);
    case StartKind::BangBangLeft:
      return bang_bang_start(grid, c, true);
    case StartKind::BangBangRight:
      return bang_bang_start(grid, c, false);
  }
  return Field(grid, c.V0);
}

/// Projected gradient ascent with Armijo backtracking from one start.
inline OptimizeReport optimize_from(const LogisticProblem& problem, const StrategyConstraints& c,
                                    const Field& start, const OptimizeOptions& opt = {}) {
  c.validate();
  if (!(c.V0 < problem.K0()))
    throw AdmissibilityError("V0 must be below mean(K) = " + format_number(problem.K0()));
  Field alpha = project(start, c);
  HarvestEval cur = evaluate_harvest(problem, alpha);
  OptimizeReport rep;
  double pg_norm = 0.0;
  bool stalled = false;
  int flat = 0;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    double step = opt.initial_step;
    bool accepted = false;
    bool first = true;
    while (step > 1e-14) {
      Field trial = project(alpha + step * cur.gradient, c);
      Field delta = trial - alpha;
      const double dist = l2_norm(delta);
      if (first) {
        pg_norm = dist / step;
        first = false;
        if (pg_norm <= opt.tol) break;
      }
      if (dist == 0.0) break;
      HarvestEval next = evaluate_harvest(problem, trial);
      if (next.value > cur.value &&
          next.value >= cur.value + opt.sufficient_increase * mean_product(cur.gradient, delta)) {
        const double floor = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(cur.value);
        flat = next.value - cur.value <= floor ? flat + 1 : 0;
        alpha = std::move(trial);
        cur = std::move(next);
        accepted = true;
        break;
      }
      step *= opt.shrink;
    }
    if (!accepted || flat >= 5) {
      // No ascent left above round-off: stationary to machine precision.
      stalled = pg_norm > opt.tol;
      if (accepted) ++it;
      break;
    }
  }
  rep.converged = pg_norm <= opt.tol || stalled;
  rep.iterations = it;
  rep.projected_gradient_norm = pg_norm;
  rep.J_value = cur.value;
  rep.saturated_volume = std::abs(mean(alpha) - c.V0) <= 1e-8;
  rep.theta = std::move(cur.theta);
  rep.switch_function = std::move(cur.gradient);
  rep.alpha_star = std::move(alpha);
  rep.local_optima.push_back({rep.alpha_star, rep.J_value});
  return rep;
}

/// Multi-start projected gradient ascent; returns the best end point and
/// lists every distinct local optimum reached.
inline OptimizeReport optimize_single(const LogisticProblem& problem, const StrategyConstraints& c,
                                      const OptimizeOptions& opt = {}) {
  std::vector<Field> starts;
  for (auto kind : opt.starts) starts.push_back(make_start(problem.grid(), c, kind));
  for (const auto& s : opt.extra_starts) starts.push_back(s);
  if (starts.empty()) starts.push_back(make_start(problem.grid(), c, StartKind::Constant));

  std::optional<OptimizeReport> best;
  std::vector<LocalOptimum> optima;
  for (const auto& s : starts) {
    OptimizeReport r = optimize_from(problem, c, s, opt);
    const bool seen = std::any_of(optima.begin(), optima.end(), [&](const LocalOptimum& o) {
      return l2_distance(o.alpha, r.alpha_star) <= opt.distinct_tol;
    });
    if (!seen) optima.push_back({r.alpha_star, r.J_value});
    if (!best || r.J_value > best->J_value) best = std::move(r);
  }
  std::stable_sort(optima.begin(), optima.end(),
                   [](const LocalOptimum& a, const LocalOptimum& b) { return a.J > b.J; });
  best->local_optima = std::move(optima);
  return std::move(*best);
}

/// CSV with columns alpha, theta, switch, followed by a summary comment line.
inline void write_optimize_csv(std::ostream& os, const OptimizeReport& r) {
  const Field cols[] = {r.alpha_star, r.theta, r.switch_function};
  const std::string names[] = {"alpha", "theta", "switch"};
  write_fields_csv(os, cols, names);
}

inline void write_optimize_summary(std::ostream& os, const OptimizeReport& r) {
  os << "J,iterations,projected_gradient_norm,saturated_volume,converged\n"
     << format_number(r.J_value) << ',' << r.iterations << ','
     << format_number(r.projected_gradient_norm) << ',' << (r.saturated_volume ? 1 : 0) << ','
     << (r.converged ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// Large-diffusivity asymptotics.

/// J0 = V (K0 - V) for a strategy of mean V.
inline double j0_eval(double V, double K0) {
  if (V < 0.0 || V > K0) throw std::invalid_argument("j0_eval: need 0 <= V <= K0");
  return V * (K0 - V);
}

/// Optimal volume for J0 under the given constraint mode.
inline double j0_argmax(double K0, const StrategyConstraints& c) {
  return c.mode == ConstraintMode::Equality ? c.V0 : std::min(c.V0, 0.5 * K0);
}

namespace detail {
// v̂ with -Lap(v̂) = M0 (K - alpha - M0), mean zero.
inline Field hat_v(const Field& K, const Field& alpha, double V0, double K0) {
  const double M0 = K0 - V0;
  Field rhs = M0 * (K - alpha - M0);
  return solve_zero_mean_poisson(rhs);
}

// Discrete Dirichlet energy mean(|grad v|^2) as mean(v * (-Lap v)).
inline double dirichlet_energy(const Field& v) { return -mean_product(v, laplacian_apply(v)); }
}  // namespace detail

/// J1(alpha) = ((2V0 - K0)/M0^2) mean|grad v̂|^2 + mean(K v̂),  M0 = K0 - V0.
inline double j1_eval(const Field& K, const Field& alpha, double V0, double K0) {
  const double M0 = K0 - V0;
  const Field v = detail::hat_v(K, alpha, V0, K0);
  return (2.0 * V0 - K0) / (M0 * M0) * detail::dirichlet_energy(v) + mean_product(K, v);
}

/// Gradient density of J1: -M0 (C1 v̂ + q), C1 = 2(2V0 - K0)/M0^2,
/// -Lap(q) = K - K0 with zero mean.
inline Field j1_gradient(const Field& K, const Field& alpha, double V0, double K0) {
  const double M0 = K0 - V0;
  const double C1 = 2.0 * (2.0 * V0 - K0) / (M0 * M0);
  const Field v = detail::hat_v(K, alpha, V0, K0);
  const Field q = solve_zero_mean_poisson(K - mean(K));
  return -M0 * (C1 * v + q);
}

/// J1''[h, h] = (2(2V0 - K0)/M0^2) mean|grad dv|^2 with -Lap(dv) = -M0 h.
inline double j1_second(const Field& h, double V0, double K0) {
  const double M0 = K0 - V0;
  const Field dv = solve_zero_mean_poisson(-M0 * (h - mean(h)));
  return 2.0 * (2.0 * V0 - K0) / (M0 * M0) * detail::dirichlet_energy(dv);
}

/// Norm of the gradient density after removing its mean (the part seen by
/// equality-constrained perturbations).
inline double zero_mean_norm(const Field& g) { return l2_norm(g - mean(g)); }

/// kappa * 1_[a, a + l] with l = V0 / kappa (1D), projected to the exact volume.
inline Field interval_indicator(const Grid& g, const StrategyConstraints& c, double a) {
  if (g.dim() != 1) throw std::invalid_argument("interval strategies are one-dimensional");
  const double len = c.V0 / c.kappa * (g.upper(0) - g.lower(0));
  StrategyConstraints eq = c;
  eq.mode = ConstraintMode::Equality;
  return project(Field::from_function(g, [&](double x, double) {
                   return (x >= a - 1e-12 && x <= a + len + 1e-12) ? c.kappa : 0.0;
                 }),
                 eq);
}

struct IntervalSample {
  double start = 0.0;
  double J1 = 0.0;
};

/// J1 over `samples` interval strategies with left ends evenly spaced from the
/// left end of the domain to the right-end position.
inline std::vector<IntervalSample> j1_interval_sweep(const Field& K, const StrategyConstraints& c, int samples) {
  const Grid& g = K.grid;
  const double K0 = mean(K);
  const double last = g.upper(0) - c.V0 / c.kappa * (g.upper(0) - g.lower(0));
  std::vector<IntervalSample> out;
  for (int i = 0; i < samples; ++i) {
    const double a = g.lower(0) + (last - g.lower(0)) * i / (samples - 1);
    out.push_back({a, j1_eval(K, interval_indicator(g, c, a), c.V0, K0)});
  }
  return out;
}

}  // namespace fishgame
