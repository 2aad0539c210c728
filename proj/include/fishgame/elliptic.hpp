#pragma once

// Steady logistic-diffusive state, linear reaction-diffusion solves and
// principal Neumann eigenvalues.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "fishgame/grid.hpp"
#include "fishgame/linalg.hpp"

namespace fishgame {

/// Resources K on a grid with diffusivity mu.
class LogisticProblem {
 public:
  /// Checked constructor: 0 <= K <= 1 and mean(K) in (0, 1).
  static LogisticProblem make(Field K, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("diffusivity mu must be positive");
    if (K.min() < 0.0 || K.max() > 1.0)
      throw std::invalid_argument("resources K must lie in [0, 1]");
    const double k0 = mean(K);
    if (!(k0 > 0.0 && k0 < 1.0)) throw std::invalid_argument("mean(K) must lie in (0, 1)");
    return LogisticProblem(std::move(K), mu);
  }

  /// No bounds on K; used for best responses (K minus opponents) and MFHG reuse.
  static LogisticProblem unchecked(Field K, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("diffusivity mu must be positive");
    return LogisticProblem(std::move(K), mu);
  }

  const Grid& grid() const { return K_.grid; }
  const Field& K() const { return K_; }
  double mu() const { return mu_; }
  double K0() const { return K0_; }

 private:
  LogisticProblem(Field K, double mu) : K_(std::move(K)), mu_(mu), K0_(mean(K_)) {}

  Field K_;
  double mu_;
  double K0_;
};

struct SolveReport {
  Field solution;
  int iterations = 0;
  double final_residual = 0.0;
  /// Tolerance actually enforced: the requested one, raised to the
  /// round-off floor of the discrete residual on very fine grids.
  double tolerance = 0.0;
  bool converged = false;
  /// False when only the trivial state was found.
  bool positive = true;
};

struct SteadyOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

struct Eigenpair {
  double value;
  Field vector;
};

struct EigenOptions {
  double tol = 1e-13;
  int max_iter = 50000;
};

namespace detail {

// -mu*Lap(theta) - theta*(K - alpha - theta)
inline Field logistic_residual(double mu, const Field& drive, const Field& theta) {
  Field lap = laplacian_apply(theta);
  Field r(theta.grid);
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = -mu * lap[k] - theta[k] * (drive[k] - theta[k]);
  return r;
}

inline double residual_floor(const Grid& g, double mu, double scale) {
  double s = 4.0 / (g.spacing(0) * g.spacing(0));
  if (g.dim() == 2) s += 4.0 / (g.spacing(1) * g.spacing(1));
  return 8.0 * std::numeric_limits<double>::epsilon() * (mu * s + 4.0) * std::max(scale, 1.0);
}

inline SolveReport newton_logistic(double mu, const Field& drive, Field theta,
                                   const SteadyOptions& opt) {
  SolveReport rep;
  Field res = logistic_residual(mu, drive, theta);
  double rnorm = sup_norm(res);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const double floor = residual_floor(theta.grid, mu, std::max(sup_norm(theta), sup_norm(drive)));
    if (rnorm <= std::max(opt.tol, floor)) break;
    Field coeff(theta.grid);
    for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = -(drive[k] - 2.0 * theta[k]);
    Field step = solve_operator(mu, coeff, -res);
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-10) {
      Field trial = theta + t * step;
      Field tres = logistic_residual(mu, drive, trial);
      const double tn = sup_norm(tres);
      if (std::isfinite(tn) && tn <= (1.0 - 1e-4 * t) * rnorm) {
        theta = std::move(trial);
        res = std::move(tres);
        rnorm = tn;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Stagnation at round-off: the full Newton step is below resolution.
      if (sup_norm(step) <= 1e-13 * std::max(1.0, sup_norm(theta))) break;
      throw SolverError("Newton line search failed at residual " + format_number(rnorm));
    }
  }
  rep.solution = std::move(theta);
  rep.iterations = it;
  rep.final_residual = rnorm;
  rep.tolerance = std::max(
      opt.tol, residual_floor(rep.solution.grid, mu,
                              std::max(sup_norm(rep.solution), sup_norm(drive))));
  rep.converged = rnorm <= rep.tolerance;
  return rep;
}

}  // namespace detail

/// General linear Neumann solve  -mu*Lap(w) - potential*w = rhs.
/// The operator must be positive (principal eigenvalue > 0).
inline Field solve_linear_reaction(const Grid& grid, double mu, const Field& potential,
                                   const Field& rhs, const LinearSolveOptions& opt = {}) {
  if (!(potential.grid == grid) || !(rhs.grid == grid))
    throw std::invalid_argument("solve_linear_reaction: grid mismatch");
  return solve_operator(mu, -potential, rhs, opt);
}

/// -Lap(v) = rhs with Neumann conditions and zero mean.
inline Field solve_zero_mean_poisson(const Field& rhs, const LinearSolveOptions& opt = {}) {
  if (std::abs(mean(rhs)) > 1e-10)
    throw AdmissibilityError("Neumann Poisson right-hand side has nonzero mean " +
                             format_number(mean(rhs)));
  return solve_neumann_poisson(rhs, opt);
}

/// Smallest eigenvalue of -mu*Lap - potential with Neumann conditions,
/// together with a positive eigenfunction normalised to mean(phi^2) = 1.
/// Shifted inverse power iteration on the symmetric discrete operator.
inline Eigenpair principal_eigenvalue(const Grid& grid, double mu, const Field& potential,
                                      const EigenOptions& opt = {}) {
  if (!(potential.grid == grid)) throw std::invalid_argument("principal_eigenvalue: grid mismatch");
  const double shift = potential.max() + 1.0;
  // (A + shift) is positive definite with smallest eigenvalue >= 1.
  const Field coeff = -potential + shift;
  auto normalise = [](Field& f) {
    const double n = std::sqrt(mean_product(f, f));
    for (double& v : f.values) v /= n;
  };
  auto rayleigh = [&](const Field& f) {
    Field af = detail::apply_operator(mu, -potential, f);
    return mean_product(f, af) / mean_product(f, f);
  };
  Field phi(grid, 1.0);
  normalise(phi);
  double lambda = rayleigh(phi);
  for (int it = 0; it < opt.max_iter; ++it) {
    Field next = solve_operator(mu, coeff, phi);
    normalise(next);
    const double lam = rayleigh(next);
    const double change = std::abs(lam - lambda);
    const double drift = l2_distance(next, phi);
    phi = std::move(next);
    lambda = lam;
    if (change <= opt.tol * std::max(1.0, std::abs(lam)) && drift <= 1e-9) {
      if (mean(phi) < 0.0) phi = -phi;
      return {lambda, std::move(phi)};
    }
  }
  throw SolverError("inverse power iteration did not converge");
}

/// Positive steady state of -mu*Lap(theta) = theta*(K - alpha - theta), Neumann.
inline SolveReport solve_steady(const LogisticProblem& problem, const Field& alpha,
                                const SteadyOptions& opt = {}) {
  require_same_grid(problem.K(), alpha);
  if (alpha.min() < 0.0) throw AdmissibilityError("fishing strategy must be nonnegative");
  if (!(mean(alpha) < problem.K0()))
    throw AdmissibilityError("admissibility violated: mean(alpha) = " + format_number(mean(alpha)) +
                             " >= mean(K) = " + format_number(problem.K0()));
  const double mu = problem.mu();
  const Field drive = problem.K() - alpha;
  const double k0 = problem.K0();

  Field start = map(drive, [k0](double d) { return std::max(d, 0.01 * k0); });
  const double restart_value = std::max(mean(drive), 0.01 * k0);
  for (int attempt = 0; attempt < 3; ++attempt) {
    SolveReport rep;
    try {
      rep = detail::newton_logistic(mu, drive, start, opt);
    } catch (const SolverError&) {
      if (attempt == 2) throw;
      start = Field(problem.grid(), restart_value * (attempt + 1));
      continue;
    }
    const bool trivial = sup_norm(rep.solution) < 1e-8;
    const bool negative = rep.solution.min() < -1e-10;
    if (!trivial && !negative) {
      for (double& v : rep.solution.values) v = std::max(v, 0.0);
      return rep;
    }
    if (trivial && principal_eigenvalue(problem.grid(), mu, drive).value >= 0.0) {
      rep.solution = Field(problem.grid(), 0.0);
      rep.positive = false;
      return rep;
    }
    start = Field(problem.grid(), restart_value * (attempt + 1));
  }
  throw SolverError("steady state: positive branch not found after restarts");
}

}  // namespace fishgame
