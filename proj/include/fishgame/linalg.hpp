#pragma once

// Linear solves for Neumann operators of the form  -D*Lap(w) + c(x)*w.
// 1D uses a direct tridiagonal (Thomas) solve. 2D uses conjugate gradient
// with a Jacobi preconditioner on the trapezoid-weighted system W*A, which
// is symmetric because the mirrored-ghost Laplacian is self-adjoint in the
// trapezoid inner product.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fishgame/grid.hpp"

namespace fishgame {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AdmissibilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LinearSolveOptions {
  double rel_tol = 1e-12;
  std::size_t max_iter = 0;  // 0: 20 * unknowns
};

namespace detail {

// Solves a tridiagonal system in place. sub[0] and sup[n-1] are ignored.
inline std::vector<double> thomas(std::vector<double> sub, std::vector<double> diag,
                                  std::vector<double> sup, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (diag[i - 1] == 0.0 || !std::isfinite(diag[i - 1]))
      throw SolverError("tridiagonal solve: zero pivot");
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (diag[n - 1] == 0.0) throw SolverError("tridiagonal solve: zero pivot");
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
  return x;
}

// y = (-D*Lap + c) x
inline Field apply_operator(double diffusivity, const Field& coeff, const Field& x) {
  Field lap = laplacian_apply(x);
  Field y(x.grid);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = -diffusivity * lap[k] + coeff[k] * x[k];
  return y;
}

inline double weighted_dot(const Grid& g, const std::vector<double>& a,
                           const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += g.weight(k) * a[k] * b[k];
  return s;
}

// Preconditioned CG on W*A x = W*b, written with W folded into the inner
// products: r is the unweighted residual b - A x, <u,v>_W the trapezoid dot.
// When `zero_mean` is set, iterates and residuals are projected onto the
// trapezoid-mean-zero subspace (pure Neumann Poisson).
inline Field pcg(double diffusivity, const Field& coeff, const Field& rhs,
                 const LinearSolveOptions& opt, bool zero_mean) {
  const Grid& g = rhs.grid;
  const std::size_t n = g.size();
  const std::size_t max_iter = opt.max_iter ? opt.max_iter : 20 * n;
  double lap_diag = 2.0 / (g.spacing(0) * g.spacing(0));
  if (g.dim() == 2) lap_diag += 2.0 / (g.spacing(1) * g.spacing(1));

  auto project = [&](Field& f) {
    if (!zero_mean) return;
    const double m = mean(f);
    for (double& v : f.values) v -= m;
  };

  Field x(g);
  Field r = rhs;
  project(r);
  const double bnorm = std::sqrt(weighted_dot(g, r.values, r.values));
  if (bnorm == 0.0) return x;

  std::vector<double> inv_diag(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = diffusivity * lap_diag + coeff[k];
    inv_diag[k] = (zero_mean || d <= 0.0) ? 1.0 : 1.0 / d;
  }
  Field z(g);
  for (std::size_t k = 0; k < n; ++k) z[k] = inv_diag[k] * r[k];
  project(z);
  Field p = z;
  double rz = weighted_dot(g, r.values, z.values);
  for (std::size_t it = 0; it < max_iter; ++it) {
    Field ap = apply_operator(diffusivity, coeff, p);
    const double pap = weighted_dot(g, p.values, ap.values);
    if (!(pap > 0.0)) throw SolverError("conjugate gradient: operator not positive definite");
    const double step = rz / pap;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += step * p[k];
      r[k] -= step * ap[k];
    }
    project(r);
    const double rnorm = std::sqrt(weighted_dot(g, r.values, r.values));
    if (rnorm <= opt.rel_tol * bnorm) {
      project(x);
      return x;
    }
    for (std::size_t k = 0; k < n; ++k) z[k] = inv_diag[k] * r[k];
    project(z);
    const double rz_new = weighted_dot(g, r.values, z.values);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  throw SolverError("conjugate gradient did not converge in " + std::to_string(max_iter) +
                    " iterations");
}

}  // namespace detail

/// Solves (-D*Lap + c) w = rhs with homogeneous Neumann conditions.
inline Field solve_operator(double diffusivity, const Field& coeff, const Field& rhs,
                            const LinearSolveOptions& opt = {}) {
  require_same_grid(coeff, rhs);
  const Grid& g = rhs.grid;
  if (g.dim() == 1) {
    const std::size_t n = g.size();
    const double a = diffusivity / (g.spacing(0) * g.spacing(0));
    std::vector<double> sub(n, -a), diag(n), sup(n, -a);
    for (std::size_t i = 0; i < n; ++i) diag[i] = 2.0 * a + coeff[i];
    sup[0] = -2.0 * a;
    sub[n - 1] = -2.0 * a;
    Field w(g, detail::thomas(std::move(sub), std::move(diag), std::move(sup), rhs.values));
    if (!w.finite()) throw SolverError("linear solve produced non-finite values");
    return w;
  }
  return detail::pcg(diffusivity, coeff, rhs, opt, false);
}

/// Pure Neumann Poisson problem -Lap w = rhs with zero trapezoid mean.
/// rhs must have (numerically) zero mean.
inline Field solve_neumann_poisson(const Field& rhs, const LinearSolveOptions& opt = {}) {
  const Grid& g = rhs.grid;
  const double rm = mean(rhs);
  Field r = rhs - rm;
  Field w(g);
  if (g.dim() == 1) {
    // The weighted rows sum to zero, so row 0 is redundant: pin w0 = 0 and
    // solve the remaining nonsingular system, then remove the mean.
    const std::size_t n = g.size();
    const double a = 1.0 / (g.spacing(0) * g.spacing(0));
    const std::size_t m = n - 1;
    std::vector<double> sub(m, -a), diag(m, 2.0 * a), sup(m, -a), b(m);
    for (std::size_t i = 0; i < m; ++i) b[i] = r[i + 1];
    sub[m - 1] = -2.0 * a;
    auto x = detail::thomas(std::move(sub), std::move(diag), std::move(sup), std::move(b));
    for (std::size_t i = 0; i < m; ++i) w[i + 1] = x[i];
  } else {
    w = detail::pcg(1.0, Field(g, 0.0), r, opt, true);
  }
  const double wm = mean(w);
  for (double& v : w.values) v -= wm;
  return w;
}

}  // namespace fishgame
