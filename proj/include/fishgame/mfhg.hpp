#pragma once

// Time-dependent mean field harvesting game on a bounded domain:
//   -dV/dt - nu Lap V + s_h (u^2 + |grad V|^2) = 0,     V(T) = 0
//    dm/dt - nu Lap m + s_d div(m grad V)      = 0,     m(0) = m0
//    du/dt - mu Lap u = f(u, x) - m u^2,                u(0) = u0
// with no-flux boundaries. Each equation is stepped with implicit diffusion
// and explicit nonlinear or transport terms; the system is coupled by damped
// Picard sweeps over the whole time interval.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "fishgame/grid.hpp"
#include "fishgame/linalg.hpp"

namespace fishgame {

struct Monostable {
  double r = 1.0;  // f = r u (1 - u)
};

struct Bistable {
  double a = 0.25;  // f = u (u - a) (1 - u)
};

struct CustomReaction {
  std::function<double(double u, std::array<double, 2> x)> f;
};

using Reaction = std::variant<Monostable, Bistable, CustomReaction>;

inline double reaction_value(const Reaction& r, double u, std::array<double, 2> x) {
  if (const auto* m = std::get_if<Monostable>(&r)) return m->r * u * (1.0 - u);
  if (const auto* b = std::get_if<Bistable>(&r)) return u * (u - b->a) * (1.0 - u);
  return std::get<CustomReaction>(r).f(u, x);
}

/// Field of one time level per step: levels[n] lives at t = n * dt.
using TimeSeries = std::vector<Field>;

struct MfhgSpec {
  Grid grid = Grid::unit_interval(3);
  double T = 1.0;
  int steps = 100;
  double nu = 1.0;
  double mu = 1.0;
  Reaction reaction = Monostable{};
  Field u0;
  Field m0;
  double sweep_damping = 0.5;
  double sweep_tol = 1e-6;
  int max_sweeps = 200;
  double drift_sign = 1.0;  // +div(m grad V) as in the coupled system
  double hjb_sign = 1.0;    // +(u^2 + |grad V|^2)

  double dt() const { return T / steps; }
  double time(int n) const { return n * dt(); }

  void validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
    if (steps < 1) throw std::invalid_argument("steps must be at least 1");
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
    if (!(u0.grid == grid) || !(m0.grid == grid))
      throw std::invalid_argument("u0 and m0 must live on the spec grid");
    if (u0.min() < 0.0) throw std::invalid_argument("u0 must be nonnegative");
    if (m0.min() < 0.0) throw std::invalid_argument("m0 must be nonnegative");
    if (std::abs(integral(m0) - 1.0) > 1e-10)
      throw std::invalid_argument("m0 must integrate to 1, got " + format_number(integral(m0)));
    if (!(sweep_damping > 0.0 && sweep_damping <= 1.0))
      throw std::invalid_argument("sweep_damping must lie in (0, 1]");
    if (!(sweep_tol > 0.0)) throw std::invalid_argument("sweep_tol must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be at least 1");
    if (std::abs(drift_sign) != 1.0 || std::abs(hjb_sign) != 1.0)
      throw std::invalid_argument("drift_sign and hjb_sign must be +1 or -1");
    if (const auto* b = std::get_if<Bistable>(&reaction); b && !(b->a > 0.0 && b->a < 1.0))
      throw std::invalid_argument("bistable threshold a must lie in (0, 1)");
  }
};

/// True when the bistable reaction favours invasion, F(1) > 0 (a < 1/2).
inline bool invades(const Bistable& b) { return b.a > 0.0 && b.a < 0.5; }

struct MfhgState {
  TimeSeries V;
  TimeSeries m;
  TimeSeries u;
  int sweeps_used = 0;
  double sweep_residual = 0.0;
  bool converged = false;
  std::vector<std::string> warnings;
};

inline constexpr double kBlowup = 1e6;

namespace detail {

inline LinearSolveOptions tight_solve() {
  LinearSolveOptions o;
  o.rel_tol = 1e-14;
  return o;
}

// (I - D dt Lap) x = rhs
inline Field implicit_diffusion(double D, double dt, const Field& rhs) {
  return solve_operator(D * dt, Field(rhs.grid, 1.0), rhs, tight_solve());
}

inline void guard(const Field& f, const char* what, int level) {
  if (!f.finite() || sup_norm(f) > kBlowup)
    throw SolverError(std::string(what) + " blew up at time level " + std::to_string(level));
}

// Divergence of the upwind flux s * m * grad V, integrated over each node's
// trapezoid control volume and divided by it. Face fluxes are shared by the
// two neighbouring cells, so sum_k w_k div_k = 0 exactly.
inline Field upwind_divergence(const Field& m, const Field& V, double sign) {
  const Grid& g = m.grid;
  Field out(g, 0.0);
  const std::size_t nx = g.nodes(0);
  const std::size_t ny = g.dim() == 2 ? g.nodes(1) : 1;
  auto face = [&](std::size_t a, std::size_t b, double h, double area) {
    const double vel = sign * (V[b] - V[a]) / h;
    const double flux = area * vel * (vel > 0.0 ? m[a] : m[b]);
    out[a] += flux;
    out[b] -= flux;
  };
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double area = g.dim() == 2 ? g.axis_weight(1, iy) : 1.0;
    for (std::size_t ix = 0; ix + 1 < nx; ++ix)
      face(g.index(ix, iy), g.index(ix + 1, iy), g.spacing(0), area);
  }
  if (g.dim() == 2) {
    for (std::size_t iy = 0; iy + 1 < ny; ++iy)
      for (std::size_t ix = 0; ix < nx; ++ix)
        face(g.index(ix, iy), g.index(ix, iy + 1), g.spacing(1), g.axis_weight(0, ix));
  }
  for (std::size_t k = 0; k < g.size(); ++k) out[k] /= g.weight(k);
  return out;
}

// Largest face velocity |s (V_b - V_a) / h|.
inline double max_face_speed(const Field& V) {
  const Grid& g = V.grid;
  double s = 0.0;
  const std::size_t nx = g.nodes(0);
  const std::size_t ny = g.dim() == 2 ? g.nodes(1) : 1;
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      if (ix + 1 < nx) s = std::max(s, std::abs(V[g.index(ix + 1, iy)] - V[k]) / g.spacing(0));
      if (g.dim() == 2 && iy + 1 < ny)
        s = std::max(s, std::abs(V[g.index(ix, iy + 1)] - V[k]) / g.spacing(1));
    }
  return s;
}

}  // namespace detail

/// Backward sweep from V(T) = 0:
/// (I - nu dt Lap) V^n = V^{n+1} - dt s_h (u^{n+1}^2 + |grad V^{n+1}|^2).
inline TimeSeries hjb_backward(const MfhgSpec& spec, const TimeSeries& u) {
  if (u.size() != static_cast<std::size_t>(spec.steps) + 1)
    throw std::invalid_argument("u must have steps + 1 time levels");
  const double dt = spec.dt();
  TimeSeries V(u.size(), Field(spec.grid, 0.0));
  for (int n = spec.steps - 1; n >= 0; --n) {
    const Field& next = V[n + 1];
    const Field source = u[n + 1] * u[n + 1] + gradient_norm_squared(next);
    V[n] = detail::implicit_diffusion(spec.nu, dt, next - (dt * spec.hjb_sign) * source);
    detail::guard(V[n], "value function", n);
  }
  return V;
}

/// Forward Fokker-Planck sweep with conservative upwind transport:
/// (I - nu dt Lap) m^{n+1} = m^n - dt div_h(s_d m^n grad V^n).
/// Appends a warning to `warnings` when dt exceeds h / max|grad V|.
inline TimeSeries fp_forward(const MfhgSpec& spec, const TimeSeries& V,
                             std::vector<std::string>* warnings = nullptr) {
  if (V.size() != static_cast<std::size_t>(spec.steps) + 1)
    throw std::invalid_argument("V must have steps + 1 time levels");
  const double dt = spec.dt();
  const double h = spec.grid.min_spacing();
  TimeSeries m;
  m.reserve(V.size());
  m.push_back(spec.m0);
  bool warned = false;
  for (int n = 0; n < spec.steps; ++n) {
    const double speed = detail::max_face_speed(V[n]);
    if (!warned && speed > 0.0 && dt > h / speed) {
      warned = true;
      if (warnings)
        warnings->push_back("fokker-planck: dt = " + format_number(dt) + " exceeds h/max|grad V| = " +
                            format_number(h / speed) + " at level " + std::to_string(n));
    }
    Field rhs = m[n] - dt * detail::upwind_divergence(m[n], V[n], spec.drift_sign);
    Field next = detail::implicit_diffusion(spec.nu, dt, rhs);
    const double floor = -1e-12 * std::max(1.0, sup_norm(next));
    for (double& v : next.values) {
      if (v < floor)
        throw SolverError("fokker-planck produced negative density at level " + std::to_string(n + 1) +
                          "; reduce dt");
      v = std::max(v, 0.0);
    }
    m.push_back(std::move(next));
  }
  return m;
}

/// Forward fish sweep: (I - mu dt Lap) u^{n+1} = u^n + dt (f(u^n) - m^n u^n^2),
/// clipped at zero.
inline TimeSeries fish_forward(const MfhgSpec& spec, const TimeSeries& m) {
  if (m.size() != static_cast<std::size_t>(spec.steps) + 1)
    throw std::invalid_argument("m must have steps + 1 time levels");
  const double dt = spec.dt();
  TimeSeries u;
  u.reserve(m.size());
  u.push_back(spec.u0);
  for (int n = 0; n < spec.steps; ++n) {
    const Field& cur = u[n];
    Field rhs(spec.grid);
    for (std::size_t k = 0; k < rhs.size(); ++k)
      rhs[k] = cur[k] + dt * (reaction_value(spec.reaction, cur[k], spec.grid.point(k)) -
                              m[n][k] * cur[k] * cur[k]);
    Field next = detail::implicit_diffusion(spec.mu, dt, rhs);
    for (double& v : next.values) v = std::max(v, 0.0);
    detail::guard(next, "fish density", n + 1);
    u.push_back(std::move(next));
  }
  return u;
}

/// max over time levels of the L2 distance.
inline double series_distance(const TimeSeries& a, const TimeSeries& b) {
  double d = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, l2_distance(a[n], b[n]));
  return d;
}

/// Picard sweeps: u = fish(m), V = hjb(u), m <- w fp(V) + (1 - w) m, starting
/// from the pure-diffusion evolution of m0.
inline MfhgState mfhg_solve(const MfhgSpec& spec) {
  spec.validate();
  MfhgState st;
  const TimeSeries zero(spec.steps + 1, Field(spec.grid, 0.0));
  st.m = fp_forward(spec, zero, &st.warnings);
  for (int k = 1; k <= spec.max_sweeps; ++k) {
    st.u = fish_forward(spec, st.m);
    st.V = hjb_backward(spec, st.u);
    TimeSeries next = fp_forward(spec, st.V, &st.warnings);
    if (spec.sweep_damping != 1.0)
      for (std::size_t n = 0; n < next.size(); ++n)
        next[n] = spec.sweep_damping * next[n] + (1.0 - spec.sweep_damping) * st.m[n];
    st.sweep_residual = series_distance(next, st.m);
    st.m = std::move(next);
    st.sweeps_used = k;
    if (st.sweep_residual <= spec.sweep_tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

struct Feedback {
  std::vector<Field> b;
  Field alpha;
};

/// Maximizer of the agent Hamiltonian: b = grad V / 2, alpha = u / 2, or
/// b = grad V, alpha = u in the rescaled convention.
inline Feedback optimal_feedback(const Field& V, const Field& u, bool rescaled = false) {
  require_same_grid(V, u);
  const double f = rescaled ? 1.0 : 0.5;
  Feedback out;
  for (auto& c : gradient(V)) out.b.push_back(f * c);
  out.alpha = f * u;
  return out;
}

/// Reflects a point into the spec domain (no-flux boundaries).
inline std::array<double, 2> reflect_into(const Grid& g, std::array<double, 2> x) {
  for (int a = 0; a < g.dim(); ++a) {
    const double lo = g.lower(a), len = g.upper(a) - lo;
    double y = std::fmod(x[a] - lo, 2.0 * len);
    if (y < 0.0) y += 2.0 * len;
    x[a] = lo + (y > len ? 2.0 * len - y : y);
  }
  return x;
}

/// Riemann sum over time levels 0..steps-1 of (u(x, t) alpha - alpha^2 - |b|^2) dt.
inline double agent_payoff(const MfhgSpec& spec, const MfhgState& state,
                           const std::vector<std::array<double, 2>>& x_path,
                           const std::vector<std::array<double, 2>>& b_path,
                           const std::vector<double>& alpha_path) {
  const std::size_t n = static_cast<std::size_t>(spec.steps);
  if (x_path.size() < n || b_path.size() < n || alpha_path.size() < n || state.u.size() < n)
    throw std::invalid_argument("paths must cover every time step");
  double J = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double uval = interpolate(state.u[i], reflect_into(spec.grid, x_path[i]));
    const double a = alpha_path[i];
    const double b2 = b_path[i][0] * b_path[i][0] + b_path[i][1] * b_path[i][1];
    J += (uval * a - a * a - b2) * spec.dt();
  }
  return J;
}

struct FrontSample {
  double t = 0.0;
  double position = 0.0;
  double speed = std::numeric_limits<double>::quiet_NaN();
};

struct FrontSeries {
  std::vector<FrontSample> samples;
  std::vector<std::string> warnings;
};

/// Tracks the threshold crossing of a 1D front. When u is high on the left the
/// rightmost crossing is followed, otherwise the leftmost; speed is the
/// least-squares slope over the trailing `window` of time, signed so that
/// motion into the low region is positive.
inline FrontSeries front_speed(const MfhgSpec& spec, const TimeSeries& u, double threshold,
                               double window) {
  if (spec.grid.dim() != 1) throw std::invalid_argument("front tracking needs a 1D grid");
  FrontSeries out;
  if (u.empty()) return out;
  const Grid& g = spec.grid;
  const std::size_t N = g.size();
  const bool high_left = u.front()[0] >= u.front()[N - 1];
  const double dir = high_left ? 1.0 : -1.0;

  auto crossing = [&](const Field& f) -> std::optional<double> {
    if (high_left) {
      for (std::size_t k = N - 1; k-- > 0;)
        if ((f[k] - threshold) * (f[k + 1] - threshold) <= 0.0 && f[k] != f[k + 1])
          return g.coord(0, k) + g.spacing(0) * (f[k] - threshold) / (f[k] - f[k + 1]);
    } else {
      for (std::size_t k = 0; k + 1 < N; ++k)
        if ((f[k] - threshold) * (f[k + 1] - threshold) <= 0.0 && f[k] != f[k + 1])
          return g.coord(0, k) + g.spacing(0) * (f[k] - threshold) / (f[k] - f[k + 1]);
    }
    return std::nullopt;
  };

  std::size_t first = 0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    const auto x = crossing(u[n]);
    const bool at_edge = x && (*x <= g.lower(0) + g.spacing(0) || *x >= g.upper(0) - g.spacing(0));
    if (!x || at_edge) {
      out.warnings.push_back("front left the domain at t = " + format_number(spec.time(n)) +
                             "; series truncated");
      break;
    }
    FrontSample s{spec.time(n), *x};
    const double t0 = s.t - window;
    while (out.samples.size() > first && out.samples[first].t < t0) ++first;
    const std::size_t count = out.samples.size() - first + 1;
    if (count >= 2) {
      double st = 0.0, sx = 0.0, stt = 0.0, stx = 0.0;
      auto add = [&](double t, double p) {
        st += t;
        sx += p;
        stt += t * t;
        stx += t * p;
      };
      for (std::size_t i = first; i < out.samples.size(); ++i) add(out.samples[i].t, out.samples[i].position);
      add(s.t, s.position);
      const double c = static_cast<double>(count);
      const double den = c * stt - st * st;
      if (den > 0.0) s.speed = dir * (c * stx - st * sx) / den;
    }
    out.samples.push_back(s);
  }
  return out;
}

/// Time slices every `stride` levels: t,x[,y],V,m,u.
inline void write_mfhg_csv(std::ostream& os, const MfhgSpec& spec, const MfhgState& st, int stride = 1) {
  const Grid& g = spec.grid;
  os << (g.dim() == 2 ? "t,x,y,V,m,u\n" : "t,x,V,m,u\n");
  stride = std::max(1, stride);
  std::vector<int> levels;
  for (int n = 0; n <= spec.steps; n += stride) levels.push_back(n);
  if (levels.back() != spec.steps) levels.push_back(spec.steps);
  for (int n : levels) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto p = g.point(k);
      os << format_number(spec.time(n)) << ',' << format_number(p[0]);
      if (g.dim() == 2) os << ',' << format_number(p[1]);
      os << ',' << format_number(st.V[n][k]) << ',' << format_number(st.m[n][k]) << ','
         << format_number(st.u[n][k]) << '\n';
    }
  }
}

inline void write_front_csv(std::ostream& os, const FrontSeries& fs) {
  os << "t,front_position,speed_estimate\n";
  for (const auto& s : fs.samples)
    os << format_number(s.t) << ',' << format_number(s.position) << ',' << format_number(s.speed) << '\n';
}

}  // namespace fishgame
