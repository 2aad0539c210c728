#pragma once

// Multi-player fishing games. Player i chooses alpha_i under its own
// constraints and earns I_i = mean(alpha_i * theta), where theta is the
// steady state for the total effort sum_j alpha_j. Nash equilibria are
// searched with sequential (Gauss-Seidel) best responses.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fishgame/harvest.hpp"

namespace fishgame {

struct GameSpec {
  LogisticProblem problem;
  std::vector<StrategyConstraints> players;
  double tol = 1e-6;     // L2 stopping distance between successive iterates
  int max_rounds = 200;
  double relaxation = 1.0;  // omega in (0, 1]
  OptimizeOptions optimizer = default_optimizer();

  /// Best responses start from a constant and from the player's current
  /// strategy (added per call).
  static OptimizeOptions default_optimizer() {
    OptimizeOptions o;
    o.starts = {StartKind::Constant};
    return o;
  }

  void validate() const {
    if (players.empty()) throw std::invalid_argument("game needs at least one player");
    double total = 0.0;
    for (const auto& c : players) {
      c.validate();
      total += c.V0;
    }
    if (!(total < problem.K0()))
      throw AdmissibilityError("sum of budgets " + format_number(total) +
                               " must be below mean(K) = " + format_number(problem.K0()));
    if (!(relaxation > 0.0 && relaxation <= 1.0))
      throw std::invalid_argument("relaxation must lie in (0, 1]");
  }
};

struct NashReport {
  std::vector<Field> strategies;
  Field theta;
  std::vector<double> payoffs;
  double total_harvest = 0.0;
  int rounds = 0;
  bool converged = false;
  double eps_nash_certificate = 0.0;
  /// max_i ||alpha_i^{k+1} - alpha_i^k||_L2 in the last round
  double last_step = 0.0;
};

inline Field total_effort(const Grid& grid, const std::vector<Field>& strategies) {
  Field sum(grid, 0.0);
  for (const auto& a : strategies) sum = sum + a;
  return sum;
}

/// Steady state for the combined effort of all players.
inline Field joint_state(const LogisticProblem& problem, const std::vector<Field>& strategies) {
  auto rep = solve_steady(problem, total_effort(problem.grid(), strategies));
  if (!rep.converged) throw SolverError("joint steady state did not converge");
  return std::move(rep.solution);
}

/// Optimal reply to fixed opponents: single-player problem with resources
/// K - sum of the opponents' efforts.
inline OptimizeReport best_response(const LogisticProblem& problem, const std::vector<Field>& others,
                                    const StrategyConstraints& c,
                                    const OptimizeOptions& opt = GameSpec::default_optimizer()) {
  if (others.empty()) return optimize_single(problem, c, opt);
  const Field reduced = problem.K() - total_effort(problem.grid(), others);
  return optimize_single(LogisticProblem::unchecked(reduced, problem.mu()), c, opt);
}

inline std::vector<double> payoffs(const std::vector<Field>& strategies, const Field& theta) {
  std::vector<double> out;
  out.reserve(strategies.size());
  for (const auto& a : strategies) out.push_back(mean_product(a, theta));
  return out;
}

namespace detail {
inline std::vector<Field> all_but(const std::vector<Field>& s, std::size_t i) {
  std::vector<Field> out;
  for (std::size_t j = 0; j < s.size(); ++j)
    if (j != i) out.push_back(s[j]);
  return out;
}
}  // namespace detail

/// Largest unilateral improvement available to any player:
/// max_i (best-response payoff - current payoff). Uses all default starts
/// plus the current strategy.
inline double eps_nash_check(const GameSpec& spec, const std::vector<Field>& strategies) {
  spec.validate();
  const Field theta = joint_state(spec.problem, strategies);
  OptimizeOptions opt = spec.optimizer;
  opt.starts = {StartKind::Constant, StartKind::BangBangLeft, StartKind::BangBangRight};
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const double current = mean_product(strategies[i], theta);
    OptimizeOptions o = opt;
    o.extra_starts = {strategies[i]};
    const auto br = best_response(spec.problem, detail::all_but(strategies, i), spec.players[i], o);
    worst = std::max(worst, br.J_value - current);
  }
  return worst;
}

/// Sequential best-response iteration: player 1, then 2, ..., n in each round.
inline NashReport nash_fixed_point(const GameSpec& spec, std::vector<Field> strategies) {
  spec.validate();
  if (strategies.size() != spec.players.size())
    throw std::invalid_argument("one initial strategy per player required");
  for (std::size_t i = 0; i < strategies.size(); ++i)
    strategies[i] = project(strategies[i], spec.players[i]);

  NashReport rep;
  for (int round = 1; round <= spec.max_rounds; ++round) {
    double step = 0.0;
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      OptimizeOptions o = spec.optimizer;
      o.extra_starts.push_back(strategies[i]);
      auto br = best_response(spec.problem, detail::all_but(strategies, i), spec.players[i], o);
      Field next = spec.relaxation == 1.0
                       ? std::move(br.alpha_star)
                       : spec.relaxation * br.alpha_star + (1.0 - spec.relaxation) * strategies[i];
      step = std::max(step, l2_distance(next, strategies[i]));
      strategies[i] = std::move(next);
    }
    rep.rounds = round;
    rep.last_step = step;
    if (step <= spec.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.theta = joint_state(spec.problem, strategies);
  rep.payoffs = payoffs(strategies, rep.theta);
  rep.total_harvest = mean_product(total_effort(spec.problem.grid(), strategies), rep.theta);
  rep.eps_nash_certificate = eps_nash_check(spec, strategies);
  rep.strategies = std::move(strategies);
  return rep;
}

inline std::vector<Field> constant_starts(const GameSpec& spec) {
  std::vector<Field> s;
  for (const auto& c : spec.players) s.emplace_back(spec.problem.grid(), c.V0);
  return s;
}

/// (equilibrium total harvest, cooperative optimum with pooled caps and budgets).
inline std::pair<double, double> price_of_anarchy(const GameSpec& spec, const NashReport& nash) {
  StrategyConstraints pooled{0.0, 0.0, ConstraintMode::Inequality};
  for (const auto& c : spec.players) {
    pooled.kappa += c.kappa;
    pooled.V0 += c.V0;
  }
  OptimizeOptions opt;
  const auto coop = optimize_single(spec.problem, pooled, opt);
  return {nash.total_harvest, coop.J_value};
}

/// Evaluates mean((beta - alpha) theta_{alpha,beta}) for alpha = beta = V0 and
/// mean((gamma - eta) theta_{gamma,eta}) for gamma = 1_(0,V0), eta = 1_(1-V0,1).
/// A potential function would force the two numbers to coincide.
inline std::pair<double, double> potential_game_counterexample(const LogisticProblem& problem,
                                                               double V0) {
  const Grid& g = problem.grid();
  if (g.dim() != 1) throw std::invalid_argument("counterexample is one-dimensional");
  const double len = V0 * (g.upper(0) - g.lower(0));
  const Field same(g, V0);
  const double first = mean_product(same - same, joint_state(problem, {same, same}));

  Field gamma(g, 0.0), eta(g, 0.0);
  const std::size_t n = g.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (g.coord(0, k) - g.lower(0) < len) {
      gamma[k] = 1.0;
      eta[n - 1 - k] = 1.0;  // mirror image
    }
  }
  const double second = mean_product(gamma - eta, joint_state(problem, {gamma, eta}));
  return {first, second};
}

struct SweepRow {
  double V0 = 0.0;
  double total_harvest = 0.0;
  int rounds = 0;
  bool converged = false;
  double eps_certificate = 0.0;
};

/// Runs the game from constant starts for each per-player budget V0 and
/// records the total harvest. Runs are independent and may be spread over
/// `threads` workers; rows keep the order of `V0_list`.
inline std::vector<SweepRow> regulation_sweep(const GameSpec& base, std::size_t n_players,
                                              const std::vector<double>& V0_list,
                                              std::size_t threads = 1) {
  const StrategyConstraints proto = base.players.empty() ? StrategyConstraints{} : base.players.front();
  auto run_one = [&](double V0) {
    GameSpec spec = base;
    spec.players.assign(n_players, StrategyConstraints{proto.kappa, V0, proto.mode});
    SweepRow row;
    row.V0 = V0;
    try {
      const auto rep = nash_fixed_point(spec, constant_starts(spec));
      row.total_harvest = rep.total_harvest;
      row.rounds = rep.rounds;
      row.converged = rep.converged;
      row.eps_certificate = rep.eps_nash_certificate;
    } catch (const std::exception&) {
      row.total_harvest = std::nan("");
      row.converged = false;
    }
    return row;
  };
  std::vector<SweepRow> rows(V0_list.size());
  threads = std::max<std::size_t>(1, threads);
  for (std::size_t start = 0; start < V0_list.size(); start += threads) {
    std::vector<std::future<SweepRow>> jobs;
    const std::size_t end = std::min(V0_list.size(), start + threads);
    for (std::size_t i = start; i < end; ++i)
      jobs.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, run_one,
                                V0_list[i]));
    for (std::size_t i = start; i < end; ++i) rows[i] = jobs[i - start].get();
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "V0,total_harvest,rounds,converged,eps_certificate\n";
  for (const auto& r : rows)
    os << format_number(r.V0) << ',' << format_number(r.total_harvest) << ',' << r.rounds << ','
       << (r.converged ? 1 : 0) << ',' << format_number(r.eps_certificate) << '\n';
}

/// Per-player strategy columns alpha_1..alpha_n followed by theta.
inline void write_nash_csv(std::ostream& os, const NashReport& r) {
  std::vector<Field> cols = r.strategies;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < r.strategies.size(); ++i) names.push_back("alpha_" + std::to_string(i + 1));
  cols.push_back(r.theta);
  names.push_back("theta");
  write_fields_csv(os, cols, names);
}

}  // namespace fishgame
