#pragma once

// Experiment runner behind the command-line tool. Each run reads one config,
// writes CSV files plus summary.txt into the output directory and finishes
// with an atomically written manifest.json.
// Exit codes: 0 converged, 2 completed without convergence, 1 error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fishgame/config.hpp"
#include "fishgame/elliptic.hpp"
#include "fishgame/game.hpp"
#include "fishgame/harvest.hpp"
#include "fishgame/mfhg.hpp"
#include "fishgame/presets.hpp"

namespace fishgame {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitNotConverged = 2 };

struct CliOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::size_t threads = 1;
};

/// Thread cap from FISHGAME_THREADS, defaulting to the hardware count.
inline std::size_t threads_from_env() {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const char* v = std::getenv("FISHGAME_THREADS");
  if (!v || !*v) return hw;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("FISHGAME_THREADS must be a positive integer, got '" + std::string(v) + "'");
  return static_cast<std::size_t>(n);
}

namespace detail {

class RunOutput {
 public:
  explicit RunOutput(std::filesystem::path dir) : dir_(std::move(dir)) {}

  template <class Writer>
  void file(const std::string& name, Writer&& write) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    write(os);
    if (!os) throw std::runtime_error("write failed for '" + (dir_ / name).string() + "'");
    files_.push_back(name);
  }

  void stage(const std::string& name, bool converged) { stages_[name] = converged; }
  void value(const std::string& key, const std::string& v) { summary_.emplace_back(key, v); }
  void value(const std::string& key, double v) { value(key, format_number(v)); }
  void value(const std::string& key, int v) { value(key, std::to_string(v)); }
  void value(const std::string& key, bool v) { value(key, std::string(v ? "true" : "false")); }
  void warn(const std::string& w) { warnings_.push_back(w); }

  bool all_converged() const {
    for (const auto& [k, ok] : stages_)
      if (!ok) return false;
    return true;
  }

  const std::vector<std::string>& files() const { return files_; }
  const std::map<std::string, bool>& stages() const { return stages_; }
  const std::vector<std::pair<std::string, std::string>>& summary() const { return summary_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
  std::map<std::string, bool> stages_;
  std::vector<std::pair<std::string, std::string>> summary_;
  std::vector<std::string> warnings_;
};

inline LogisticProblem config_problem(const ExperimentConfig& c) {
  Field K = field_preset(c.grid(), c.K, c.seed);
  if (!K.finite() || K.min() < 0.0) throw ConfigError("invalid value for 'problem.K': resources must be finite and nonnegative");
  if (!(mean(K) > 0.0)) throw ConfigError("invalid value for 'problem.K': mean must be positive");
  return LogisticProblem::unchecked(std::move(K), c.mu);
}

inline OptimizeOptions config_optimizer(const ExperimentConfig& c) {
  OptimizeOptions o;
  o.tol = c.tol;
  o.max_iter = c.max_iter;
  o.starts = c.starts;
  return o;
}

inline GameSpec config_game(const ExperimentConfig& c, const LogisticProblem& P) {
  GameSpec spec{P, {}};
  for (std::size_t i = 0; i < c.players; ++i) spec.players.push_back(c.player(i));
  spec.tol = c.game_tol;
  spec.max_rounds = c.max_rounds;
  spec.relaxation = c.relaxation;
  spec.optimizer.tol = c.tol;
  spec.optimizer.max_iter = c.max_iter;
  return spec;
}

inline std::vector<Field> game_starts(const ExperimentConfig& c, const GameSpec& spec) {
  std::vector<Field> s;
  std::mt19937_64 rng(c.seed);
  const Grid& g = spec.problem.grid();
  for (const auto& p : spec.players) {
    if (c.game_start == "random") {
      Field f(g);
      for (double& v : f.values) v = 2.0 * p.V0 * unit_draw(rng);
      s.push_back(project(f, p));
    } else if (c.game_start == "bang-bang-left") {
      s.push_back(make_start(g, p, StartKind::BangBangLeft));
    } else if (c.game_start == "bang-bang-right") {
      s.push_back(make_start(g, p, StartKind::BangBangRight));
    } else {
      s.push_back(Field(g, p.V0));
    }
  }
  return s;
}

inline void run_steady(const ExperimentConfig& c, RunOutput& out) {
  const auto P = config_problem(c);
  const Field alpha = field_preset(P.grid(), c.alpha, c.seed);
  const auto rep = solve_steady(P, alpha, SteadyOptions{c.steady_tol, c.steady_max_iter});
  out.file("steady.csv", [&](std::ostream& os) {
    const std::vector<Field> cols{P.K(), alpha, rep.solution};
    const std::vector<std::string> names{"K", "alpha", "theta"};
    write_fields_csv(os, cols, names);
  });
  out.stage("steady", rep.converged);
  out.value("converged", rep.converged);
  out.value("positive", rep.positive);
  out.value("iterations", rep.iterations);
  out.value("final_residual", rep.final_residual);
  out.value("mean_theta", mean(rep.solution));
  out.value("harvest", mean_product(alpha, rep.solution));
  out.value("eigenvalue_linearized", principal_eigenvalue(P.grid(), P.mu(), P.K() - alpha - rep.solution).value);
  out.value("eigenvalue_stability",
            principal_eigenvalue(P.grid(), P.mu(), P.K() - alpha - 2.0 * rep.solution).value);
}

inline void run_optimize(const ExperimentConfig& c, RunOutput& out) {
  const auto P = config_problem(c);
  const auto rep = optimize_single(P, c.player(0), config_optimizer(c));
  out.file("optimize.csv", [&](std::ostream& os) { write_optimize_csv(os, rep); });
  out.file("local_optima.csv", [&](std::ostream& os) {
    os << "rank,J,distance_to_best\n";
    for (std::size_t i = 0; i < rep.local_optima.size(); ++i)
      os << i + 1 << ',' << format_number(rep.local_optima[i].J) << ','
         << format_number(l2_distance(rep.local_optima[i].alpha, rep.alpha_star)) << '\n';
  });
  out.stage("optimize", rep.converged);
  out.value("J", rep.J_value);
  out.value("iterations", rep.iterations);
  out.value("projected_gradient_norm", rep.projected_gradient_norm);
  out.value("saturated_volume", rep.saturated_volume);
  out.value("converged", rep.converged);
  out.value("local_optima", static_cast<int>(rep.local_optima.size()));
}

inline void run_nash(const ExperimentConfig& c, RunOutput& out) {
  const auto P = config_problem(c);
  const GameSpec spec = config_game(c, P);
  const auto rep = nash_fixed_point(spec, game_starts(c, spec));
  out.file("nash.csv", [&](std::ostream& os) { write_nash_csv(os, rep); });
  out.stage("nash", rep.converged);
  out.value("total_harvest", rep.total_harvest);
  for (std::size_t i = 0; i < rep.payoffs.size(); ++i) out.value("payoff_" + std::to_string(i + 1), rep.payoffs[i]);
  out.value("rounds", rep.rounds);
  out.value("converged", rep.converged);
  out.value("last_step", rep.last_step);
  out.value("eps_nash_certificate", rep.eps_nash_certificate);
  if (rep.converged) out.value("cooperative_optimum", price_of_anarchy(spec, rep).second);
}

inline void run_sweep(const ExperimentConfig& c, RunOutput& out, std::size_t threads) {
  if (c.V0_list.empty()) throw ConfigError("missing required key 'sweep.V0_list'");
  const auto P = config_problem(c);
  const GameSpec base = config_game(c, P);
  const auto rows = regulation_sweep(base, c.players, c.V0_list, threads);
  out.file("sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, rows); });
  bool all = true;
  std::size_t best = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    all = all && rows[i].converged;
    if (!rows[i].converged) out.warn("sweep: V0 = " + format_number(rows[i].V0) + " did not converge");
    if (rows[i].converged && (!rows[best].converged || rows[i].total_harvest > rows[best].total_harvest)) best = i;
  }
  out.stage("sweep", all);
  out.value("rows", static_cast<int>(rows.size()));
  out.value("best_V0", rows[best].V0);
  out.value("best_total_harvest", rows[best].total_harvest);
}

inline void run_asymptotic(const ExperimentConfig& c, RunOutput& out) {
  const auto P = config_problem(c);
  const StrategyConstraints p = c.player(0);
  const double K0 = P.K0();
  if (!(p.V0 < K0)) throw AdmissibilityError("V0 must be below mean(K) = " + format_number(K0));
  const double v = j0_argmax(K0, p);
  out.value("K0", K0);
  out.value("j0_argmax", v);
  out.value("j0_max", j0_eval(v, K0));
  const Field flat(P.grid(), p.V0);
  out.value("j1_constant", j1_eval(P.K(), flat, p.V0, K0));
  out.value("j1_constant_gradient_norm", zero_mean_norm(j1_gradient(P.K(), flat, p.V0, K0)));
  if (P.grid().dim() == 1) {
    const auto rows = j1_interval_sweep(P.K(), p, c.samples);
    out.file("asymptotic.csv", [&](std::ostream& os) {
      os << "start,J1\n";
      for (const auto& r : rows) os << format_number(r.start) << ',' << format_number(r.J1) << '\n';
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].J1 > rows[best].J1) best = i;
    out.value("best_interval_start", rows[best].start);
    out.value("best_interval_J1", rows[best].J1);
  }
  out.stage("asymptotic", true);
}

inline void run_mfhg(const ExperimentConfig& c, RunOutput& out) {
  const MfhgSpec spec = mfhg_spec(c);
  const auto st = mfhg_solve(spec);
  for (const auto& w : st.warnings) out.warn(w);
  out.file("mfhg.csv", [&](std::ostream& os) { write_mfhg_csv(os, spec, st, c.stride); });
  out.file("feedback.csv", [&](std::ostream& os) {
    const auto fb = optimal_feedback(st.V.front(), st.u.front(), c.rescaled);
    std::vector<Field> cols = fb.b;
    std::vector<std::string> names{"b_x"};
    if (cols.size() == 2) names.push_back("b_y");
    cols.push_back(fb.alpha);
    names.push_back("alpha");
    write_fields_csv(os, cols, names);
  });
  double drift = 0.0;
  for (const auto& m : st.m) drift = std::max(drift, std::abs(integral(m) - integral(spec.m0)));
  out.stage("mfhg", st.converged);
  out.value("converged", st.converged);
  out.value("sweeps", st.sweeps_used);
  out.value("sweep_residual", st.sweep_residual);
  out.value("max_mass_drift", drift);
  out.value("final_fish_mass", integral(st.u.back()));
}

inline void run_wave(const ExperimentConfig& c, RunOutput& out) {
  const MfhgSpec spec = mfhg_spec(c);
  if (spec.grid.dim() != 1) throw ConfigError("invalid value for 'grid.dim': wave experiments are one-dimensional");
  TimeSeries u;
  if (c.coupled) {
    auto st = mfhg_solve(spec);
    for (const auto& w : st.warnings) out.warn(w);
    out.stage("mfhg", st.converged);
    out.value("sweeps", st.sweeps_used);
    u = std::move(st.u);
  } else {
    u = fish_forward(spec, TimeSeries(spec.steps + 1, Field(spec.grid, 0.0)));
  }
  const auto fs = front_speed(spec, u, c.threshold, c.window);
  for (const auto& w : fs.warnings) out.warn(w);
  out.file("front.csv", [&](std::ostream& os) { write_front_csv(os, fs); });
  out.stage("wave", true);
  out.value("samples", static_cast<int>(fs.samples.size()));
  if (!fs.samples.empty()) {
    out.value("final_time", fs.samples.back().t);
    out.value("final_position", fs.samples.back().position);
    out.value("speed", fs.samples.back().speed);
  }
}

inline void run_potential(const ExperimentConfig& c, RunOutput& out) {
  const auto base = config_problem(c);
  const double V0 = c.player(0).V0;
  std::vector<std::array<double, 3>> rows;
  for (double mu : c.mu_list) {
    const auto [first, second] = potential_game_counterexample(LogisticProblem::unchecked(base.K(), mu), V0);
    rows.push_back({mu, first, second});
  }
  out.file("potential.csv", [&](std::ostream& os) {
    os << "mu,symmetric,asymmetric\n";
    for (const auto& r : rows) os << format_number(r[0]) << ',' << format_number(r[1]) << ',' << format_number(r[2]) << '\n';
  });
  out.stage("potential-check", true);
  for (const auto& r : rows) out.value("asymmetric_mu_" + format_number(r[0]), r[2]);
}

inline void write_manifest(const std::filesystem::path& dir, const nlohmann::json& j) {
  const auto tmp = dir / "manifest.json.tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    os << j.dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write manifest");
  }
  std::filesystem::rename(tmp, dir / "manifest.json");
}

}  // namespace detail

/// Runs one experiment; returns the process exit code.
inline int run(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  try {
    cfg = load_config(opt.config);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitError;
  }
  if (opt.seed) cfg.seed = *opt.seed;

  const std::filesystem::path dir(opt.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << opt.out << "': " << ec.message() << '\n';
    return kExitError;
  }

  detail::RunOutput ro(dir);
  int code = kExitOk;
  std::string error;
  try {
    const std::string& e = cfg.experiment;
    if (e == "steady") {
      detail::run_steady(cfg, ro);
    } else if (e == "optimize") {
      detail::run_optimize(cfg, ro);
    } else if (e == "nash") {
      detail::run_nash(cfg, ro);
    } else if (e == "sweep") {
      detail::run_sweep(cfg, ro, opt.threads);
    } else if (e == "asymptotic") {
      detail::run_asymptotic(cfg, ro);
    } else if (e == "mfhg") {
      detail::run_mfhg(cfg, ro);
    } else if (e == "wave") {
      detail::run_wave(cfg, ro);
    } else {
      detail::run_potential(cfg, ro);
    }
    code = ro.all_converged() ? kExitOk : kExitNotConverged;
    ro.file("summary.txt", [&](std::ostream& os) {
      for (const auto& [k, v] : ro.summary()) os << k << '=' << v << '\n';
    });
  } catch (const ConfigError& e) {
    error = std::string("config error: ") + e.what();
    code = kExitError;
  } catch (const std::exception& e) {
    error = "error in experiment '" + cfg.experiment + "': " + e.what();
    code = kExitError;
  }

  for (const auto& w : ro.warnings()) err << "warning: " << w << '\n';
  if (!error.empty()) err << error << '\n';
  if (!opt.quiet)
    for (const auto& [k, v] : ro.summary()) out << k << '=' << v << '\n';

  nlohmann::json j;
  j["version"] = kVersion;
  j["experiment"] = cfg.experiment;
  j["seed"] = cfg.seed;
  j["config_path"] = opt.config;
  j["config"] = cfg.echo;
  j["stages"] = ro.stages();
  j["outputs"] = ro.files();
  j["warnings"] = ro.warnings();
  j["exit_code"] = code;
  if (!error.empty()) j["error"] = error;
  j["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    detail::write_manifest(dir, j);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return code;
}

}  // namespace fishgame
