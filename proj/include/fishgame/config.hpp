#pragma once

// INI experiment configuration. Every key belongs to a known section; unknown
// sections or keys are rejected by name.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fishgame/harvest.hpp"
#include "fishgame/mfhg.hpp"
#include "fishgame/presets.hpp"

namespace fishgame {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"steady", "optimize", "nash",  "sweep",
                                              "asymptotic", "mfhg", "wave", "potential-check"};
  return names;
}

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;

  int dim = 1;
  std::size_t nx = 129;
  std::size_t ny = 65;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

  std::string K = "constant:0.5";
  double mu = 1.0;
  std::string alpha = "constant:0.1";

  std::size_t players = 1;
  std::vector<double> kappa{1.0};
  std::vector<double> V0{0.1};
  ConstraintMode mode = ConstraintMode::Inequality;

  double tol = 1e-7;
  int max_iter = 5000;
  std::vector<StartKind> starts{StartKind::Constant, StartKind::BangBangLeft, StartKind::BangBangRight};
  double steady_tol = 1e-10;
  int steady_max_iter = 200;
  double game_tol = 1e-6;
  int max_rounds = 200;
  double relaxation = 1.0;
  std::string game_start = "constant";

  std::vector<double> V0_list;
  std::vector<double> mu_list{0.05, 0.5, 5.0};
  int samples = 100;

  double T = 1.0;
  int steps = 100;
  double nu = 1.0;
  std::string reaction = "monostable";
  double r = 1.0;
  double a = 0.25;
  std::string u0 = "constant:0.5";
  std::string m0 = "uniform";
  double damping = 0.5;
  double sweep_tol = 1e-6;
  int max_sweeps = 200;
  double drift_sign = 1.0;
  double hjb_sign = 1.0;
  int stride = 10;
  bool rescaled = false;

  double threshold = 0.5;
  double window = 10.0;
  bool coupled = false;

  /// Every key as read, "section.key" -> raw value, for the manifest.
  std::map<std::string, std::string> echo;

  Grid grid() const {
    return dim == 2 ? Grid::rectangle(x_min, x_max, y_min, y_max, nx, ny) : Grid::interval(x_min, x_max, nx);
  }

  StrategyConstraints player(std::size_t i) const {
    return {kappa.size() == 1 ? kappa[0] : kappa.at(i), V0.size() == 1 ? V0[0] : V0.at(i), mode};
  }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"run", {"experiment", "seed"}},
      {"grid", {"dim", "nx", "ny", "x_min", "x_max", "y_min", "y_max"}},
      {"problem", {"K", "mu", "alpha"}},
      {"constraints", {"players", "kappa", "V0", "mode"}},
      {"solver",
       {"tol", "max_iter", "starts", "steady_tol", "steady_max_iter", "game_tol", "max_rounds",
        "relaxation", "start"}},
      {"sweep", {"V0_list", "mu_list", "samples"}},
      {"mfhg",
       {"T", "steps", "nu", "reaction", "r", "a", "u0", "m0", "damping", "sweep_tol", "max_sweeps",
        "drift_sign", "hjb_sign", "stride", "rescaled"}},
      {"wave", {"threshold", "window", "coupled"}},
  };
  return schema;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void string(const std::string& key, std::string& out) const {
    if (has(key)) out = trim(values_.at(key));
  }

  void number(const std::string& key, double& out) const {
    if (!has(key)) return;
    try {
      out = parse_double(values_.at(key), key);
    } catch (const PresetError&) {
      throw ConfigError("invalid value for '" + key + "': '" + values_.at(key) + "' is not a number");
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) const {
    if (!has(key)) return;
    double v = 0.0;
    number(key, v);
    if (v != std::floor(v) || v < 0.0 || v > 9.0e15)
      throw ConfigError("invalid value for '" + key + "': '" + values_.at(key) +
                        "' is not a nonnegative integer");
    out = static_cast<Int>(v);
  }

  void boolean(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const std::string v = trim(values_.at(key));
    if (v == "true" || v == "1" || v == "yes") {
      out = true;
    } else if (v == "false" || v == "0" || v == "no") {
      out = false;
    } else {
      throw ConfigError("invalid value for '" + key + "': '" + v + "' is not a boolean");
    }
  }

  void list(const std::string& key, std::vector<double>& out) const {
    if (!has(key)) return;
    out.clear();
    for (const auto& item : split(values_.at(key), ',')) {
      try {
        out.push_back(parse_double(item, key));
      } catch (const PresetError&) {
        throw ConfigError("invalid value for '" + key + "': '" + item + "' is not a number");
      }
    }
    if (out.empty()) throw ConfigError("invalid value for '" + key + "': empty list");
  }

 private:
  std::map<std::string, std::string> values_;
};

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("invalid value for '" + key + "': " + what);
}

}  // namespace detail

/// Parses INI text; `origin` names the source in error messages.
inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "config") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  std::map<std::string, std::string> flat;
  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("unknown key '" + section + "': keys must appear inside a [section]");
    const auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError("unknown section '[" + section + "]'");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
      flat[section + "." + key] = value.data();
    }
  }

  ExperimentConfig c;
  c.echo = flat;
  const detail::Reader r(flat);
  using detail::require;

  if (!r.has("run.experiment")) throw ConfigError("missing required key 'run.experiment'");
  r.string("run.experiment", c.experiment);
  bool known = false;
  for (const auto& n : experiment_names()) known = known || n == c.experiment;
  require(known, "run.experiment", "unknown experiment '" + c.experiment + "'");
  r.integer("run.seed", c.seed);

  r.integer("grid.dim", c.dim);
  require(c.dim == 1 || c.dim == 2, "grid.dim", "must be 1 or 2");
  r.integer("grid.nx", c.nx);
  r.integer("grid.ny", c.ny);
  require(c.nx >= 3, "grid.nx", "needs at least 3 nodes");
  require(c.dim == 1 || c.ny >= 3, "grid.ny", "needs at least 3 nodes");
  r.number("grid.x_min", c.x_min);
  r.number("grid.x_max", c.x_max);
  r.number("grid.y_min", c.y_min);
  r.number("grid.y_max", c.y_max);
  require(c.x_max > c.x_min, "grid.x_max", "must exceed grid.x_min");
  require(c.y_max > c.y_min, "grid.y_max", "must exceed grid.y_min");

  r.string("problem.K", c.K);
  r.number("problem.mu", c.mu);
  require(c.mu > 0.0, "problem.mu", "must be positive");
  r.string("problem.alpha", c.alpha);

  r.integer("constraints.players", c.players);
  require(c.players >= 1, "constraints.players", "must be at least 1");
  r.list("constraints.kappa", c.kappa);
  r.list("constraints.V0", c.V0);
  require(c.kappa.size() == 1 || c.kappa.size() == c.players, "constraints.kappa",
          "give one value or one per player");
  require(c.V0.size() == 1 || c.V0.size() == c.players, "constraints.V0", "give one value or one per player");
  for (double k : c.kappa) require(k > 0.0, "constraints.kappa", "must be positive");
  for (double v : c.V0) require(v > 0.0, "constraints.V0", "must be positive");
  for (std::size_t i = 0; i < c.players; ++i)
    require(c.player(i).V0 <= c.player(i).kappa, "constraints.V0", "must not exceed kappa");
  if (r.has("constraints.mode")) {
    std::string m;
    r.string("constraints.mode", m);
    require(m == "equality" || m == "inequality", "constraints.mode", "must be 'equality' or 'inequality'");
    c.mode = m == "equality" ? ConstraintMode::Equality : ConstraintMode::Inequality;
  }

  r.number("solver.tol", c.tol);
  require(c.tol > 0.0, "solver.tol", "must be positive");
  r.integer("solver.max_iter", c.max_iter);
  require(c.max_iter >= 1, "solver.max_iter", "must be at least 1");
  if (r.has("solver.starts")) {
    std::string s;
    r.string("solver.starts", s);
    c.starts.clear();
    for (const auto& raw : detail::split(s, ',')) {
      const std::string item = detail::trim(raw);
      if (item == "constant") {
        c.starts.push_back(StartKind::Constant);
      } else if (item == "bang-bang-left") {
        c.starts.push_back(StartKind::BangBangLeft);
      } else if (item == "bang-bang-right") {
        c.starts.push_back(StartKind::BangBangRight);
      } else {
        throw ConfigError("invalid value for 'solver.starts': unknown start '" + item + "'");
      }
    }
    require(!c.starts.empty(), "solver.starts", "empty list");
  }
  r.number("solver.steady_tol", c.steady_tol);
  require(c.steady_tol > 0.0, "solver.steady_tol", "must be positive");
  r.integer("solver.steady_max_iter", c.steady_max_iter);
  require(c.steady_max_iter >= 1, "solver.steady_max_iter", "must be at least 1");
  r.number("solver.game_tol", c.game_tol);
  require(c.game_tol > 0.0, "solver.game_tol", "must be positive");
  r.integer("solver.max_rounds", c.max_rounds);
  require(c.max_rounds >= 1, "solver.max_rounds", "must be at least 1");
  r.number("solver.relaxation", c.relaxation);
  require(c.relaxation > 0.0 && c.relaxation <= 1.0, "solver.relaxation", "must lie in (0, 1]");
  r.string("solver.start", c.game_start);
  require(c.game_start == "constant" || c.game_start == "bang-bang-left" || c.game_start == "bang-bang-right" ||
              c.game_start == "random",
          "solver.start", "must be constant, bang-bang-left, bang-bang-right or random");

  r.list("sweep.V0_list", c.V0_list);
  for (double v : c.V0_list) require(v > 0.0, "sweep.V0_list", "entries must be positive");
  r.list("sweep.mu_list", c.mu_list);
  for (double v : c.mu_list) require(v > 0.0, "sweep.mu_list", "entries must be positive");
  r.integer("sweep.samples", c.samples);
  require(c.samples >= 2, "sweep.samples", "must be at least 2");

  r.number("mfhg.T", c.T);
  require(c.T > 0.0, "mfhg.T", "must be positive");
  r.integer("mfhg.steps", c.steps);
  require(c.steps >= 1, "mfhg.steps", "must be at least 1");
  r.number("mfhg.nu", c.nu);
  require(c.nu > 0.0, "mfhg.nu", "must be positive");
  r.string("mfhg.reaction", c.reaction);
  require(c.reaction == "monostable" || c.reaction == "bistable", "mfhg.reaction",
          "must be 'monostable' or 'bistable'");
  r.number("mfhg.r", c.r);
  r.number("mfhg.a", c.a);
  require(c.a > 0.0 && c.a < 1.0, "mfhg.a", "must lie in (0, 1)");
  r.string("mfhg.u0", c.u0);
  r.string("mfhg.m0", c.m0);
  r.number("mfhg.damping", c.damping);
  require(c.damping > 0.0 && c.damping <= 1.0, "mfhg.damping", "must lie in (0, 1]");
  r.number("mfhg.sweep_tol", c.sweep_tol);
  require(c.sweep_tol > 0.0, "mfhg.sweep_tol", "must be positive");
  r.integer("mfhg.max_sweeps", c.max_sweeps);
  require(c.max_sweeps >= 1, "mfhg.max_sweeps", "must be at least 1");
  r.number("mfhg.drift_sign", c.drift_sign);
  require(c.drift_sign == 1.0 || c.drift_sign == -1.0, "mfhg.drift_sign", "must be 1 or -1");
  r.number("mfhg.hjb_sign", c.hjb_sign);
  require(c.hjb_sign == 1.0 || c.hjb_sign == -1.0, "mfhg.hjb_sign", "must be 1 or -1");
  r.integer("mfhg.stride", c.stride);
  require(c.stride >= 1, "mfhg.stride", "must be at least 1");
  r.boolean("mfhg.rescaled", c.rescaled);

  r.number("wave.threshold", c.threshold);
  r.number("wave.window", c.window);
  require(c.window > 0.0, "wave.window", "must be positive");
  r.boolean("wave.coupled", c.coupled);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config(in, path);
}

/// MFHG spec assembled from the config; m0 is rescaled to unit integral.
inline MfhgSpec mfhg_spec(const ExperimentConfig& c) {
  MfhgSpec s;
  s.grid = c.grid();
  s.T = c.T;
  s.steps = c.steps;
  s.nu = c.nu;
  s.mu = c.mu;
  if (c.reaction == "bistable") {
    s.reaction = Bistable{c.a};
  } else {
    s.reaction = Monostable{c.r};
  }
  s.u0 = field_preset(s.grid, c.u0, c.seed);
  Field m0 = field_preset(s.grid, c.m0, c.seed);
  const double mass = integral(m0);
  if (!(mass > 0.0)) throw ConfigError("invalid value for 'mfhg.m0': total mass must be positive");
  s.m0 = (1.0 / mass) * m0;
  s.sweep_damping = c.damping;
  s.sweep_tol = c.sweep_tol;
  s.max_sweeps = c.max_sweeps;
  s.drift_sign = c.drift_sign;
  s.hjb_sign = c.hjb_sign;
  return s;
}

}  // namespace fishgame
