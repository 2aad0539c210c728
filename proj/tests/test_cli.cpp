#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fishgame/cli.hpp"

using namespace fishgame;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
  fs::path dir;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fishgame_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run run_text(const std::string& name, const std::string& ini, std::optional<std::uint64_t> seed = {}) {
  const fs::path dir = scratch(name);
  std::ofstream(dir / "config.ini") << ini;
  CliOptions opt;
  opt.config = (dir / "config.ini").string();
  opt.out = (dir / "out").string();
  opt.seed = seed;
  opt.threads = 2;
  std::ostringstream out, err;
  Run r;
  r.code = run(opt, out, err);
  r.out = out.str();
  r.err = err.str();
  r.dir = dir / "out";
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double summary_value(const Run& r, const std::string& key) {
  std::istringstream is(r.out);
  std::string line;
  while (std::getline(is, line))
    if (line.rfind(key + "=", 0) == 0) return std::stod(line.substr(key.size() + 1));
  ADD_FAILURE() << "missing summary key " << key << " in\n" << r.out;
  return std::nan("");
}

ExperimentConfig parse(const std::string& ini) {
  std::istringstream is(ini);
  return parse_config(is);
}

}  // namespace

TEST(Presets, ConstantAndDecreasingLinear) {
  const Grid g = Grid::unit_interval(101);
  EXPECT_EQ(sup_norm(field_preset(g, "constant:0.7") - 0.7), 0.0);
  const Field K = field_preset(g, "decreasing-linear:0.5");
  EXPECT_NEAR(mean(K), 0.5, 1e-14);
  EXPECT_NEAR(K[0], 1.0, 1e-15);
  EXPECT_NEAR(K[100], 0.0, 1e-15);
  EXPECT_NEAR(field_preset(g, "cosine:0.5:0.3")[0], 0.8, 1e-15);
}

TEST(Presets, RandomFourierDeterministicAndAdmissible) {
  for (const Grid& g : {Grid::unit_interval(129), Grid::rectangle(0, 1, 0, 1, 33, 33)}) {
    const Field a = field_preset(g, "random-fourier:0.4:5:1", 42);
    const Field b = field_preset(g, "random-fourier:0.4:5:1", 42);
    const Field c = field_preset(g, "random-fourier:0.4:5:1", 43);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    EXPECT_GE(a.min(), 0.0);
    EXPECT_LE(a.max(), 1.0);
    EXPECT_NEAR(mean(a), 0.4, 1e-9);
  }
}

TEST(Presets, FileRoundTripAndErrors) {
  const Grid g = Grid::unit_interval(9);
  const Field f = Field::from_function(g, [](double x, double) { return x * x; });
  const fs::path dir = scratch("preset_file");
  {
    std::ofstream os(dir / "k.csv");
    write_field_csv(os, f);
  }
  EXPECT_EQ(field_preset(g, "file:" + (dir / "k.csv").string()).values, f.values);
  EXPECT_THROW(field_preset(Grid::unit_interval(5), "file:" + (dir / "k.csv").string()), PresetError);
  EXPECT_THROW(field_preset(g, "file:" + (dir / "missing.csv").string()), PresetError);
  EXPECT_THROW(field_preset(g, "triangle:1"), PresetError);
  EXPECT_THROW(field_preset(g, "constant:1:2"), PresetError);
  EXPECT_THROW(field_preset(g, "constant:abc"), PresetError);
}

TEST(Config, DefaultsAndLists) {
  const auto c = parse("[run]\nexperiment = nash\n[constraints]\nplayers = 2\nkappa = 1, 0.5\nV0 = 0.1\nmode = equality\n");
  EXPECT_EQ(c.experiment, "nash");
  EXPECT_EQ(c.players, 2u);
  EXPECT_DOUBLE_EQ(c.player(1).kappa, 0.5);
  EXPECT_DOUBLE_EQ(c.player(1).V0, 0.1);
  EXPECT_EQ(c.player(0).mode, ConstraintMode::Equality);
  EXPECT_EQ(c.nx, 129u);
  EXPECT_EQ(c.echo.at("constraints.kappa"), "1, 0.5");
}

TEST(Config, RejectsUnknownAndInvalidEntries) {
  auto message = [](const std::string& ini) {
    try {
      parse(ini);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("[run]\nexperiment = steady\n[grid]\nnodes = 5\n").find("grid.nodes"), std::string::npos);
  EXPECT_NE(message("[run]\nexperiment = steady\n[fish]\nx = 1\n").find("[fish]"), std::string::npos);
  EXPECT_NE(message("[run]\nexperiment = fly\n").find("run.experiment"), std::string::npos);
  EXPECT_NE(message("[grid]\nnx = 5\n").find("run.experiment"), std::string::npos);
  EXPECT_NE(message("[run]\nexperiment = steady\n[grid]\nnx = 2.5\n").find("grid.nx"), std::string::npos);
  EXPECT_NE(message("[run]\nexperiment = steady\n[problem]\nmu = -1\n").find("problem.mu"), std::string::npos);
  EXPECT_NE(message("[run]\nexperiment = nash\n[constraints]\nplayers = 3\nV0 = 0.1, 0.2\n").find("constraints.V0"),
            std::string::npos);
  EXPECT_NE(message("[run]\nexperiment = steady\n[solver]\nstarts = constant, zigzag\n").find("solver.starts"),
            std::string::npos);
  EXPECT_NE(message("stray = 1\n[run]\nexperiment = steady\n").find("stray"), std::string::npos);
  // syntax errors carry the line number
  EXPECT_NE(message("[run]\nexperiment = steady\nthis line is broken\n").find(":3:"), std::string::npos);
}

TEST(Cli, SteadyExample) {
  const auto r = run_text("steady", "[run]\nexperiment = steady\n[grid]\nnx = 65\n[problem]\nK = constant:1\nalpha = constant:0.5\n");
  EXPECT_EQ(r.code, kExitOk) << r.err;
  std::istringstream csv(slurp(r.dir / "steady.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "x,K,alpha,theta");
  int rows = 0;
  while (std::getline(csv, line)) {
    EXPECT_NEAR(std::stod(line.substr(line.rfind(',') + 1)), 0.5, 1e-8);
    ++rows;
  }
  EXPECT_EQ(rows, 65);
  EXPECT_TRUE(fs::exists(r.dir / "manifest.json"));
  EXPECT_FALSE(fs::exists(r.dir / "manifest.json.tmp"));
}

TEST(Cli, NashFourPlayers) {
  const auto r = run_text("nash", "[run]\nexperiment = nash\n[grid]\nnx = 33\n[problem]\nK = constant:1\n"
                                  "[constraints]\nplayers = 4\nkappa = 2\nV0 = 0.22\n[solver]\nstart = constant\n");
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NEAR(summary_value(r, "total_harvest"), 4.0 / 25, 1e-4);
  EXPECT_NEAR(summary_value(r, "cooperative_optimum"), 0.25, 1e-6);
  EXPECT_EQ(slurp(r.dir / "nash.csv").substr(0, 35), "x,alpha_1,alpha_2,alpha_3,alpha_4,t");
}

TEST(Cli, ForcedNonConvergenceExitsTwo) {
  const auto r = run_text("nonconv", "[run]\nexperiment = nash\n[grid]\nnx = 65\n[problem]\nK = cosine:0.5:0.4\nmu = 0.05\n"
                                     "[constraints]\nplayers = 2\nkappa = 1, 0.2\nV0 = 0.15\n[solver]\nmax_rounds = 1\n");
  EXPECT_EQ(r.code, kExitNotConverged) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(r.dir / "manifest.json"));
  EXPECT_EQ(manifest["exit_code"], 2);
  EXPECT_EQ(manifest["stages"]["nash"], false);
}

TEST(Cli, MalformedKeyExitsOne) {
  const auto r = run_text("badkey", "[run]\nexperiment = steady\n[problem]\ncolour = blue\n");
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("problem.colour"), std::string::npos);
}

TEST(Cli, NumericFailureNamesExperiment) {
  const auto r = run_text("infeasible", "[run]\nexperiment = steady\n[problem]\nK = constant:0.5\nalpha = constant:0.6\n");
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("steady"), std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(r.dir / "manifest.json"));
  EXPECT_EQ(manifest["exit_code"], 1);
  EXPECT_TRUE(manifest.contains("error"));
}

TEST(Cli, DeterministicOutputsAndSeedOverride) {
  const std::string ini = "[run]\nexperiment = nash\nseed = 7\n[grid]\nnx = 17\n[problem]\nK = random-fourier:0.5:4:1\nmu = 0.5\n"
                          "[constraints]\nplayers = 2\nkappa = 1\nV0 = 0.1\n[solver]\nstart = random\n";
  const auto a = run_text("det_a", ini);
  const auto b = run_text("det_b", ini);
  const auto c = run_text("det_c", ini, 8);
  ASSERT_NE(a.code, kExitError) << a.err;
  EXPECT_EQ(slurp(a.dir / "nash.csv"), slurp(b.dir / "nash.csv"));
  EXPECT_EQ(slurp(a.dir / "summary.txt"), slurp(b.dir / "summary.txt"));
  EXPECT_NE(slurp(a.dir / "nash.csv"), slurp(c.dir / "nash.csv"));
  EXPECT_EQ(nlohmann::json::parse(slurp(c.dir / "manifest.json"))["seed"], 8);
}

TEST(Cli, EveryExperimentRuns) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"optimize", "[run]\nexperiment = optimize\n[grid]\nnx = 65\n[problem]\nK = constant:1\n[constraints]\nkappa = 2\nV0 = 0.6\n"},
      {"sweep", "[run]\nexperiment = sweep\n[grid]\nnx = 33\n[problem]\nK = constant:1\n[constraints]\nplayers = 2\nmode = equality\n"
                "[sweep]\nV0_list = 0.1, 0.25\n"},
      {"asymptotic", "[run]\nexperiment = asymptotic\n[grid]\nnx = 101\n[problem]\nK = decreasing-linear:0.5\n"
                     "[constraints]\nkappa = 0.75\nV0 = 0.3\nmode = equality\n[sweep]\nsamples = 20\n"},
      {"mfhg", "[run]\nexperiment = mfhg\n[grid]\nnx = 33\n[problem]\nmu = 0.1\n[mfhg]\nT = 0.5\nsteps = 20\nnu = 0.1\n"},
      {"wave", "[run]\nexperiment = wave\n[grid]\nnx = 401\nx_max = 40\n[mfhg]\nT = 5\nsteps = 100\nu0 = step:5:1:0\n"
               "[wave]\nwindow = 2\n"},
      {"potential-check", "[run]\nexperiment = potential-check\n[grid]\nnx = 101\n[problem]\nK = decreasing-linear:0.5\n"
                          "[constraints]\nV0 = 0.1666\n"},
  };
  const std::map<std::string, std::string> files{{"optimize", "optimize.csv"}, {"sweep", "sweep.csv"},
                                                 {"asymptotic", "asymptotic.csv"}, {"mfhg", "mfhg.csv"},
                                                 {"wave", "front.csv"}, {"potential-check", "potential.csv"}};
  for (const auto& [name, ini] : cases) {
    const auto r = run_text("exp_" + name, ini);
    EXPECT_EQ(r.code, kExitOk) << name << ": " << r.err;
    EXPECT_TRUE(fs::exists(r.dir / files.at(name))) << name;
    const auto manifest = nlohmann::json::parse(slurp(r.dir / "manifest.json"));
    EXPECT_EQ(manifest["experiment"], name);
  }
}

TEST(Cli, OptimizeSummaryMatchesClosedForm) {
  const auto r = run_text("opt_closed", "[run]\nexperiment = optimize\n[grid]\nnx = 65\n[problem]\nK = constant:1\n"
                                        "[constraints]\nkappa = 2\nV0 = 0.6\n");
  EXPECT_NEAR(summary_value(r, "J"), 0.25, 1e-8);
  EXPECT_NE(r.out.find("saturated_volume=false"), std::string::npos);
}

TEST(Cli, ThreadsFromEnvironment) {
  ::setenv("FISHGAME_THREADS", "3", 1);
  EXPECT_EQ(threads_from_env(), 3u);
  ::setenv("FISHGAME_THREADS", "zero", 1);
  EXPECT_THROW(threads_from_env(), ConfigError);
  ::unsetenv("FISHGAME_THREADS");
  EXPECT_GE(threads_from_env(), 1u);
}
