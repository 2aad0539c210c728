#include <iostream>

#include <CLI11.hpp>

#include "fishgame/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spatial fishing games: steady states, optimal harvesting, Nash equilibria, MFHG"};
  fishgame::CliOptions opt;
  std::uint64_t seed = 0;
  app.add_option("--config", opt.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", opt.out, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed, overrides run.seed");
  app.add_flag("--quiet", opt.quiet, "suppress the summary on stdout");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : fishgame::kExitError;
  }
  if (seed_opt->count()) opt.seed = seed;
  try {
    opt.threads = fishgame::threads_from_env();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return fishgame::kExitError;
  }
  return fishgame::run(opt, std::cout, std::cerr);
}
