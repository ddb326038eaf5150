// wplab — config-driven experiments on the damped wave-plate system.
//
//   wplab run <config.json> [--out DIR] [--seed N] [--threads N]
//
// Exit codes: 0 pass, 2 inequality-verification failure, 1 error.
#include "wpl/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"numerical lab for the weakly coupled wave-plate system"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute an experiment from a config file");
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int threads = 0;
  run->add_option("config", config_path, "JSON run configuration")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--seed", seed, "seed override");
  run->add_option("--threads", threads, "worker threads (env WPLAB_THREADS also honored)");

  CLI11_PARSE(app, argc, argv);

  try {
    wpl::RunConfig config = wpl::load_config(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) {
      config.threads = threads;
    } else if (const char* env = std::getenv("WPLAB_THREADS")) {
      config.threads = std::max(1, std::atoi(env));
    }
    const wpl::RunResult result = wpl::run_experiment(config, config.out_dir);
    if (result.exit_code == 0) {
      std::cout << result.message << "\n";
    } else {
      std::cerr << result.message << "\n";
    }
    return result.exit_code;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
