#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cgm/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cgm - corner growth model laboratory"};
  app.footer(
      "Experiments: shape, legendre, duality, stationary-lpp, busemann,\n"
      "             queue-fixpoint, queue-geometric, percolation-cone, ergodic\n"
      "Exit code 0 iff every verdict passes.");

  std::string experiment, config_path, out_dir, format;
  std::int64_t seed = -1;
  int workers = 0;
  app.add_option("experiment", experiment, "experiment to run (must match the config)")
      ->required();
  app.add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--workers", workers, "override the worker count");
  app.add_option("--out", out_dir, "override the output directory");
  app.add_option("--format", format, "override the output format (csv|json)");

  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "config parse error: " << e.what() << "\n";
      return 2;
    }
    if (seed >= 0) j["seed"] = seed;
    if (workers > 0) j["workers"] = workers;
    if (!out_dir.empty()) j["output"]["dir"] = out_dir;
    if (!format.empty()) j["output"]["format"] = format;

    const auto cfg = cgm::harness::parse_config(j);
    if (cfg.experiment != experiment) {
      std::cerr << "experiment mismatch: command line says '" << experiment
                << "', config says '" << cfg.experiment << "'\n";
      return 2;
    }

    const auto bundle = cgm::harness::run(cfg);
    const auto files = cgm::harness::emit(bundle, cfg);

    std::cout << "config_hash " << bundle.config_hash << "\n";
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    for (const auto& v : bundle.verdicts)
      std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << "  value=" << v.value
                << " threshold=" << v.threshold << (v.detail.empty() ? "" : "  (" + v.detail + ")")
                << "\n";
    std::cout << (bundle.all_pass() ? "ALL PASS" : "FAILURES PRESENT") << "  ("
              << bundle.wall_seconds << "s)\n";
    return bundle.all_pass() ? 0 : 1;
  } catch (const cgm::harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
