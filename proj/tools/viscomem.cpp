// Command-line driver: one subcommand per experiment kind.
//   exit 0  all acceptance checks passed
//   exit 1  at least one check failed
//   exit 2  configuration or runtime error

#include "viscomem/config.hpp"
#include "viscomem/experiments.hpp"
#include "viscomem/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
};

viscomem::ExperimentConfig load(const std::string& kind, const Options& opt) {
  std::ifstream in(opt.config);
  if (!in) throw viscomem::InvalidInput("config: cannot open '" + opt.config + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  viscomem::Json j;
  try {
    j = viscomem::Json::parse(ss.str(), nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw viscomem::InvalidInput(std::string("config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw viscomem::InvalidInput("config: top level must be an object");
  if (!j.contains("experiment")) j["experiment"] = kind;
  if (j["experiment"] != kind) {
    throw viscomem::InvalidInput("config: experiment '" + j["experiment"].dump() +
                                 "' does not match subcommand '" + kind + "'");
  }
  if (opt.out) j["output"] = *opt.out;
  if (opt.seed) j["seed"] = *opt.seed;
  if (opt.workers) j["workers"] = *opt.workers;
  return viscomem::config_from_json(j);
}

int run(const std::string& kind, const Options& opt) {
  const viscomem::ExperimentConfig cfg = load(kind, opt);
  const viscomem::Report rep = viscomem::run_experiment(cfg);
  viscomem::emit(rep, cfg.output);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& c : rep.checks) {
    std::cout << fmt::format("[{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
  }
  std::cout << fmt::format("{} {} -> {} (config {})\n", kind, rep.passed() ? "passed" : "FAILED",
                           cfg.output, rep.config_hash);
  return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viscoelastic quasistatic-limit experiments"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;
  for (const auto& kind : viscomem::experiment_kinds()) {
    CLI::App* sub = app.add_subcommand(kind, "Run the " + kind + " experiment");
    sub->add_option("--config", opt.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", opt.out, "Output directory (overrides the config)");
    sub->add_option("--seed", opt.seed, "Random seed (overrides the config)");
    sub->add_option("--workers", opt.workers, "Worker threads (overrides the config)")
        ->check(CLI::PositiveNumber);
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return run(chosen, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
