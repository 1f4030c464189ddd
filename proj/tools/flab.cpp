#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flab/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Poincare certificates and dynamics for B-scheme lattice chains"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<long long> seed;
  bool quiet = false;

  for (const auto& name : flab::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides outputs.dir)");
    sub->add_option("--seed", seed, "random seed (overrides sim.seed)");
    sub->add_flag("--quiet", quiet, "suppress the summary line");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : flab::kExitError;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    flab::ExperimentConfig cfg = flab::parse_config(config_path);
    if (out_dir) cfg.outputs.dir = *out_dir;
    if (seed) {
      if (*seed < 0) throw flab::Error("--seed must be nonnegative");
      cfg.sim.seed = static_cast<std::uint64_t>(*seed);
    }
    return flab::run_subcommand(cmd, cfg, quiet);
  } catch (const std::exception& e) {
    std::cerr << "flab: error: " << e.what() << '\n';
    return flab::kExitError;
  }
}
