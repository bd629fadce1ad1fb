#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "polaron_tfim/runner.hpp"

namespace pt = polaron_tfim;

int main(int argc, char** argv) {
  CLI::App app{"Domain-wall relaxation of the triangular transverse-field Ising model"};
  app.require_subcommand(1);

  std::string config_path;
  pt::RunOptions opts;
  opts.jobs = pt::default_jobs();

  for (const char* name : {"relax", "rates", "collapse", "sw-check", "ed-check"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Run configuration (key = value) or a run manifest")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--jobs", opts.jobs, "Worker threads; output does not depend on it")->check(CLI::PositiveNumber);
    sub->add_option("--out", opts.out_dir, "Output directory (default: output.dir, then $POLARON_TFIM_OUT, then ./out)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? pt::kExitOk : pt::kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  pt::RunConfig cfg;
  try {
    std::ifstream is(config_path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    cfg = pt::parse_config(buffer.str(), pt::parse_kind(name));
  } catch (const std::exception& e) {
    std::cerr << pt::error_json("config", e).dump() << '\n';
    return pt::kExitConfig;
  }

  try {
    const auto summary = pt::run_experiment(cfg, opts);
    std::cout << summary.dump(2) << '\n';
  } catch (const std::exception& e) {
    std::cerr << pt::error_json("runtime", e).dump() << '\n';
    return pt::kExitRuntime;
  }
  return pt::kExitOk;
}
