// lab: run one experiment on a disorder model and write CSV/JSON output.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pointlab/cli.hpp"

namespace cli = pointlab::cli;

int main(int argc, char** argv) {
  CLI::App app{"Point-interaction localization laboratory"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);

  cli::ExperimentConfig config;
  std::string model_path, output, format = "csv";
  for (const char* name : {"lyapunov", "dichotomy", "spectrum", "decay", "dynamics", "bands"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--model", model_path, "model JSON file")->required();
    sub->add_option("--out", output, "output file")->required();
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--emin", config.emin);
    sub->add_option("--emax", config.emax);
    sub->add_option("--points", config.points, "energy grid points");
    sub->add_option("--cells", config.cells, "box cells");
    sub->add_option("--steps", config.steps, "transfer steps per replica");
    sub->add_option("--replicas", config.replicas);
    sub->add_option("--seed", config.seed, "master seed (LAB_SEED overrides)");
    sub->add_option("--threads", config.threads, "worker threads, 0 = all cores");
    sub->add_option("--tol", config.tol, "eigenvalue tolerance");
    sub->add_option("--p", config.p, "moment exponent");
    sub->add_option("--kmin", config.kmin, "initial state support, left end");
    sub->add_option("--kmax", config.kmax, "initial state support, right end");
    sub->add_option("--times", config.times, "evolution times")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    config.experiment = cli::parse_experiment(app.get_subcommands().front()->get_name());
    config.model_path = model_path;
    config.output = output;
    config.format = format == "json" ? cli::Format::json : cli::Format::csv;
    cli::apply_environment(config);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return cli::run(config, std::cout, std::cerr);
}
