#include <iostream>

#include "CLI11.hpp"
#include "mstnpi/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multisite tensor network path integral simulations of dissipative spin chains"};
  app.set_version_flag("--version", std::string(MSTNPI_VERSION));
  app.require_subcommand(1);

  mstnpi::RunOptions opts;
  std::string oracle = "none";
  std::string scan;
  auto* run = app.add_subcommand("run", "Propagate a configuration and write CSV trajectories");
  run->add_option("--config", opts.config_path, "Configuration file (key = value)")->required()->check(CLI::ExistingFile);
  run->add_option("--output", opts.output_dir, "Output directory")->capture_default_str();
  run->add_option("--oracle", oracle, "Reference solver to run alongside")
      ->check(CLI::IsMember({"none", "path-sum", "dense", "exact-diag"}))
      ->capture_default_str();
  run->add_option("--scan", scan, "Vary one parameter: dt|L|chi=v1,v2,...");

  CLI11_PARSE(app, argc, argv);

  try {
    opts.oracle = mstnpi::parse_oracle_kind(oracle);
    if (!scan.empty()) opts.scan = mstnpi::parse_scan(scan);
    mstnpi::run_command(opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
