#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mcbsde/app/commands.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Markov-chain BSDE solver"};
  cli.require_subcommand(1);

  mcbsde::app::RunOptions options;
  std::string config, out = ".";
  for (const char* name : {"solve", "simulate", "represent", "verify", "diagnose"}) {
    CLI::App* sub = cli.add_subcommand(name);
    sub->add_option("--config", config, "JSON problem configuration")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--parallel", options.parallel, "worker threads for path loops")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--record-time", options.record_time, "write wall time into report.json");
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : mcbsde::app::kExitConfig;
  }
  options.config = config;
  options.out = out;
  return mcbsde::app::run_command(cli.get_subcommands().front()->get_name(), options, std::cerr);
}
