#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mrta/commands.hpp"

namespace {

// MRTA_LOG_LEVEL takes spdlog level names: trace, debug, info, warn, error, critical, off.
void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("MRTA_LOG_LEVEL")) {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off") {
      spdlog::warn("unknown MRTA_LOG_LEVEL '{}', keeping 'warn'", level);
    } else {
      spdlog::set_level(parsed);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Multi-robot task allocation with prioritized control barrier functions"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir = "out";
  double time = 0.0;
  mrta::cli::RunOptions run_options;

  CLI::App* run = app.add_subcommand("run", "Simulate a scenario and write trajectory.csv, summary.json, prop1_report.json");
  run->add_option("scenario", scenario, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--prop1-tol", run_options.prop1_tolerance, "Tolerance of the progress and rest monitors")
      ->capture_default_str();

  CLI::App* compare = app.add_subcommand("oracle-compare", "Compare the relaxed QP with exact enumeration at a snapshot");
  compare->add_option("scenario", scenario, "Scenario JSON file")->required();
  compare->add_option("--time", time, "Snapshot time in seconds")->capture_default_str();

  CLI::App* validate = app.add_subcommand("validate", "Parse a scenario and report its capability set");
  validate->add_option("scenario", scenario, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mrta::cli::kExitFailure;
  }

  if (*run) {
    spdlog::info("run {} -> {}", scenario, out_dir);
    const int code = mrta::cli::cmd_run(scenario, out_dir, std::cout, std::cerr, run_options);
    spdlog::debug("run exit code {}", code);
    return code;
  }
  if (*compare) {
    spdlog::info("oracle-compare {} at t = {}", scenario, time);
    return mrta::cli::cmd_oracle_compare(scenario, time, std::cout, std::cerr);
  }
  spdlog::info("validate {}", scenario);
  return mrta::cli::cmd_validate(scenario, std::cout, std::cerr);
}
