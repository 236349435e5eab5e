#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include <json.hpp>

#include "mrta/qp.hpp"
#include "mrta/sim.hpp"

namespace mrta::cli {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitMonitorViolation = 2 };

/// Header row: t,robot,x1..xd,u1..ud,delta1..deltaM,alpha1..alphaM,pi_h1..pi_hM.
std::string trajectory_header(Eigen::Index dimension, Eigen::Index num_tasks);

/// One row per robot per step, robots numbered from 1, numbers with 17
/// significant digits. The team allocation pi_h is repeated on each robot row.
void write_trajectory_csv(const sim::SimLog& log, std::ostream& out);

struct RunOptions {
  qp::Settings settings;
  double prop1_tolerance = sim::kProp1Tolerance;
};

nlohmann::json summary_json(const sim::SimLog& log, const sim::Prop1Report& report, double wall_seconds);
nlohmann::json prop1_json(const sim::SimLog& log, const sim::Prop1Report& report, double tol);

/// Simulates the scenario and writes trajectory.csv, summary.json and
/// prop1_report.json into out_dir. Exit 0 on success, 2 on monitor
/// violations, 1 on parse, I/O or solver failure.
int cmd_run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir, std::ostream& out,
            std::ostream& err, const RunOptions& options = {});

/// Advances the closed loop to `time`, then solves the relaxed QP and the
/// exact enumeration at that snapshot and prints a JSON record. Exit 0 iff
/// relaxed <= oracle + 1e-8.
int cmd_oracle_compare(const std::filesystem::path& scenario_path, double time, std::ostream& out, std::ostream& err,
                       const qp::Settings& settings = {});

/// Parses the scenario and reports the capability set and pi* warnings.
int cmd_validate(const std::filesystem::path& scenario_path, std::ostream& out, std::ostream& err);

}  // namespace mrta::cli
