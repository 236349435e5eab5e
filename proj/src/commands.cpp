#include "mrta/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mrta/allocation.hpp"
#include "mrta/scenario.hpp"

namespace mrta::cli {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr double kBoundSlack = 1e-8;
constexpr double kNearBinary = 1e-6;
constexpr double kMatchesOracle = 1e-3;
constexpr double kSumTolerance = 1e-9;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_array(const VectorXd& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json to_rows(const MatrixXd& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(to_array(m.row(i).transpose()));
  return a;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string trajectory_header(Index dimension, Index num_tasks) {
  std::string h = "t,robot";
  for (Index k = 1; k <= dimension; ++k) h += ",x" + std::to_string(k);
  for (Index k = 1; k <= dimension; ++k) h += ",u" + std::to_string(k);
  for (Index m = 1; m <= num_tasks; ++m) h += ",delta" + std::to_string(m);
  for (Index m = 1; m <= num_tasks; ++m) h += ",alpha" + std::to_string(m);
  for (Index m = 1; m <= num_tasks; ++m) h += ",pi_h" + std::to_string(m);
  return h;
}

void write_trajectory_csv(const sim::SimLog& log, std::ostream& out) {
  if (log.steps.empty()) return;
  const sim::StepRecord& first = log.steps.front();
  out << trajectory_header(first.x.cols(), first.alpha.cols()) << '\n';
  for (const sim::StepRecord& r : log.steps) {
    for (Index i = 0; i < r.x.rows(); ++i) {
      out << fmt(r.t) << ',' << (i + 1);
      for (Index k = 0; k < r.x.cols(); ++k) out << ',' << fmt(r.x(i, k));
      for (Index k = 0; k < r.u.cols(); ++k) out << ',' << fmt(r.u(i, k));
      for (Index m = 0; m < r.delta.cols(); ++m) out << ',' << fmt(r.delta(i, m));
      for (Index m = 0; m < r.alpha.cols(); ++m) out << ',' << fmt(r.alpha(i, m));
      for (Index m = 0; m < r.pi_h.size(); ++m) out << ',' << fmt(r.pi_h(m));
      out << '\n';
    }
  }
}

json summary_json(const sim::SimLog& log, const sim::Prop1Report& report, double wall_seconds) {
  json s;
  s["completed"] = log.completed;
  s["failure"] = log.failure;
  s["steps"] = log.steps.size();
  s["wall_clock_seconds"] = wall_seconds;
  if (log.steps.empty()) return s;
  const sim::Metrics m = sim::metrics(log);
  s["final_time"] = log.steps.back().t;
  s["final_objective"] = log.summary.final_objective;
  s["prop1_violations"] = report.violations.size();
  s["path_lengths"] = to_array(m.path_length);
  s["final_J"] = to_rows(m.final_J);
  s["min_alpha"] = to_rows(m.min_alpha);
  s["max_alpha"] = to_rows(m.max_alpha);
  s["max_delta"] = to_rows(m.max_delta);
  s["solver"] = {{"total_iterations", log.summary.total_iterations},
                 {"max_iterations", log.summary.max_iterations},
                 {"mean_iterations", static_cast<double>(log.summary.total_iterations) /
                                         static_cast<double>(log.steps.size())}};
  return s;
}

json prop1_json(const sim::SimLog& log, const sim::Prop1Report& report, double tol) {
  json r;
  r["tolerance"] = tol;
  r["stationary_steps"] = report.stationary_steps;
  r["violation_count"] = report.violations.size();
  r["violations"] = json::array();
  for (const sim::Prop1Violation& v : report.violations) {
    r["violations"].push_back({{"step", v.step},
                               {"t", log.steps[static_cast<std::size_t>(v.step)].t},
                               {"robot", v.robot + 1},
                               {"clause", sim::to_string(v.clause)},
                               {"value", v.value}});
  }
  return r;
}

int cmd_run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir, std::ostream& out,
            std::ostream& err, const RunOptions& options) {
  if (!std::isfinite(options.prop1_tolerance)) {
    err << "error: prop1 tolerance must be finite\n";
    return kExitFailure;
  }
  sim::Scenario s;
  try {
    s = scenario::load_scenario(scenario_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }

  const auto start = std::chrono::steady_clock::now();
  const sim::SimLog log = sim::run_simulation(s, options.settings);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  sim::Prop1Report report;
  try {
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir / "trajectory.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / "trajectory.csv").string());
    write_trajectory_csv(log, csv);
    csv.close();
    if (!csv) throw std::runtime_error("write failed for " + (out_dir / "trajectory.csv").string());
    if (!log.steps.empty()) report = sim::check_proposition1(log, options.prop1_tolerance);
    write_file(out_dir / "summary.json", summary_json(log, report, wall).dump(2) + "\n");
    if (!log.steps.empty()) {
      write_file(out_dir / "prop1_report.json", prop1_json(log, report, options.prop1_tolerance).dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }

  if (!log.completed) {
    err << "error: " << log.failure << '\n';
    return kExitFailure;
  }
  out << "steps: " << log.steps.size() << ", final objective " << fmt(log.summary.final_objective)
      << ", prop1 violations " << report.violations.size() << '\n';
  return report.violations.empty() ? kExitOk : kExitMonitorViolation;
}

int cmd_oracle_compare(const std::filesystem::path& scenario_path, double time, std::ostream& out, std::ostream& err,
                       const qp::Settings& settings) {
  try {
    const sim::Scenario s = scenario::load_scenario(scenario_path);
    if (!(time >= 0.0) || !std::isfinite(time)) throw std::invalid_argument("time must be non-negative");
    const AllocationModel model = s.model();

    MatrixXd x = s.initial_positions();
    const Index advance = time > 0.0 ? sim::step_count(s.dt, time) - 1 : 0;
    for (Index k = 0; k < advance; ++k) x = sim::step_euler(x, solve_relaxed(x, model, settings).u, s.dt);

    const AllocationDecision relaxed = solve_relaxed(x, model, settings);
    const OracleResult oracle = miqp_oracle(x, model, settings);

    MatrixXd oracle_alpha = MatrixXd::Zero(model.num_robots(), model.num_tasks());
    json assignment = json::array();
    for (Index i = 0; i < model.num_robots(); ++i) {
      oracle_alpha(i, oracle.assignment[static_cast<std::size_t>(i)]) = 1.0;
      assignment.push_back(oracle.assignment[static_cast<std::size_t>(i)] + 1);
    }
    const double binary_gap = (relaxed.alpha - relaxed.alpha.array().round().matrix()).cwiseAbs().maxCoeff();
    const double oracle_distance = (relaxed.alpha - oracle_alpha).cwiseAbs().maxCoeff();
    const bool bound_holds = relaxed.objective <= oracle.objective + kBoundSlack;

    json record;
    record["time"] = static_cast<double>(advance) * s.dt;
    record["positions"] = to_rows(x);
    record["relaxed_objective"] = relaxed.objective;
    record["oracle_objective"] = oracle.objective;
    record["gap"] = oracle.objective - relaxed.objective;
    record["oracle_assignment"] = assignment;
    record["relaxed_alpha"] = to_rows(relaxed.alpha);
    record["relaxed_alpha_near_binary"] = binary_gap <= kNearBinary;
    record["relaxed_alpha_matches_oracle"] = oracle_distance <= kMatchesOracle;
    record["relaxation_bound_holds"] = bound_holds;
    out << record.dump(2) << '\n';
    return bound_holds ? kExitOk : kExitMonitorViolation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_validate(const std::filesystem::path& scenario_path, std::ostream& out, std::ostream& err) {
  sim::Scenario s;
  try {
    s = scenario::load_scenario(scenario_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  const Index M = s.num_tasks();
  const AllocationModel model = s.model();
  const CapabilitySet caps = capability_set(projector_matrix(model.specializations), M);

  out << s.num_robots() << " robots, " << M << " tasks, dimension " << s.dimension << '\n';
  if (caps.full_rank) {
    out << "all " << M << " tasks executable; full column rank\n";
  } else {
    out << caps.executable.size() << " of " << M << " tasks executable (";
    for (std::size_t k = 0; k < caps.executable.size(); ++k) out << (k ? ", " : "") << caps.executable[k] + 1;
    out << "); not full column rank\n";
  }

  std::vector<bool> executable(static_cast<std::size_t>(M), false);
  for (Index m : caps.executable) executable[static_cast<std::size_t>(m)] = true;
  for (Index m = 0; m < M; ++m) {
    if (s.global.pi_star(m) > 0.0 && !executable[static_cast<std::size_t>(m)]) {
      out << "warning: pi_star[" << m << "] = " << s.global.pi_star(m) << " but no robot can execute task " << m + 1
          << '\n';
    }
  }
  const double sum = s.global.pi_star.sum();
  if (std::abs(sum - 1.0) > kSumTolerance) out << "warning: pi_star sums to " << fmt(sum) << ", not 1\n";
  return kExitOk;
}

}  // namespace mrta::cli
