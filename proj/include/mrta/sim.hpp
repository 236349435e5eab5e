#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrta/allocation.hpp"
#include "mrta/qp.hpp"
#include "mrta/task.hpp"

namespace mrta::sim {

struct RobotSpec {
  Eigen::VectorXd start;
  Specialization specialization;
};

struct Scenario {
  Eigen::Index dimension = 2;
  std::vector<RobotSpec> robots;
  std::vector<TaskSpec> tasks;
  GlobalSpec global;
  AllocParams params;
  GammaSpec gamma;
  double dt = 0.02;
  double duration = 10.0;

  Eigen::Index num_robots() const { return static_cast<Eigen::Index>(robots.size()); }
  Eigen::Index num_tasks() const { return static_cast<Eigen::Index>(tasks.size()); }

  AllocationModel model() const;
  Eigen::MatrixXd initial_positions() const;  // N x d
};

/// Throws std::invalid_argument on the first violated invariant.
void validate_scenario(const Scenario& s);

/// floor(duration / dt) + 1, robust to the rounding of e.g. 10 / 0.02.
Eigen::Index step_count(double dt, double duration);

Eigen::MatrixXd step_euler(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u, double dt);

struct StepRecord {
  double t = 0.0;
  Eigen::MatrixXd x;      // N x d
  Eigen::MatrixXd u;      // N x d
  Eigen::MatrixXd delta;  // N x M
  Eigen::MatrixXd alpha;  // N x M
  Eigen::VectorXd pi_h;   // M
  Eigen::MatrixXd J;      // N x M
  Eigen::MatrixXd Jdot;   // N x M, grad J_{i,m}(x_i) . u_i
  double objective = 0.0;
  int iterations = 0;
};

struct SimSummary {
  double final_objective = 0.0;
  Eigen::VectorXd path_lengths;
  Eigen::Index prop1_violations = 0;
  long total_iterations = 0;
  int max_iterations = 0;
};

struct SimLog {
  std::vector<StepRecord> steps;
  SimSummary summary;
  bool completed = false;
  std::string failure;  // empty unless a solve failed
};

/// Tolerance used for the violation count stored in SimLog::summary.
inline constexpr double kProp1Tolerance = 1e-6;

/// Solves the relaxed allocation at each step and integrates with explicit
/// Euler. A solver failure stops the run; the log keeps every completed step.
SimLog run_simulation(const Scenario& s, const qp::Settings& settings = {});

struct Prop1Violation {
  enum class Clause { SomeTaskProgresses, StillAtStationaryPoint };
  Eigen::Index step = 0;
  Eigen::Index robot = 0;
  Clause clause = Clause::SomeTaskProgresses;
  double value = 0.0;  // min_m Jdot for the first clause, ||u_i|| for the second
};

std::string to_string(Prop1Violation::Clause c);

struct Prop1Report {
  std::vector<Prop1Violation> violations;
  Eigen::Index stationary_steps = 0;  // steps where the second clause applied
};

/// Per robot and step: some task must have Jdot <= tol. At steps where every
/// cost gradient has norm <= tol, every ||u_i|| must be <= tol.
Prop1Report check_proposition1(const SimLog& log, double tol);

struct Metrics {
  Eigen::VectorXd path_length;  // N
  Eigen::MatrixXd final_J;      // N x M
  Eigen::MatrixXd min_alpha;    // N x M over time
  Eigen::MatrixXd max_alpha;
  Eigen::MatrixXd max_delta;
};

Metrics metrics(const SimLog& log);

}  // namespace mrta::sim
