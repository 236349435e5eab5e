#include "mrta/sim.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mrta::sim {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

AllocationModel Scenario::model() const {
  AllocationModel m;
  m.tasks = tasks;
  m.global = global;
  m.params = params;
  m.gamma = gamma;
  m.specializations.reserve(robots.size());
  for (const RobotSpec& r : robots) m.specializations.push_back(r.specialization);
  return m;
}

MatrixXd Scenario::initial_positions() const {
  MatrixXd x(num_robots(), dimension);
  for (Index i = 0; i < num_robots(); ++i) x.row(i) = robots[i].start.transpose();
  return x;
}

void validate_scenario(const Scenario& s) {
  if (s.dimension < 1) throw std::invalid_argument("dimension must be positive");
  if (!(s.dt > 0.0) || !std::isfinite(s.dt)) throw std::invalid_argument("dt must be positive");
  if (!(s.duration > s.dt) || !std::isfinite(s.duration)) throw std::invalid_argument("duration must exceed dt");
  for (Index i = 0; i < s.num_robots(); ++i) {
    if (s.robots[i].start.size() != s.dimension) {
      throw std::invalid_argument("robots[" + std::to_string(i) + "].start length does not match dimension");
    }
  }
  MatrixXd x(s.num_robots(), s.dimension);
  for (Index i = 0; i < s.num_robots(); ++i) x.row(i) = s.robots[i].start.transpose();
  validate_snapshot(x, s.model());
}

Index step_count(double dt, double duration) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  return static_cast<Index>(std::floor(duration / dt + 1e-9)) + 1;
}

MatrixXd step_euler(const MatrixXd& x, const MatrixXd& u, double dt) {
  return x + dt * u;
}

namespace {

StepRecord make_record(double t, const MatrixXd& x, const AllocationDecision& d, const AllocationModel& model) {
  StepRecord r;
  r.t = t;
  r.x = x;
  r.u = d.u;
  r.delta = d.delta;
  r.alpha = d.alpha;
  r.pi_h = d.pi_h;
  r.objective = d.objective;
  r.iterations = d.iterations;
  const Index N = x.rows();
  const Index M = model.num_tasks();
  r.J.resize(N, M);
  r.Jdot.resize(N, M);
  for (Index i = 0; i < N; ++i) {
    const VectorXd xi = x.row(i).transpose();
    const VectorXd ui = d.u.row(i).transpose();
    for (Index m = 0; m < M; ++m) {
      r.J(i, m) = eval_cost(model.tasks[m], xi);
      r.Jdot(i, m) = cost_gradient(model.tasks[m], xi).dot(ui);
    }
  }
  return r;
}

}  // namespace

SimLog run_simulation(const Scenario& s, const qp::Settings& settings) {
  validate_scenario(s);
  const AllocationModel model = s.model();
  const Index steps = step_count(s.dt, s.duration);

  SimLog log;
  log.steps.reserve(static_cast<std::size_t>(steps));
  MatrixXd x = s.initial_positions();
  for (Index k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * s.dt;
    AllocationDecision d;
    try {
      d = solve_relaxed(x, model, settings);
    } catch (const AllocationError& e) {
      std::ostringstream msg;
      msg << "solver failed at step " << k << " (t = " << t << "): " << e.what();
      log.failure = msg.str();
      break;
    }
    log.steps.push_back(make_record(t, x, d, model));
    x = step_euler(x, d.u, s.dt);
  }
  log.completed = log.failure.empty();

  if (!log.steps.empty()) {
    log.summary.final_objective = log.steps.back().objective;
    log.summary.path_lengths = metrics(log).path_length;
    log.summary.prop1_violations = static_cast<Index>(check_proposition1(log, kProp1Tolerance).violations.size());
    for (const StepRecord& r : log.steps) {
      log.summary.total_iterations += r.iterations;
      log.summary.max_iterations = std::max(log.summary.max_iterations, r.iterations);
    }
  }
  return log;
}

std::string to_string(Prop1Violation::Clause c) {
  return c == Prop1Violation::Clause::SomeTaskProgresses ? "some-task-progresses" : "still-at-stationary-point";
}

Prop1Report check_proposition1(const SimLog& log, double tol) {
  if (log.steps.empty()) throw std::invalid_argument("empty simulation log");
  Prop1Report report;
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const StepRecord& r = log.steps[k];
    const Index step = static_cast<Index>(k);
    for (Index i = 0; i < r.Jdot.rows(); ++i) {
      const double best = r.Jdot.row(i).minCoeff();
      if (best > tol) report.violations.push_back({step, i, Prop1Violation::Clause::SomeTaskProgresses, best});
    }
    // ||grad J|| = 2 sqrt(J) for go-to tasks.
    const double max_grad = 2.0 * std::sqrt(std::max(0.0, r.J.maxCoeff()));
    if (max_grad <= tol) {
      ++report.stationary_steps;
      for (Index i = 0; i < r.u.rows(); ++i) {
        const double speed = r.u.row(i).norm();
        if (speed > tol) report.violations.push_back({step, i, Prop1Violation::Clause::StillAtStationaryPoint, speed});
      }
    }
  }
  return report;
}

Metrics metrics(const SimLog& log) {
  if (log.steps.empty()) throw std::invalid_argument("empty simulation log");
  const StepRecord& first = log.steps.front();
  const Index N = first.x.rows();
  Metrics m;
  m.path_length = VectorXd::Zero(N);
  for (std::size_t k = 1; k < log.steps.size(); ++k) {
    m.path_length += (log.steps[k].x - log.steps[k - 1].x).rowwise().norm();
  }
  m.final_J = log.steps.back().J;
  m.min_alpha = first.alpha;
  m.max_alpha = first.alpha;
  m.max_delta = first.delta;
  for (const StepRecord& r : log.steps) {
    m.min_alpha = m.min_alpha.cwiseMin(r.alpha);
    m.max_alpha = m.max_alpha.cwiseMax(r.alpha);
    m.max_delta = m.max_delta.cwiseMax(r.delta);
  }
  return m;
}

}  // namespace mrta::sim
