#include "mrta/task.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mrta {

namespace {

void check_dimension(const TaskSpec& task, const Eigen::VectorXd& x) {
  if (x.size() != task.dimension()) {
    throw std::invalid_argument("task dimension " + std::to_string(task.dimension()) +
                                " does not match position dimension " + std::to_string(x.size()));
  }
}

}  // namespace

TaskSpec TaskSpec::GoToPoint(Eigen::VectorXd target, std::string label) {
  TaskSpec t;
  t.kind = TaskKind::GoToPoint;
  t.target = std::move(target);
  t.label = std::move(label);
  return t;
}

const char* to_string(GammaKind kind) { return kind == GammaKind::Linear ? "linear" : "cubic"; }

void validate_gamma(const GammaSpec& g) {
  if (!(g.gain > 0.0) || !std::isfinite(g.gain)) throw std::invalid_argument("gamma gain must be positive");
}

double eval_cost(const TaskSpec& task, const Eigen::VectorXd& x) {
  check_dimension(task, x);
  return (x - task.target).squaredNorm();
}

Eigen::VectorXd cost_gradient(const TaskSpec& task, const Eigen::VectorXd& x) {
  check_dimension(task, x);
  return 2.0 * (x - task.target);
}

BarrierEval eval_barrier(const TaskSpec& task, const Eigen::VectorXd& x) {
  return {-eval_cost(task, x), -cost_gradient(task, x)};
}

double gamma_eval(const GammaSpec& g, double h) {
  switch (g.kind) {
    case GammaKind::Linear:
      return g.gain * h;
    case GammaKind::Cubic:
      return g.gain * h * h * h;
  }
  return 0.0;
}

SingleTaskCommand single_task_controller(const Eigen::VectorXd& x, const TaskSpec& task, const GammaSpec& g) {
  const BarrierEval barrier = eval_barrier(task, x);
  const double b = -gamma_eval(g, barrier.h);
  SingleTaskCommand cmd{Eigen::VectorXd::Zero(x.size()), 0.0};
  if (b <= 0.0) return cmd;
  // a = 0 degenerates to delta >= b.
  const double scale = b / (barrier.grad_h.squaredNorm() + 1.0);
  cmd.u = scale * barrier.grad_h;
  cmd.delta = scale;
  return cmd;
}

}  // namespace mrta
