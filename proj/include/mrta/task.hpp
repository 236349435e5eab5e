#pragma once

#include <string>

#include <Eigen/Dense>

namespace mrta {

enum class TaskKind { GoToPoint };

/// Drive to `target`. Cost J(x) = ||x - target||^2, barrier h = -J.
struct TaskSpec {
  TaskKind kind = TaskKind::GoToPoint;
  Eigen::VectorXd target;
  std::string label;

  static TaskSpec GoToPoint(Eigen::VectorXd target, std::string label = {});
  Eigen::Index dimension() const { return target.size(); }
};

enum class GammaKind { Linear, Cubic };

/// Odd extended class-K function: Linear gain*h, Cubic gain*h^3.
struct GammaSpec {
  GammaKind kind = GammaKind::Linear;
  double gain = 1.0;
};

struct BarrierEval {
  double h = 0.0;
  Eigen::VectorXd grad_h;
};

struct SingleTaskCommand {
  Eigen::VectorXd u;
  double delta = 0.0;
};

const char* to_string(GammaKind kind);

/// Throws std::invalid_argument unless gain > 0 and finite.
void validate_gamma(const GammaSpec& g);

// All of these throw std::invalid_argument on a dimension mismatch.
double eval_cost(const TaskSpec& task, const Eigen::VectorXd& x);
Eigen::VectorXd cost_gradient(const TaskSpec& task, const Eigen::VectorXd& x);
BarrierEval eval_barrier(const TaskSpec& task, const Eigen::VectorXd& x);

double gamma_eval(const GammaSpec& g, double h);

/// Exact minimizer of ||u||^2 + delta^2 s.t. grad_h * u >= -gamma(h) - delta.
///
/// With a = grad_h and b = -gamma(h) the constraint reads a'u + delta >= b,
/// so the answer is the projection of the origin onto that halfspace:
/// zero when b <= 0, otherwise b * (a, 1) / (||a||^2 + 1).
SingleTaskCommand single_task_controller(const Eigen::VectorXd& x, const TaskSpec& task, const GammaSpec& g);

}  // namespace mrta
