#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mrta::qp {

/// Dense convex QP
///
///   minimize    1/2 z'Pz + q'z + c0
///   subject to  G z <= h
///               A z  = b
///               lower <= z <= upper
///
/// Infinite bounds are allowed. Rows of G and A may be empty.
struct Problem {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  double c0 = 0.0;

  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// Zero objective, no constraints, free bounds.
  static Problem Unconstrained(Eigen::Index n);

  Eigen::Index num_variables() const { return q.size(); }
  Eigen::Index num_inequalities() const { return G.rows(); }
  Eigen::Index num_equalities() const { return A.rows(); }

  /// Appends rows to G/h or A/b. `row` must have num_variables() entries.
  void add_inequality(const Eigen::RowVectorXd& row, double rhs);
  void add_equality(const Eigen::RowVectorXd& row, double rhs);

  double objective(const Eigen::VectorXd& z) const;
};

enum class Status { Optimal, MaxIterations, Infeasible };

const char* to_string(Status status);

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double max() const;
};

struct Solution {
  Eigen::VectorXd z;
  double objective = 0.0;
  // Multipliers: dual_ineq for G rows, dual_eq for A rows, and one per
  // variable for each bound side (zero where the bound is infinite).
  // Stationarity reads Pz + q + G'dual_ineq + A'dual_eq + dual_upper - dual_lower = 0.
  Eigen::VectorXd dual_ineq;
  Eigen::VectorXd dual_eq;
  Eigen::VectorXd dual_lower;
  Eigen::VectorXd dual_upper;
  Status status = Status::MaxIterations;
  int iterations = 0;
  Residuals residuals;
};

struct Settings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_iter = 20000;
};

/// Returns one message per violated invariant of `p`; empty when well formed.
std::vector<std::string> validate_problem(const Problem& p);

/// KKT residuals of `sol` for `p`. Missing multiplier vectors count as zero.
///   primal:          largest constraint violation (inequality, equality, bound)
///   dual:            ||Pz + q + G'l + A'v + mu_u - mu_l||_inf
///   complementarity: largest |multiplier * constraint gap| over all rows
Residuals kkt_residuals(const Problem& p, const Solution& sol);

/// Primal-dual interior point (Mehrotra predictor-corrector) followed by an
/// active-set polish of the iterate. Status is Optimal only when every
/// residual and every negative multiplier is within settings.abs_tol.
///
/// Throws std::invalid_argument if validate_problem(p) is not empty.
Solution solve_qp(const Problem& p, const Settings& settings = {});

}  // namespace mrta::qp
