#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mrta/qp.hpp"
#include "mrta/task.hpp"

namespace mrta {

/// Diagonal of S_i: suitability s_{i,m} >= 0 of one robot for each task.
struct Specialization {
  Eigen::VectorXd entries;
};

/// Desired fraction pi*_m of the team executing task m with highest priority.
struct GlobalSpec {
  Eigen::VectorXd pi_star;
};

struct AllocParams {
  double C = 100.0;          // allocation-tracking weight
  double kappa = 10.0;       // priority ratio, > 1
  double delta_max = 50.0;   // slack bound
  double eps_reg = 1e-6;     // strict-convexity regularizer on delta and alpha
};

/// Throws std::invalid_argument naming the offending parameter.
void validate_params(const AllocParams& params);

/// Everything about the team that does not change between timesteps.
struct AllocationModel {
  std::vector<TaskSpec> tasks;
  std::vector<Specialization> specializations;  // one per robot
  GlobalSpec global;
  AllocParams params;
  GammaSpec gamma;

  Eigen::Index num_tasks() const { return static_cast<Eigen::Index>(tasks.size()); }
  Eigen::Index num_robots() const { return static_cast<Eigen::Index>(specializations.size()); }
};

/// Decision vector layout. Robot i owns the block [u_i (d), delta_i (M), alpha_i (M)];
/// blocks are concatenated in robot order.
///
/// Inequality rows: first N*M barrier rows ordered (i, m), then N*M*(M-1)
/// priority rows ordered (i, m, n) with n != m ascending. Equality rows: one
/// per robot.
struct VariableLayout {
  Eigen::Index dim = 0;
  Eigen::Index num_tasks = 0;
  Eigen::Index num_robots = 0;

  Eigen::Index block_size() const { return dim + 2 * num_tasks; }
  Eigen::Index size() const { return num_robots * block_size(); }
  Eigen::Index u(Eigen::Index i, Eigen::Index k = 0) const { return i * block_size() + k; }
  Eigen::Index delta(Eigen::Index i, Eigen::Index m) const { return i * block_size() + dim + m; }
  Eigen::Index alpha(Eigen::Index i, Eigen::Index m) const { return i * block_size() + dim + num_tasks + m; }

  Eigen::Index num_barrier_rows() const { return num_robots * num_tasks; }
  Eigen::Index num_priority_rows() const { return num_robots * num_tasks * (num_tasks - 1); }
  Eigen::Index barrier_row(Eigen::Index i, Eigen::Index m) const { return i * num_tasks + m; }
  Eigen::Index priority_row(Eigen::Index i, Eigen::Index m, Eigen::Index n) const;
};

struct RelaxedQp {
  qp::Problem problem;
  VariableLayout layout;
};

struct AllocationDecision {
  Eigen::MatrixXd u;      // N x d
  Eigen::MatrixXd delta;  // N x M
  Eigen::MatrixXd alpha;  // N x M
  Eigen::VectorXd pi_h;   // M
  double objective = 0.0;
  qp::Status status = qp::Status::Optimal;
  int iterations = 0;
  qp::Residuals residuals;
};

/// Solver did not return Optimal. Carries the solver's best iterate.
class AllocationError : public std::runtime_error {
 public:
  AllocationError(const std::string& what, qp::Status status, AllocationDecision best)
      : std::runtime_error(what), status_(status), best_(std::move(best)) {}

  qp::Status status() const { return status_; }
  const AllocationDecision& best_iterate() const { return best_; }

 private:
  qp::Status status_;
  AllocationDecision best_;
};

/// Diagonal of P_i = S_i S_i^+: 1 where s_{i,m} > 0, else 0.
Eigen::VectorXd projector(const Specialization& s);

/// N x M matrix whose row i is projector(specs[i]).
Eigen::MatrixXd projector_matrix(const std::vector<Specialization>& specs);

/// (1/N) sum_i alpha_i, alpha is N x M.
Eigen::VectorXd pi_homogeneous(const Eigen::MatrixXd& alpha);

/// (1/N) sum_i P_i alpha_i, both arguments N x M.
Eigen::VectorXd pi_hetero(const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& projectors);

struct CapabilitySet {
  std::vector<Eigen::Index> executable;  // ascending task indices
  bool full_rank = false;                // every task executable
};

CapabilitySet capability_set(const Eigen::MatrixXd& projectors, Eigen::Index num_tasks);

/// Checks the model against N x d positions. Throws std::invalid_argument.
void validate_snapshot(const Eigen::MatrixXd& x, const AllocationModel& model);

/// Relaxed allocation QP at positions x (N x d). The objective is
///   C ||pi* - pi_h(alpha)||^2 + sum_i (||u_i||^2 + ||delta_i||^2_{S_i})
///     + eps sum_i (||delta_i||^2 + ||alpha_i||^2)
/// assembled as 1/2 z'Pz + q'z + c0 with c0 = C ||pi*||^2.
RelaxedQp build_relaxed_qp(const Eigen::MatrixXd& x, const AllocationModel& model);

/// Solves the relaxed QP. Throws AllocationError unless the solve is Optimal.
AllocationDecision solve_relaxed(const Eigen::MatrixXd& x, const AllocationModel& model,
                                 const qp::Settings& settings = {});

/// The QP in (u, delta) obtained by fixing alpha = e_{assignment[i]} for every
/// robot; tracking and alpha regularization terms move into the constant.
RelaxedQp build_fixed_assignment_qp(const Eigen::MatrixXd& x, const AllocationModel& model,
                                    const std::vector<Eigen::Index>& assignment);

/// Solves the fixed-assignment QP. Throws AllocationError unless Optimal.
AllocationDecision solve_fixed_assignment(const Eigen::MatrixXd& x, const AllocationModel& model,
                                          const std::vector<Eigen::Index>& assignment,
                                          const qp::Settings& settings = {});

struct OracleOptions {
  std::uint64_t enumeration_cap = 4096;
  // Objectives within this relative distance count as tied; the earlier
  // (lexicographically smaller) assignment is kept.
  double tie_tolerance = 1e-9;
};

class EnumerationCapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct OracleResult {
  std::vector<Eigen::Index> assignment;  // task index per robot
  AllocationDecision decision;
  double objective = 0.0;
};

/// Exact MIQP solution by enumerating all M^N binary priority assignments.
/// Throws EnumerationCapExceeded when M^N exceeds the cap and AllocationError
/// (message names the assignment) when an inner solve fails.
OracleResult miqp_oracle(const Eigen::MatrixXd& x, const AllocationModel& model, const qp::Settings& settings = {},
                         const OracleOptions& options = {});

}  // namespace mrta
