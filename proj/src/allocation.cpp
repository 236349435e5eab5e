#include "mrta/allocation.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <utility>

namespace mrta {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VariableLayout make_layout(const MatrixXd& x, const AllocationModel& model) {
  return VariableLayout{x.cols(), model.num_tasks(), model.num_robots()};
}

// Barrier row for (i, m): -(dh/dx_i) u_i - delta_{i,m} <= gamma(h_{i,m}).
// `delta_col` is the column of delta_{i,m} in the caller's layout.
void add_barrier_row(qp::Problem& p, const VectorXd& xi, const TaskSpec& task, const GammaSpec& gamma,
                     Index u_col, Index delta_col) {
  const BarrierEval e = eval_barrier(task, xi);
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p.num_variables());
  row.segment(u_col, xi.size()) = -e.grad_h.transpose();
  row(delta_col) = -1.0;
  p.add_inequality(row, gamma_eval(gamma, e.h));
}

std::string format_assignment(const std::vector<Index>& assignment) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < assignment.size(); ++i) os << (i ? ", " : "") << assignment[i] + 1;
  os << ')';
  return os.str();
}

AllocationDecision empty_decision(const VariableLayout& layout) {
  AllocationDecision d;
  d.u = MatrixXd::Zero(layout.num_robots, layout.dim);
  d.delta = MatrixXd::Zero(layout.num_robots, layout.num_tasks);
  d.alpha = MatrixXd::Zero(layout.num_robots, layout.num_tasks);
  return d;
}

}  // namespace

void validate_params(const AllocParams& params) {
  if (!(params.C > 0.0) || !std::isfinite(params.C)) throw std::invalid_argument("C must be positive");
  if (!(params.kappa > 1.0) || !std::isfinite(params.kappa)) throw std::invalid_argument("kappa must exceed 1");
  if (!(params.delta_max > 0.0) || !std::isfinite(params.delta_max)) {
    throw std::invalid_argument("delta_max must be positive");
  }
  if (!(params.eps_reg >= 0.0) || !std::isfinite(params.eps_reg)) {
    throw std::invalid_argument("eps_reg must be non-negative");
  }
}

Index VariableLayout::priority_row(Index i, Index m, Index n) const {
  return num_barrier_rows() + (i * num_tasks + m) * (num_tasks - 1) + (n < m ? n : n - 1);
}

VectorXd projector(const Specialization& s) {
  return (s.entries.array() > 0.0).cast<double>().matrix();
}

MatrixXd projector_matrix(const std::vector<Specialization>& specs) {
  const Index n = static_cast<Index>(specs.size());
  const Index m = n > 0 ? specs.front().entries.size() : 0;
  MatrixXd out(n, m);
  for (Index i = 0; i < n; ++i) out.row(i) = projector(specs[i]).transpose();
  return out;
}

VectorXd pi_homogeneous(const MatrixXd& alpha) {
  if (alpha.rows() == 0) return VectorXd::Zero(alpha.cols());
  return alpha.colwise().sum().transpose() / static_cast<double>(alpha.rows());
}

VectorXd pi_hetero(const MatrixXd& alpha, const MatrixXd& projectors) {
  if (alpha.rows() != projectors.rows() || alpha.cols() != projectors.cols()) {
    throw std::invalid_argument("pi_hetero: alpha and projectors differ in shape");
  }
  return pi_homogeneous(alpha.cwiseProduct(projectors));
}

CapabilitySet capability_set(const MatrixXd& projectors, Index num_tasks) {
  CapabilitySet out;
  for (Index m = 0; m < num_tasks; ++m) {
    if (m < projectors.cols() && projectors.rows() > 0 && projectors.col(m).maxCoeff() > 0.5) {
      out.executable.push_back(m);
    }
  }
  out.full_rank = num_tasks > 0 && static_cast<Index>(out.executable.size()) == num_tasks;
  return out;
}

void validate_snapshot(const MatrixXd& x, const AllocationModel& model) {
  const Index n = model.num_robots();
  const Index m = model.num_tasks();
  if (n < 1) throw std::invalid_argument("at least one robot required");
  if (m < 1) throw std::invalid_argument("at least one task required");
  if (x.rows() != n) {
    throw std::invalid_argument("positions have " + std::to_string(x.rows()) + " rows for " + std::to_string(n) +
                                " robots");
  }
  if (!x.allFinite()) throw std::invalid_argument("positions must be finite");
  for (Index k = 0; k < m; ++k) {
    if (model.tasks[k].dimension() != x.cols()) {
      throw std::invalid_argument("tasks[" + std::to_string(k) + "] target dimension does not match positions");
    }
  }
  for (Index i = 0; i < n; ++i) {
    const VectorXd& s = model.specializations[i].entries;
    if (s.size() != m) {
      throw std::invalid_argument("specializations[" + std::to_string(i) + "] length does not match task count");
    }
    if (!s.allFinite() || (s.array() < 0.0).any()) {
      throw std::invalid_argument("specializations[" + std::to_string(i) + "] has a negative entry");
    }
  }
  const VectorXd& pi = model.global.pi_star;
  if (pi.size() != m) throw std::invalid_argument("pi_star length does not match task count");
  if (!pi.allFinite() || (pi.array() < 0.0).any() || (pi.array() > 1.0).any()) {
    throw std::invalid_argument("pi_star entries must lie in [0, 1]");
  }
  validate_params(model.params);
  validate_gamma(model.gamma);
}

RelaxedQp build_relaxed_qp(const MatrixXd& x, const AllocationModel& model) {
  validate_snapshot(x, model);
  const VariableLayout L = make_layout(x, model);
  const Index N = L.num_robots;
  const Index M = L.num_tasks;
  const AllocParams& prm = model.params;
  const double inv_n = 1.0 / static_cast<double>(N);
  const MatrixXd proj = projector_matrix(model.specializations);
  const VectorXd& pi_star = model.global.pi_star;

  qp::Problem p = qp::Problem::Unconstrained(L.size());
  p.c0 = prm.C * pi_star.squaredNorm();

  for (Index i = 0; i < N; ++i) {
    for (Index k = 0; k < L.dim; ++k) p.P(L.u(i, k), L.u(i, k)) = 2.0;
    for (Index m = 0; m < M; ++m) {
      p.P(L.delta(i, m), L.delta(i, m)) = 2.0 * (model.specializations[i].entries(m) + prm.eps_reg);
      p.q(L.alpha(i, m)) = -2.0 * prm.C * inv_n * proj(i, m) * pi_star(m);
      for (Index j = 0; j < N; ++j) {
        p.P(L.alpha(i, m), L.alpha(j, m)) = 2.0 * prm.C * inv_n * inv_n * proj(i, m) * proj(j, m);
      }
      p.P(L.alpha(i, m), L.alpha(i, m)) += 2.0 * prm.eps_reg;

      p.lower(L.delta(i, m)) = 0.0;
      p.upper(L.delta(i, m)) = prm.delta_max;
      p.lower(L.alpha(i, m)) = 0.0;
      p.upper(L.alpha(i, m)) = 1.0;
    }
  }

  for (Index i = 0; i < N; ++i) {
    const VectorXd xi = x.row(i).transpose();
    for (Index m = 0; m < M; ++m) add_barrier_row(p, xi, model.tasks[m], model.gamma, L.u(i), L.delta(i, m));
  }

  // kappa delta_{i,m} - delta_{i,n} + kappa delta_max alpha_{i,m} <= kappa delta_max
  for (Index i = 0; i < N; ++i) {
    for (Index m = 0; m < M; ++m) {
      for (Index n = 0; n < M; ++n) {
        if (n == m) continue;
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(L.size());
        row(L.delta(i, m)) = prm.kappa;
        row(L.delta(i, n)) = -1.0;
        row(L.alpha(i, m)) = prm.kappa * prm.delta_max;
        p.add_inequality(row, prm.kappa * prm.delta_max);
      }
    }
  }

  for (Index i = 0; i < N; ++i) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(L.size());
    for (Index m = 0; m < M; ++m) row(L.alpha(i, m)) = 1.0;
    p.add_equality(row, 1.0);
  }
  return {std::move(p), L};
}

AllocationDecision solve_relaxed(const MatrixXd& x, const AllocationModel& model, const qp::Settings& settings) {
  const RelaxedQp relaxed = build_relaxed_qp(x, model);
  const VariableLayout& L = relaxed.layout;
  const qp::Solution sol = qp::solve_qp(relaxed.problem, settings);

  AllocationDecision d = empty_decision(L);
  for (Index i = 0; i < L.num_robots; ++i) {
    d.u.row(i) = sol.z.segment(L.u(i), L.dim).transpose();
    d.delta.row(i) = sol.z.segment(L.delta(i, 0), L.num_tasks).transpose();
    d.alpha.row(i) = sol.z.segment(L.alpha(i, 0), L.num_tasks).transpose();
  }
  d.pi_h = pi_hetero(d.alpha, projector_matrix(model.specializations));
  d.objective = sol.objective;
  d.status = sol.status;
  d.iterations = sol.iterations;
  d.residuals = sol.residuals;
  if (sol.status != qp::Status::Optimal) {
    throw AllocationError(std::string("relaxed allocation QP: ") + qp::to_string(sol.status), sol.status,
                          std::move(d));
  }
  return d;
}

RelaxedQp build_fixed_assignment_qp(const MatrixXd& x, const AllocationModel& model,
                                    const std::vector<Index>& assignment) {
  validate_snapshot(x, model);
  const Index N = model.num_robots();
  const Index M = model.num_tasks();
  const Index d = x.cols();
  if (static_cast<Index>(assignment.size()) != N) throw std::invalid_argument("assignment length must equal N");
  for (Index a : assignment) {
    if (a < 0 || a >= M) throw std::invalid_argument("assignment entry out of range");
  }
  const AllocParams& prm = model.params;

  // Inner layout: [u_i (d), delta_i (M)] per robot; alpha enters as data.
  VariableLayout L{d, M, N};
  const Index block = d + M;
  auto u_col = [&](Index i) { return i * block; };
  auto delta_col = [&](Index i, Index m) { return i * block + d + m; };

  MatrixXd alpha = MatrixXd::Zero(N, M);
  for (Index i = 0; i < N; ++i) alpha(i, assignment[i]) = 1.0;

  qp::Problem p = qp::Problem::Unconstrained(N * block);
  const VectorXd pi_h = pi_hetero(alpha, projector_matrix(model.specializations));
  p.c0 = prm.C * (model.global.pi_star - pi_h).squaredNorm() + prm.eps_reg * alpha.squaredNorm();

  for (Index i = 0; i < N; ++i) {
    for (Index k = 0; k < d; ++k) p.P(u_col(i) + k, u_col(i) + k) = 2.0;
    for (Index m = 0; m < M; ++m) {
      p.P(delta_col(i, m), delta_col(i, m)) = 2.0 * (model.specializations[i].entries(m) + prm.eps_reg);
      p.lower(delta_col(i, m)) = 0.0;
      p.upper(delta_col(i, m)) = prm.delta_max;
    }
  }
  for (Index i = 0; i < N; ++i) {
    const VectorXd xi = x.row(i).transpose();
    for (Index m = 0; m < M; ++m) add_barrier_row(p, xi, model.tasks[m], model.gamma, u_col(i), delta_col(i, m));
  }
  // kappa delta_{i,m} - delta_{i,n} <= kappa delta_max (1 - alpha_{i,m})
  for (Index i = 0; i < N; ++i) {
    for (Index m = 0; m < M; ++m) {
      for (Index n = 0; n < M; ++n) {
        if (n == m) continue;
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(N * block);
        row(delta_col(i, m)) = prm.kappa;
        row(delta_col(i, n)) = -1.0;
        p.add_inequality(row, prm.kappa * prm.delta_max * (1.0 - alpha(i, m)));
      }
    }
  }
  return {std::move(p), L};
}

AllocationDecision solve_fixed_assignment(const MatrixXd& x, const AllocationModel& model,
                                          const std::vector<Index>& assignment, const qp::Settings& settings) {
  const RelaxedQp inner = build_fixed_assignment_qp(x, model, assignment);
  const VariableLayout& L = inner.layout;
  const Index block = L.dim + L.num_tasks;
  const qp::Solution sol = qp::solve_qp(inner.problem, settings);

  AllocationDecision d = empty_decision(L);
  for (Index i = 0; i < L.num_robots; ++i) {
    d.u.row(i) = sol.z.segment(i * block, L.dim).transpose();
    d.delta.row(i) = sol.z.segment(i * block + L.dim, L.num_tasks).transpose();
    d.alpha(i, assignment[i]) = 1.0;
  }
  d.pi_h = pi_hetero(d.alpha, projector_matrix(model.specializations));
  d.objective = sol.objective;
  d.status = sol.status;
  d.iterations = sol.iterations;
  d.residuals = sol.residuals;
  if (sol.status != qp::Status::Optimal) {
    throw AllocationError("fixed-assignment QP for assignment " + format_assignment(assignment) + ": " +
                              qp::to_string(sol.status),
                          sol.status, std::move(d));
  }
  return d;
}

OracleResult miqp_oracle(const MatrixXd& x, const AllocationModel& model, const qp::Settings& settings,
                         const OracleOptions& options) {
  validate_snapshot(x, model);
  const Index N = model.num_robots();
  const Index M = model.num_tasks();

  std::uint64_t count = 1;
  for (Index i = 0; i < N && count <= options.enumeration_cap; ++i) count *= static_cast<std::uint64_t>(M);
  if (count > options.enumeration_cap) {
    throw EnumerationCapExceeded("M^N = " + std::to_string(M) + "^" + std::to_string(N) +
                                 " exceeds the enumeration cap of " + std::to_string(options.enumeration_cap));
  }

  std::vector<Index> assignment(static_cast<std::size_t>(N), 0);
  std::optional<OracleResult> best;
  for (std::uint64_t k = 0; k < count; ++k) {
    AllocationDecision d = solve_fixed_assignment(x, model, assignment, settings);
    const double tie = options.tie_tolerance * std::max(1.0, std::abs(d.objective));
    if (!best || d.objective < best->objective - tie) {
      const double obj = d.objective;
      best = OracleResult{assignment, std::move(d), obj};
    }
    // Odometer increment, last robot fastest: lexicographic order.
    for (Index i = N - 1; i >= 0; --i) {
      if (++assignment[i] < M) break;
      assignment[i] = 0;
    }
  }
  return std::move(*best);
}

}  // namespace mrta
