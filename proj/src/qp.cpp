#include "mrta/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace mrta::qp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Diagonal shift added to the Newton matrix so the factorization never sees
// an exactly singular block when P is only semidefinite.
constexpr double kNewtonShift = 1e-10;
// Regularization of the polish KKT system; removed by iterative refinement.
constexpr double kPolishReg = 1e-9;
constexpr int kPolishRefinement = 8;
constexpr int kPolishRounds = 4;
// Polishing starts once the average complementarity drops below this.
constexpr double kPolishMu = 1e-5;
// Farkas ray thresholds, relative to the multiplier magnitude.
constexpr double kRayResidual = 1e-9;
constexpr double kRayGap = 1e-4;
constexpr double kRayMinNorm = 1e4;
constexpr double kStepFraction = 0.99;
// Iterations without relative merit progress of rel_tol before giving up.
constexpr int kStallWindow = 50;

double max_or_zero(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.maxCoeff(); }

// All one-sided inequalities in the stacked form C z <= d:
// rows of G, then finite upper bounds, then finite lower bounds (-z_j <= -l_j).
struct StackedInequalities {
  MatrixXd C;
  VectorXd d;
  std::vector<Index> upper_var;
  std::vector<Index> lower_var;
  Index num_general = 0;
};

StackedInequalities stack_inequalities(const Problem& p) {
  const Index n = p.num_variables();
  StackedInequalities s;
  s.num_general = p.num_inequalities();
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(p.upper(j))) s.upper_var.push_back(j);
  }
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(p.lower(j))) s.lower_var.push_back(j);
  }
  const Index m = s.num_general + static_cast<Index>(s.upper_var.size() + s.lower_var.size());
  s.C = MatrixXd::Zero(m, n);
  s.d = VectorXd::Zero(m);
  if (s.num_general > 0) {
    s.C.topRows(s.num_general) = p.G;
    s.d.head(s.num_general) = p.h;
  }
  Index row = s.num_general;
  for (Index j : s.upper_var) {
    s.C(row, j) = 1.0;
    s.d(row) = p.upper(j);
    ++row;
  }
  for (Index j : s.lower_var) {
    s.C(row, j) = -1.0;
    s.d(row) = -p.lower(j);
    ++row;
  }
  return s;
}

// Linearly independent subset of the equality rows. `consistent` is false
// when some dropped row contradicts the kept ones.
struct ReducedEqualities {
  MatrixXd A;
  VectorXd b;
  std::vector<Index> kept;
  bool consistent = true;
};

ReducedEqualities reduce_equalities(const Problem& p) {
  ReducedEqualities r;
  const Index me = p.num_equalities();
  const Index n = p.num_variables();
  if (me == 0) {
    r.A.resize(0, n);
    r.b.resize(0);
    return r;
  }
  constexpr double kRankThreshold = 1e-10;

  Eigen::ColPivHouseholderQR<MatrixXd> qr(p.A.transpose());
  qr.setThreshold(kRankThreshold);
  const Index rank = qr.rank();

  MatrixXd augmented(me, n + 1);
  augmented << p.A, p.b;
  Eigen::ColPivHouseholderQR<MatrixXd> qr_aug(augmented.transpose());
  qr_aug.setThreshold(kRankThreshold);
  r.consistent = qr_aug.rank() == rank;

  const auto& perm = qr.colsPermutation().indices();
  r.kept.assign(perm.data(), perm.data() + rank);
  std::sort(r.kept.begin(), r.kept.end());
  r.A.resize(rank, n);
  r.b.resize(rank);
  for (Index k = 0; k < rank; ++k) {
    r.A.row(k) = p.A.row(r.kept[k]);
    r.b(k) = p.b(r.kept[k]);
  }
  return r;
}

class InteriorPointSolver {
 public:
  InteriorPointSolver(const Problem& p, const Settings& settings)
      : p_(p),
        settings_(settings),
        ineq_(stack_inequalities(p)),
        eq_(reduce_equalities(p)),
        n_(p.num_variables()),
        m_(ineq_.C.rows()),
        me_(eq_.A.rows()) {}

  Solution solve() {
    if (!eq_.consistent) return infeasible(0);

    initialize();
    Solution best = assemble(z_, nu_, lambda_, 0);
    double best_merit = merit(best);
    double window_merit = best_merit;
    int window_start = 0;

    for (int iter = 1; iter <= settings_.max_iter; ++iter) {
      if (!newton_step()) break;

      Solution current = assemble(z_, nu_, lambda_, iter);
      if (converged(current)) return finish(std::move(current));

      if (m_ == 0 || mu() < kPolishMu) {
        if (auto polished = polish(iter)) return finish(std::move(*polished));
      }
      if (farkas_ray()) return infeasible(iter);

      const double current_merit = merit(current);
      if (current_merit < best_merit) {
        best_merit = current_merit;
        best = std::move(current);
      }
      if (iter - window_start >= kStallWindow) {
        if (best_merit > window_merit * (1.0 - settings_.rel_tol)) break;
        window_merit = best_merit;
        window_start = iter;
      }
    }
    best.status = Status::MaxIterations;
    return best;
  }

 private:
  double mu() const { return m_ == 0 ? 0.0 : s_.dot(lambda_) / static_cast<double>(m_); }

  void initialize() {
    MatrixXd H = p_.P + ineq_.C.transpose() * ineq_.C;
    H.diagonal().array() += kNewtonShift;
    VectorXd rhs_z = -p_.q + ineq_.C.transpose() * ineq_.d;
    const VectorXd sol = solve_kkt(H, rhs_z, eq_.b);
    z_ = sol.head(n_);
    nu_ = sol.tail(me_);

    const VectorXd r = ineq_.d - ineq_.C * z_;
    s_ = r;
    if (m_ > 0) {
      const double shift_p = -r.minCoeff();
      if (shift_p >= 0.0) s_.array() += 1.0 + shift_p;
      lambda_ = -r;
      const double shift_d = r.maxCoeff();
      if (shift_d >= 0.0) lambda_.array() += 1.0 + shift_d;
    } else {
      lambda_.resize(0);
    }
  }

  VectorXd solve_kkt(const MatrixXd& H, const VectorXd& rhs_z, const VectorXd& rhs_eq) const {
    MatrixXd K = MatrixXd::Zero(n_ + me_, n_ + me_);
    K.topLeftCorner(n_, n_) = H;
    K.topRightCorner(n_, me_) = eq_.A.transpose();
    K.bottomLeftCorner(me_, n_) = eq_.A;
    VectorXd rhs(n_ + me_);
    rhs << rhs_z, rhs_eq;
    return Eigen::PartialPivLU<MatrixXd>(K).solve(rhs);
  }

  // One Mehrotra predictor-corrector step. Returns false on numerical breakdown.
  bool newton_step() {
    const VectorXd r_dual = p_.P * z_ + p_.q + eq_.A.transpose() * nu_ + ineq_.C.transpose() * lambda_;
    const VectorXd r_eq = eq_.A * z_ - eq_.b;
    const VectorXd r_ineq = ineq_.C * z_ + s_ - ineq_.d;

    MatrixXd K = MatrixXd::Zero(n_ + me_, n_ + me_);
    const VectorXd w = (lambda_.array() / s_.array()).matrix();
    K.topLeftCorner(n_, n_) = p_.P + ineq_.C.transpose() * w.asDiagonal() * ineq_.C;
    K.topLeftCorner(n_, n_).diagonal().array() += kNewtonShift;
    K.topRightCorner(n_, me_) = eq_.A.transpose();
    K.bottomLeftCorner(me_, n_) = eq_.A;
    const Eigen::PartialPivLU<MatrixXd> lu(K);

    struct Direction {
      VectorXd dz, dnu, ds, dlambda;
    };
    // r_comp is the target residual of s .* lambda.
    auto direction = [&](const VectorXd& r_comp) {
      VectorXd rhs(n_ + me_);
      const VectorXd t = ((lambda_.array() * r_ineq.array() - r_comp.array()) / s_.array()).matrix();
      rhs << -r_dual - ineq_.C.transpose() * t, -r_eq;
      const VectorXd sol = lu.solve(rhs);
      Direction dir;
      dir.dz = sol.head(n_);
      dir.dnu = sol.tail(me_);
      dir.ds = -r_ineq - ineq_.C * dir.dz;
      dir.dlambda = ((-r_comp.array() - lambda_.array() * dir.ds.array()) / s_.array()).matrix();
      return dir;
    };
    auto max_step = [&](const Direction& dir) {
      double step = 1.0;
      for (Index j = 0; j < m_; ++j) {
        if (dir.ds(j) < 0.0) step = std::min(step, -s_(j) / dir.ds(j));
        if (dir.dlambda(j) < 0.0) step = std::min(step, -lambda_(j) / dir.dlambda(j));
      }
      return step;
    };

    const VectorXd sl = (s_.array() * lambda_.array()).matrix();
    const Direction affine = direction(sl);

    Direction final_dir;
    if (m_ > 0) {
      const double step_aff = max_step(affine);
      const double mu_now = mu();
      const double mu_aff =
          (s_ + step_aff * affine.ds).dot(lambda_ + step_aff * affine.dlambda) / static_cast<double>(m_);
      const double sigma = std::pow(std::clamp(mu_aff / mu_now, 0.0, 1.0), 3);
      const VectorXd r_comp =
          (sl.array() + affine.ds.array() * affine.dlambda.array() - sigma * mu_now).matrix();
      final_dir = direction(r_comp);
    } else {
      final_dir = affine;
    }

    const double step = m_ > 0 ? std::min(1.0, kStepFraction * max_step(final_dir)) : 1.0;
    if (!final_dir.dz.allFinite() || !final_dir.dlambda.allFinite() || !final_dir.dnu.allFinite()) {
      return false;
    }
    z_ += step * final_dir.dz;
    nu_ += step * final_dir.dnu;
    s_ += step * final_dir.ds;
    lambda_ += step * final_dir.dlambda;
    return true;
  }

  // Solves the equality-constrained problem on the guessed active set and
  // repairs the guess a few times (drop negative multipliers, add violated rows).
  std::optional<Solution> polish(int iter) const {
    std::vector<bool> active(m_);
    for (Index j = 0; j < m_; ++j) active[j] = lambda_(j) > s_(j);

    for (int round = 0; round < kPolishRounds; ++round) {
      std::vector<Index> rows;
      for (Index j = 0; j < m_; ++j) {
        if (active[j]) rows.push_back(j);
      }
      const Index ma = static_cast<Index>(rows.size());
      const Index dim = n_ + me_ + ma;
      MatrixXd K = MatrixXd::Zero(dim, dim);
      K.topLeftCorner(n_, n_) = p_.P;
      K.block(0, n_, n_, me_) = eq_.A.transpose();
      K.block(n_, 0, me_, n_) = eq_.A;
      VectorXd rhs(dim);
      rhs.head(n_) = -p_.q;
      rhs.segment(n_, me_) = eq_.b;
      for (Index k = 0; k < ma; ++k) {
        K.block(0, n_ + me_ + k, n_, 1) = ineq_.C.row(rows[k]).transpose();
        K.block(n_ + me_ + k, 0, 1, n_) = ineq_.C.row(rows[k]);
        rhs(n_ + me_ + k) = ineq_.d(rows[k]);
      }
      MatrixXd K_reg = K;
      K_reg.topLeftCorner(n_, n_).diagonal().array() += kPolishReg;
      K_reg.bottomRightCorner(me_ + ma, me_ + ma).diagonal().array() -= kPolishReg;
      const Eigen::PartialPivLU<MatrixXd> lu(K_reg);
      VectorXd x = lu.solve(rhs);
      for (int k = 0; k < kPolishRefinement; ++k) x += lu.solve(rhs - K * x);
      if (!x.allFinite()) return std::nullopt;

      VectorXd lambda = VectorXd::Zero(m_);
      for (Index k = 0; k < ma; ++k) lambda(rows[k]) = x(n_ + me_ + k);
      const VectorXd z = x.head(n_);
      const VectorXd nu = x.segment(n_, me_);

      Solution candidate = assemble(z, nu, lambda, iter);
      if (converged(candidate)) return candidate;

      bool changed = false;
      const VectorXd slack = ineq_.d - ineq_.C * z;
      for (Index j = 0; j < m_; ++j) {
        if (active[j] && lambda(j) < -settings_.abs_tol) {
          active[j] = false;
          changed = true;
        } else if (!active[j] && slack(j) < -settings_.abs_tol) {
          active[j] = true;
          changed = true;
        }
      }
      if (!changed) break;
    }
    return std::nullopt;
  }

  // Large multipliers that nearly annihilate the constraint matrix while
  // giving a negative combination of right-hand sides prove infeasibility.
  bool farkas_ray() const {
    const double norm = std::max(nu_.size() ? nu_.cwiseAbs().maxCoeff() : 0.0,
                                 lambda_.size() ? lambda_.maxCoeff() : 0.0);
    if (norm < kRayMinNorm) return false;
    const VectorXd ray = eq_.A.transpose() * nu_ + ineq_.C.transpose() * lambda_;
    const double gap = eq_.b.dot(nu_) + ineq_.d.dot(lambda_);
    return ray.cwiseAbs().maxCoeff() <= kRayResidual * norm && gap <= -kRayGap * norm;
  }

  Solution assemble(const VectorXd& z, const VectorXd& nu, const VectorXd& lambda, int iter) const {
    Solution sol;
    sol.z = z;
    sol.objective = p_.objective(z);
    sol.iterations = iter;
    sol.dual_eq = VectorXd::Zero(p_.num_equalities());
    for (std::size_t k = 0; k < eq_.kept.size(); ++k) sol.dual_eq(eq_.kept[k]) = nu(static_cast<Index>(k));
    sol.dual_ineq = lambda.head(ineq_.num_general);
    sol.dual_upper = VectorXd::Zero(n_);
    sol.dual_lower = VectorXd::Zero(n_);
    Index row = ineq_.num_general;
    for (Index j : ineq_.upper_var) sol.dual_upper(j) = lambda(row++);
    for (Index j : ineq_.lower_var) sol.dual_lower(j) = lambda(row++);
    sol.residuals = kkt_residuals(p_, sol);
    return sol;
  }

  bool converged(const Solution& sol) const {
    const double tol = settings_.abs_tol;
    const double min_dual = std::min({sol.dual_ineq.size() ? sol.dual_ineq.minCoeff() : 0.0,
                                      sol.dual_upper.size() ? sol.dual_upper.minCoeff() : 0.0,
                                      sol.dual_lower.size() ? sol.dual_lower.minCoeff() : 0.0});
    return sol.residuals.max() <= tol && min_dual >= -tol;
  }

  static double merit(const Solution& sol) {
    const double m = sol.residuals.max();
    return std::isfinite(m) ? m : kInf;
  }

  Solution finish(Solution sol) const {
    sol.status = Status::Optimal;
    return sol;
  }

  Solution infeasible(int iter) const {
    Solution sol;
    sol.z = z_.size() == n_ ? z_ : VectorXd::Zero(n_);
    sol.objective = p_.objective(sol.z);
    sol.dual_ineq = VectorXd::Zero(p_.num_inequalities());
    sol.dual_eq = VectorXd::Zero(p_.num_equalities());
    sol.dual_lower = VectorXd::Zero(n_);
    sol.dual_upper = VectorXd::Zero(n_);
    sol.iterations = iter;
    sol.status = Status::Infeasible;
    sol.residuals = kkt_residuals(p_, sol);
    return sol;
  }

  const Problem& p_;
  const Settings& settings_;
  const StackedInequalities ineq_;
  const ReducedEqualities eq_;
  const Index n_;
  const Index m_;
  const Index me_;

  VectorXd z_, nu_, s_, lambda_;
};

}  // namespace

Problem Problem::Unconstrained(Eigen::Index n) {
  Problem p;
  p.P = MatrixXd::Zero(n, n);
  p.q = VectorXd::Zero(n);
  p.G.resize(0, n);
  p.h.resize(0);
  p.A.resize(0, n);
  p.b.resize(0);
  p.lower = VectorXd::Constant(n, -kInf);
  p.upper = VectorXd::Constant(n, kInf);
  return p;
}

void Problem::add_inequality(const Eigen::RowVectorXd& row, double rhs) {
  if (row.size() != num_variables()) throw std::invalid_argument("inequality row has wrong length");
  G.conservativeResize(G.rows() + 1, num_variables());
  G.row(G.rows() - 1) = row;
  h.conservativeResize(h.size() + 1);
  h(h.size() - 1) = rhs;
}

void Problem::add_equality(const Eigen::RowVectorXd& row, double rhs) {
  if (row.size() != num_variables()) throw std::invalid_argument("equality row has wrong length");
  A.conservativeResize(A.rows() + 1, num_variables());
  A.row(A.rows() - 1) = row;
  b.conservativeResize(b.size() + 1);
  b(b.size() - 1) = rhs;
}

double Problem::objective(const Eigen::VectorXd& z) const { return 0.5 * z.dot(P * z) + q.dot(z) + c0; }

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal:
      return "Optimal";
    case Status::MaxIterations:
      return "MaxIterations";
    case Status::Infeasible:
      return "Infeasible";
  }
  return "Unknown";
}

double Residuals::max() const { return std::max({primal, dual, complementarity}); }

std::vector<std::string> validate_problem(const Problem& p) {
  std::vector<std::string> out;
  const Index n = p.q.size();
  if (p.P.rows() != n || p.P.cols() != n) out.emplace_back("P dimensions do not match q");
  if (p.G.cols() != n && p.G.rows() > 0) out.emplace_back("G column count does not match q");
  if (p.G.rows() != p.h.size()) out.emplace_back("G row count does not match h_ineq");
  if (p.A.cols() != n && p.A.rows() > 0) out.emplace_back("A column count does not match q");
  if (p.A.rows() != p.b.size()) out.emplace_back("A row count does not match b");
  if (p.lower.size() != n) out.emplace_back("lower length does not match q");
  if (p.upper.size() != n) out.emplace_back("upper length does not match q");
  if (!out.empty()) return out;

  if (!p.P.allFinite()) out.emplace_back("P has non-finite entries");
  if (!p.q.allFinite() || !std::isfinite(p.c0)) out.emplace_back("q has non-finite entries");
  if (!p.G.allFinite() || !p.h.allFinite()) out.emplace_back("G/h_ineq has non-finite entries");
  if (!p.A.allFinite() || !p.b.allFinite()) out.emplace_back("A/b has non-finite entries");

  if (n > 0 && p.P.allFinite()) {
    const double scale = std::max(1.0, p.P.cwiseAbs().maxCoeff());
    if ((p.P - p.P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) out.emplace_back("P not symmetric");
  }
  for (Index j = 0; j < n; ++j) {
    if (std::isnan(p.lower(j)) || std::isnan(p.upper(j))) {
      out.emplace_back("bounds NaN at index " + std::to_string(j));
    } else if (p.lower(j) > p.upper(j)) {
      out.emplace_back("bounds crossed at index " + std::to_string(j));
    }
  }
  return out;
}

Residuals kkt_residuals(const Problem& p, const Solution& sol) {
  const Index n = p.num_variables();
  if (sol.z.size() != n) throw std::invalid_argument("kkt_residuals: z has wrong length");
  auto multiplier = [](const VectorXd& v, Index k) { return v.size() == 0 ? 0.0 : v(k); };
  const VectorXd& z = sol.z;

  Residuals r;
  VectorXd grad = p.P * z + p.q;

  if (p.num_inequalities() > 0) {
    const VectorXd gap = p.G * z - p.h;
    r.primal = std::max(r.primal, max_or_zero(gap));
    for (Index j = 0; j < gap.size(); ++j) {
      const double l = multiplier(sol.dual_ineq, j);
      r.complementarity = std::max(r.complementarity, std::abs(l * gap(j)));
    }
    if (sol.dual_ineq.size() > 0) grad += p.G.transpose() * sol.dual_ineq;
  }
  if (p.num_equalities() > 0) {
    r.primal = std::max(r.primal, (p.A * z - p.b).cwiseAbs().maxCoeff());
    if (sol.dual_eq.size() > 0) grad += p.A.transpose() * sol.dual_eq;
  }
  for (Index j = 0; j < n; ++j) {
    const double mu_l = multiplier(sol.dual_lower, j);
    const double mu_u = multiplier(sol.dual_upper, j);
    grad(j) += mu_u - mu_l;
    if (std::isfinite(p.lower(j))) {
      r.primal = std::max(r.primal, p.lower(j) - z(j));
      r.complementarity = std::max(r.complementarity, std::abs(mu_l * (z(j) - p.lower(j))));
    } else if (mu_l != 0.0) {
      r.complementarity = kInf;
    }
    if (std::isfinite(p.upper(j))) {
      r.primal = std::max(r.primal, z(j) - p.upper(j));
      r.complementarity = std::max(r.complementarity, std::abs(mu_u * (p.upper(j) - z(j))));
    } else if (mu_u != 0.0) {
      r.complementarity = kInf;
    }
  }
  r.dual = n == 0 ? 0.0 : grad.cwiseAbs().maxCoeff();
  return r;
}

Solution solve_qp(const Problem& p, const Settings& settings) {
  if (settings.abs_tol <= 0.0 || settings.rel_tol <= 0.0 || settings.max_iter < 1) {
    throw std::invalid_argument("solve_qp: invalid settings");
  }
  auto violations = validate_problem(p);
  bool crossed_only = !violations.empty();
  for (const auto& v : violations) {
    if (v.rfind("bounds crossed", 0) != 0) crossed_only = false;
  }
  if (crossed_only) {
    Solution sol;
    const Index n = p.num_variables();
    sol.z = VectorXd::Zero(n);
    sol.objective = p.objective(sol.z);
    sol.dual_ineq = VectorXd::Zero(p.num_inequalities());
    sol.dual_eq = VectorXd::Zero(p.num_equalities());
    sol.dual_lower = VectorXd::Zero(n);
    sol.dual_upper = VectorXd::Zero(n);
    sol.status = Status::Infeasible;
    sol.residuals = kkt_residuals(p, sol);
    return sol;
  }
  if (!violations.empty()) throw std::invalid_argument("solve_qp: " + violations.front());
  return InteriorPointSolver(p, settings).solve();
}

}  // namespace mrta::qp
