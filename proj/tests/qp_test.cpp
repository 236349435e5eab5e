#include "mrta/qp.hpp"

#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "qp_oracle.hpp"
#include "random_qp.hpp"

namespace mrta::qp {
namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

void ExpectOptimal(const Problem& p, const Solution& sol, double tol = 1e-8) {
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_LE(sol.residuals.primal, tol);
  EXPECT_LE(sol.residuals.dual, tol);
  EXPECT_LE(sol.residuals.complementarity, tol);
  if (sol.dual_ineq.size() > 0) EXPECT_GE(sol.dual_ineq.minCoeff(), -tol);
  EXPECT_GE(sol.dual_lower.minCoeff(), -tol);
  EXPECT_GE(sol.dual_upper.minCoeff(), -tol);
  const Residuals again = kkt_residuals(p, sol);
  EXPECT_DOUBLE_EQ(again.max(), sol.residuals.max());
}

// min ||u||^2 + delta^2  s.t.  a'u + delta >= b, written as -a'u - delta <= -b.
Problem HalfspaceProblem(const Vector2d& a, double b) {
  Problem p = Problem::Unconstrained(3);
  p.P = 2.0 * MatrixXd::Identity(3, 3);
  RowVectorXd row(3);
  row << -a(0), -a(1), -1.0;
  p.add_inequality(row, -b);
  return p;
}

TEST(ValidateProblemTest, WellFormedIsClean) {
  Problem p = Problem::Unconstrained(2);
  p.P = MatrixXd::Identity(2, 2);
  EXPECT_TRUE(validate_problem(p).empty());
}

TEST(ValidateProblemTest, AsymmetricP) {
  Problem p = Problem::Unconstrained(2);
  p.P << 1.0, 1e-3, 0.0, 1.0;
  const auto v = validate_problem(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "P not symmetric");
}

TEST(ValidateProblemTest, CrossedBounds) {
  Problem p = Problem::Unconstrained(1);
  p.lower(0) = 1.0;
  p.upper(0) = 0.0;
  const auto v = validate_problem(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "bounds crossed at index 0");
}

TEST(ValidateProblemTest, DimensionMismatchNamesField) {
  Problem p = Problem::Unconstrained(2);
  p.h.resize(1);
  const auto v = validate_problem(p);
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v[0].find("h_ineq"), std::string::npos);
  EXPECT_THROW(solve_qp(p), std::invalid_argument);
}

TEST(SolveQpTest, NearestPointInHalfspace) {
  Problem p = Problem::Unconstrained(2);
  p.P = 2.0 * MatrixXd::Identity(2, 2);
  p.add_inequality(RowVectorXd::Unit(2, 0) * -1.0, -3.0);
  const Solution sol = solve_qp(p);
  ExpectOptimal(p, sol);
  EXPECT_NEAR(sol.z(0), 3.0, 1e-9);
  EXPECT_NEAR(sol.z(1), 0.0, 1e-9);
  EXPECT_NEAR(sol.objective, 9.0, 1e-8);
}

TEST(SolveQpTest, SlackedHalfspaceMatchesClosedForm) {
  const Vector2d a(-2.0, 0.0);
  const double b = 1.0;
  const Problem p = HalfspaceProblem(a, b);
  const Solution sol = solve_qp(p);
  ExpectOptimal(p, sol);

  // Projection of the origin onto {(u, d) : a'u + d >= b}.
  const Vector3d expected = b * Vector3d(a(0), a(1), 1.0) / (a.squaredNorm() + 1.0);
  EXPECT_LE((sol.z - expected).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(expected(0), -0.4, 1e-15);
  EXPECT_NEAR(expected(2), 0.2, 1e-15);
  EXPECT_NEAR(sol.objective, b * b / (a.squaredNorm() + 1.0), 1e-9);
}

TEST(SolveQpTest, EqualityBySymmetry) {
  Problem p = Problem::Unconstrained(2);
  p.P = 2.0 * MatrixXd::Identity(2, 2);
  p.add_equality(RowVectorXd::Ones(2), 1.0);
  const Solution sol = solve_qp(p);
  ExpectOptimal(p, sol);
  EXPECT_NEAR(sol.z(0), 0.5, 1e-10);
  EXPECT_NEAR(sol.z(1), 0.5, 1e-10);
}

TEST(SolveQpTest, CrossedBoundsAreInfeasible) {
  Problem p = Problem::Unconstrained(1);
  p.P(0, 0) = 1.0;
  p.upper(0) = -1.0;
  p.lower(0) = 1.0;
  EXPECT_EQ(solve_qp(p).status, Status::Infeasible);
}

TEST(SolveQpTest, ContradictoryInequalitiesAreInfeasible) {
  Problem p = Problem::Unconstrained(2);
  p.P = MatrixXd::Identity(2, 2);
  p.add_inequality(RowVectorXd::Unit(2, 0), -1.0);
  p.add_inequality(-RowVectorXd::Unit(2, 0), -1.0);
  EXPECT_EQ(solve_qp(p).status, Status::Infeasible);
}

TEST(SolveQpTest, InconsistentEqualitiesAreInfeasible) {
  Problem p = Problem::Unconstrained(2);
  p.P = MatrixXd::Identity(2, 2);
  p.add_equality(RowVectorXd::Ones(2), 1.0);
  p.add_equality(2.0 * RowVectorXd::Ones(2), 3.0);
  const Solution sol = solve_qp(p);
  EXPECT_EQ(sol.status, Status::Infeasible);
  EXPECT_EQ(sol.iterations, 0);
}

TEST(SolveQpTest, RedundantEqualitiesAreTolerated) {
  Problem p = Problem::Unconstrained(2);
  p.P = 2.0 * MatrixXd::Identity(2, 2);
  p.add_equality(RowVectorXd::Ones(2), 1.0);
  p.add_equality(2.0 * RowVectorXd::Ones(2), 2.0);
  const Solution sol = solve_qp(p);
  ExpectOptimal(p, sol);
  EXPECT_NEAR(sol.z(0), 0.5, 1e-10);
}

TEST(SolveQpTest, SemidefiniteObjectiveWithBounds) {
  // Linear objective over a box: optimum at a vertex.
  Problem p = Problem::Unconstrained(2);
  p.q << 1.0, -1.0;
  p.lower << 0.0, 0.0;
  p.upper << 2.0, 3.0;
  const Solution sol = solve_qp(p);
  ExpectOptimal(p, sol);
  EXPECT_NEAR(sol.z(0), 0.0, 1e-8);
  EXPECT_NEAR(sol.z(1), 3.0, 1e-8);
  EXPECT_NEAR(sol.objective, -3.0, 1e-8);
}

TEST(SolveQpTest, ObjectiveIncludesOffset) {
  Problem p = Problem::Unconstrained(1);
  p.P(0, 0) = 2.0;
  p.q(0) = -2.0;
  p.c0 = 5.0;
  const Solution sol = solve_qp(p);
  ExpectOptimal(p, sol);
  EXPECT_NEAR(sol.objective, 4.0, 1e-12);
}

TEST(SolveQpTest, IterationLimitReported) {
  std::mt19937_64 rng(7);
  Problem p = testing::random_strictly_convex_qp(rng, 8, 6, 0);
  while (p.num_inequalities() < 3) p = testing::random_strictly_convex_qp(rng, 8, 6, 0);
  Settings s;
  s.max_iter = 1;
  const Solution sol = solve_qp(p, s);
  EXPECT_NE(sol.status, Status::Optimal);
  EXPECT_LE(sol.iterations, 1);
}

TEST(SolveQpTest, RejectsInvalidSettings) {
  Problem p = Problem::Unconstrained(1);
  Settings s;
  s.abs_tol = 0.0;
  EXPECT_THROW(solve_qp(p, s), std::invalid_argument);
}

TEST(KktResidualsTest, ClosedFormOptimumIsExact) {
  const Vector2d a(-2.0, 0.0);
  const Problem p = HalfspaceProblem(a, 1.0);
  Solution sol;
  sol.z = Vector3d(a(0), a(1), 1.0) / (a.squaredNorm() + 1.0);
  // Stationarity 2z + l * (-a, -1) = 0 gives l = 2 z_delta.
  sol.dual_ineq = VectorXd::Constant(1, 2.0 * sol.z(2));
  const Residuals r = kkt_residuals(p, sol);
  EXPECT_LE(r.primal, 1e-12);
  EXPECT_LE(r.dual, 1e-12);
  EXPECT_LE(r.complementarity, 1e-12);
}

TEST(KktResidualsTest, PrimalViolationAtOrigin) {
  Problem p = Problem::Unconstrained(2);
  p.P = 2.0 * MatrixXd::Identity(2, 2);
  p.add_inequality(RowVectorXd::Unit(2, 0) * -1.0, -3.0);
  Solution sol;
  sol.z = VectorXd::Zero(2);
  EXPECT_DOUBLE_EQ(kkt_residuals(p, sol).primal, 3.0);
}

TEST(KktResidualsTest, UnconstrainedStationaryPoint) {
  Problem p = Problem::Unconstrained(2);
  p.P = 2.0 * MatrixXd::Identity(2, 2);
  p.q << -2.0, 0.0;
  Solution sol;
  sol.z = Vector2d(1.0, 0.0);
  const Residuals r = kkt_residuals(p, sol);
  EXPECT_DOUBLE_EQ(r.dual, 0.0);
  EXPECT_DOUBLE_EQ(r.primal, 0.0);
}

TEST(SolveQpPropertyTest, MatchesActiveSetEnumeration) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 200; ++trial) {
    const Problem p = testing::random_strictly_convex_qp(rng);
    const auto oracle = testing::enumerate_active_sets(p);
    ASSERT_TRUE(oracle.has_value()) << "trial " << trial;
    const Solution sol = solve_qp(p);
    ExpectOptimal(p, sol);
    EXPECT_NEAR(sol.objective, oracle->objective, 1e-6) << "trial " << trial;
  }
}

TEST(SolveQpPropertyTest, ObjectiveScaling) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    Problem p = testing::random_strictly_convex_qp(rng);
    const Solution base = solve_qp(p);
    ASSERT_EQ(base.status, Status::Optimal);
    for (double scale : {0.01, 3.0, 250.0}) {
      Problem scaled = p;
      scaled.P *= scale;
      scaled.q *= scale;
      scaled.c0 *= scale;
      const Solution sol = solve_qp(scaled);
      ASSERT_EQ(sol.status, Status::Optimal);
      EXPECT_NEAR(sol.objective, scale * base.objective, 1e-7 * std::max(1.0, std::abs(scale * base.objective)));
      EXPECT_LE((sol.z - base.z).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(SolveQpPropertyTest, BitIdenticalReruns) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Problem p = testing::random_strictly_convex_qp(rng);
    const Solution a = solve_qp(p);
    const Solution b = solve_qp(p);
    ASSERT_EQ(a.z.size(), b.z.size());
    EXPECT_EQ(std::memcmp(a.z.data(), b.z.data(), sizeof(double) * a.z.size()), 0);
    EXPECT_EQ(std::memcmp(&a.objective, &b.objective, sizeof(double)), 0);
    EXPECT_EQ(a.iterations, b.iterations);
  }
}

}  // namespace
}  // namespace mrta::qp
