#pragma once

#include <limits>
#include <random>

#include <Eigen/Dense>

#include "mrta/qp.hpp"

namespace mrta::testing {

// Strictly convex, feasible random QP: constraints are built around a random
// interior point so the feasible set is never empty.
inline qp::Problem random_strictly_convex_qp(std::mt19937_64& rng, int max_n = 8, int max_ineq = 6,
                                             int max_eq = 2) {
  std::uniform_int_distribution<int> n_dist(1, max_n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n = n_dist(rng);
  const int mi = std::uniform_int_distribution<int>(0, max_ineq)(rng);
  const int me = std::uniform_int_distribution<int>(0, std::min(max_eq, n - 1))(rng);

  auto gaussian = [&](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
    return m;
  };

  qp::Problem p = qp::Problem::Unconstrained(n);
  const Eigen::MatrixXd L = gaussian(n, n);
  p.P = L.transpose() * L + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.q = 3.0 * gaussian(n, 1);
  p.c0 = normal(rng);

  const Eigen::VectorXd interior = gaussian(n, 1);
  for (int j = 0; j < mi; ++j) {
    const Eigen::RowVectorXd row = gaussian(1, n);
    p.add_inequality(row, row.dot(interior) + 0.5 * unit(rng));
  }
  for (int j = 0; j < me; ++j) {
    const Eigen::RowVectorXd row = gaussian(1, n);
    p.add_equality(row, row.dot(interior));
  }
  // At most four finite bounds keep the oracle's enumeration small.
  int bounds = 0;
  for (int j = 0; j < n && bounds < 4; ++j) {
    if (unit(rng) < 0.3) {
      p.lower(j) = interior(j) - unit(rng);
      ++bounds;
    }
    if (unit(rng) < 0.3) {
      p.upper(j) = interior(j) + unit(rng);
      ++bounds;
    }
  }
  return p;
}

}  // namespace mrta::testing
