#pragma once

#include <random>

#include <Eigen/Dense>

#include "mrta/allocation.hpp"
#include "mrta/sim.hpp"

namespace mrta::testing {

struct Snapshot {
  Eigen::MatrixXd x;
  AllocationModel model;
};

// Random team with N <= max_robots, M <= max_tasks in the plane: positions
// and targets uniform in [-2, 2]^2, binary diagonal specializations whose
// capability set covers every task, pi* on the simplex.
inline Snapshot random_snapshot(std::mt19937_64& rng, int max_robots = 4, int max_tasks = 3) {
  std::uniform_int_distribution<int> robots(1, max_robots);
  std::uniform_int_distribution<int> tasks(1, max_tasks);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  Snapshot s;
  const int N = robots(rng);
  const int M = tasks(rng);
  s.x.resize(N, 2);
  for (int i = 0; i < N; ++i) s.x.row(i) << coord(rng), coord(rng);
  for (int m = 0; m < M; ++m) s.model.tasks.push_back(TaskSpec::GoToPoint(Eigen::Vector2d(coord(rng), coord(rng))));

  do {
    s.model.specializations.assign(N, Specialization{});
    for (int i = 0; i < N; ++i) {
      Eigen::VectorXd e(M);
      for (int m = 0; m < M; ++m) e(m) = coin(rng) ? 1.0 : 0.0;
      s.model.specializations[i].entries = e;
    }
  } while (!capability_set(projector_matrix(s.model.specializations), M).full_rank);

  Eigen::VectorXd pi(M);
  for (int m = 0; m < M; ++m) pi(m) = unit(rng) + 1e-3;
  s.model.global.pi_star = pi / pi.sum();
  return s;
}

inline sim::Scenario to_scenario(const Snapshot& snap, double duration, double dt = 0.02) {
  sim::Scenario s;
  s.dimension = snap.x.cols();
  for (Eigen::Index i = 0; i < snap.x.rows(); ++i) {
    s.robots.push_back({snap.x.row(i).transpose(), snap.model.specializations[static_cast<std::size_t>(i)]});
  }
  s.tasks = snap.model.tasks;
  s.global = snap.model.global;
  s.params = snap.model.params;
  s.gamma = snap.model.gamma;
  s.dt = dt;
  s.duration = duration;
  return s;
}

}  // namespace mrta::testing
