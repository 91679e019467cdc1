#pragma once

#include "mumanifold/growth.hpp"
#include "mumanifold/linsys.hpp"
#include "mumanifold/manifold.hpp"
#include "mumanifold/perturb.hpp"

namespace mumanifold::testing {

inline constexpr double kA = -1.0;
inline constexpr double kB = 1.0;
inline constexpr double kEps = 0.2;
inline constexpr double kD = 1.0;
inline constexpr double kC = 2.0;

/// mu(t) = t + 1, a = -1, b = 1, eps = 0.2, D = 1, C = 2.
inline ManifoldProblem example_problem(double delta_fraction = 0.5,
                                       ShapeKind shape = ShapeKind::huber_swap,
                                       SolverConfig cfg = {}) {
  const GrowthRate g = make_growth(GrowthKind::polynomial);
  const ClosedFormExample ex = example_system(g, kA, kB, kEps);
  const double delta = delta_fraction * delta_max(kD, kC, kEps, kA, kB).delta_max;
  cfg.C = kC;
  return ManifoldProblem{planar_system(ex), make_perturbation(g, kEps, delta, shape),
                         DichotomySpec{kD, kA, kB, kEps}, cfg};
}

/// Same instance on a coarser grid for fast unit tests.
inline SolverConfig coarse_config() {
  SolverConfig cfg;
  cfg.t_step = 0.1;
  cfg.xi_step = 0.05;
  return cfg;
}

}  // namespace mumanifold::testing
