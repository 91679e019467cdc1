#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mumanifold/manifold.hpp"
#include "mumanifold/ode.hpp"

namespace mumanifold {

/// A forward solution of v' = A(t) v + f(t, v) sampled on a time grid.
struct SemiflowSample {
  double s = 0.0;
  PlanarState start = PlanarState::Zero();
  std::vector<double> times;
  std::vector<PlanarState> states;
  bool escaped = false;
  double escape_time = 0.0;
  PlanarState escape_state = PlanarState::Zero();
};

/// Adaptive RK4 on the perturbed system; t_grid must start at s. Escape is
/// reported in the sample rather than thrown.
SemiflowSample integrate_nonlinear(const DiagonalPlanarSystem& sys, const Perturbation& f,
                                   double s, const PlanarState& v_s,
                                   std::span<const double> t_grid, const OdeOptions& opts = {});

/// Itemised allowance for the invariance residual. Errors in the start value
/// phi(s0, xi) are carried forward by the unstable flow, so the start terms
/// are scaled by max V(t, s0) over the horizon.
struct ResidualBudget {
  double tolerance_term = 0.0;     // 10 tol_outer
  double quadrature_term = 0.0;    // recorded quadrature-rule discrepancy
  double interpolation_term = 0.0; // h_xi^2 / 8 |phi''| on the queried rows
  double start_tail_term = 0.0;    // truncation tail bound at (s0, max |xi|)
  double amplification = 1.0;      // max V(t, s0) over the horizon
  double tail_term = 0.0;          // largest truncation tail bound along the samples
  double start_terms() const {
    return tolerance_term + quadrature_term + interpolation_term + start_tail_term;
  }
  double total() const { return amplification * start_terms() + tail_term; }
};

struct ResidualSample {
  double xi = 0.0;
  double max_residual = 0.0;
  double t_at_max = 0.0;
  double final_residual = 0.0;
  bool out_of_range = false;
  bool escaped = false;
};

struct ResidualReport {
  bool pass = false;
  double horizon = 0.0;
  double offset = 0.0;
  double max_residual = 0.0;
  ResidualBudget budget;
  std::vector<ResidualSample> samples;
  std::size_t excluded = 0;
  std::string warning;
  std::string note;
};

struct InvarianceOptions {
  double horizon = 0.0;  // 0 selects (t_max - s0) / 2
  /// Added to the unstable start coordinate; nonzero gives an off-manifold control.
  double offset = 0.0;
  double quadrature_estimate = 0.0;
  OdeOptions ode;
};

/// Integrates from (xi, phi(s0, xi) + offset) for every grid xi and measures
/// |y(t) - phi(t, x(t))| on solver grid nodes in [s0, s0 + horizon].
ResidualReport invariance_residual(const GraphFunction& phi, const ManifoldProblem& problem,
                                   const InvarianceOptions& opts = {});

struct NegativeControlReport {
  bool pass = false;
  double min_ratio = 0.0;  // min over xi != 0 of off-manifold / on-manifold final residual
  ResidualReport on_manifold;
  ResidualReport off_manifold;
};

/// On-manifold residuals must be at most 1/10 of the off-manifold ones at t = s0 + horizon.
NegativeControlReport negative_control(const GraphFunction& phi, const ManifoldProblem& problem,
                                       double offset, const InvarianceOptions& opts = {});

/// Index pairs (k, l), k != l, into the xi grid, deterministic for a seed.
std::vector<std::pair<std::size_t, std::size_t>> sample_xi_pairs(const XiGrid& xi,
                                                                 std::size_t count,
                                                                 std::uint64_t seed = 20240);

struct DecayOptions {
  double horizon = 20.0;
  /// Constant K; 0 selects 2 C.
  double constant = 0.0;
  OdeOptions ode;
};

/// max over pairs and t of ||Psi(p_xi) - Psi(p_xibar)|| / ((mu(t)/mu(s))^a mu(s)^eps |xi - xibar|).
BoundReport decay_check(const GraphFunction& phi, const ManifoldProblem& problem,
                        std::span<const std::pair<std::size_t, std::size_t>> pairs,
                        const DecayOptions& opts = {});

/// Difference-quotient form of the derivative decay estimate with constant
/// 2 C + C^2 (when opts.constant is 0) and mu(s)^(2 eps).
BoundReport derivative_decay_check(const GraphFunction& phi, const ManifoldProblem& problem,
                                   std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                   const DecayOptions& opts = {});

struct TangencyReport {
  bool pass = false;
  bool flat = false;  // every small-xi value below 1e-14
  double slope = 0.0; // least-squares slope of log|phi| against log|xi| on the first row
  double min_slope = 0.0;
  std::size_t min_slope_row = 0;
  std::size_t points = 0;
  std::size_t flat_rows = 0;
};

/// Fits the small-xi exponent (|xi| <= 4 h_xi) on every s row; passes iff each
/// non-flat row has slope >= 1.5.
TangencyReport tangency_check(const GraphFunction& phi);

struct ShootingSearch {
  double eta_lo = -1.0;
  double eta_hi = 1.0;
  double tolerance = 1e-10;
  /// 0 selects the problem's t_max.
  double t_escape = 0.0;
  int max_bisections = 200;
  OdeOptions ode;
};

struct ShootingResult {
  double eta = 0.0;
  double bracket_width = 0.0;
  int bisections = 0;
  double t_escape = 0.0;
  bool contract_ok = false;
  double envelope_ratio = 0.0;
};

/// Bisects the unstable start coordinate so the forward solution stays bounded:
/// the sign of y(t_esc) (mu(t_esc)/mu(s))^-b classifies each trial. Throws
/// PreconditionError when the bracket has no sign change.
ShootingResult shooting_oracle(const ManifoldProblem& problem, double s, double xi,
                               const ShootingSearch& search = {});

}  // namespace mumanifold
