#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mumanifold/grid.hpp"
#include "mumanifold/linsys.hpp"
#include "mumanifold/perturb.hpp"
#include "mumanifold/quadrature.hpp"

namespace mumanifold {

struct SolverConfig {
  double s0 = 0.0;
  double t_max = 40.0;
  double t_step = 0.05;
  double xi_range = 0.5;
  double xi_step = 0.025;
  /// Class constant of the trajectory space; 0 selects 2 D.
  double C = 0.0;
  double tol_inner = 1e-12;
  double tol_outer = 1e-8;
  int max_iter_inner = 100;
  int max_iter_outer = 60;
  Quadrature quadrature = Quadrature::trapezoid;
  /// Allowance on contraction and bound ratios for discretisation error.
  double grid_slack = 0.05;
  /// Largest admissible truncation tail bound at (s0, xi_range).
  double tail_tolerance = 1e-5;
  /// Re-evaluate the outer operator with the other quadrature rule at the
  /// fixed point and record the difference.
  bool estimate_quadrature = true;
  unsigned threads = 0;

  double class_constant(const DichotomySpec& spec) const { return C > 0.0 ? C : 2.0 * spec.D; }
  TimeGrid time_grid() const { return TimeGrid::spanning(s0, t_max, t_step); }
  XiGrid xi_grid() const { return XiGrid::covering(xi_range, xi_step); }

  /// Throws PreconditionError on an unusable grid, tolerance or class constant.
  void validate(const DichotomySpec& spec) const;
};

/// Everything the Lyapunov-Perron construction needs.
struct ManifoldProblem {
  DiagonalPlanarSystem system;
  Perturbation f;
  DichotomySpec spec;
  SolverConfig cfg;

  double C() const { return cfg.class_constant(spec); }
  const GrowthRate& growth() const { return f.growth(); }
};

/// Stable components x(t, xi) for t on the suffix grid starting at `base`,
/// one column per xi node.
struct TrajectoryFamily {
  std::size_t base_index = 0;
  TimeGrid times;
  XiGrid xi;
  Eigen::MatrixXd values;

  double base() const { return times.start; }
};

/// Unstable components phi(s, xi), one row per s node and one column per xi
/// node. Off-grid xi queries interpolate linearly and clamp outside the range.
struct GraphFunction {
  TimeGrid s_grid;
  XiGrid xi;
  Eigen::MatrixXd values;

  static GraphFunction zero(const TimeGrid& s_grid, const XiGrid& xi);

  /// phi(s_row, x), linear in x.
  double interpolate(std::size_t row, double x) const;
  /// phi(s, x), linear in both s and x.
  double evaluate(double s, double x) const;
  bool in_range(double x) const { return x >= -xi.radius() && x <= xi.radius(); }
};

/// sup over t and xi != 0 of mu(s)^a / (mu(s)^eps mu(t)^a) |x(t, xi)| / |xi|.
double weighted_norm_B(const TrajectoryFamily& x, const GrowthRate& g, double a, double eps);

/// sup over s and xi != 0 of |phi(s, xi)| / |xi|.
double weighted_norm_X(const GraphFunction& phi);

struct TrajectoryClassReport {
  bool pass = true;
  bool base_slice_exact = true;  // x(s, xi) = xi
  bool zero_column_exact = true; // x(t, 0) = 0
  double lipschitz_ratio = 0.0;  // max grid quotient / (C (mu(t)/mu(s))^a mu(s)^eps)
  double bound_ratio = 0.0;      // max |x| / (C (mu(t)/mu(s))^a mu(s)^eps |xi|)
};

TrajectoryClassReport check_trajectory_class(const TrajectoryFamily& x, const GrowthRate& g,
                                             const DichotomySpec& spec, double C);

struct GraphClassReport {
  bool pass = true;
  bool zero_column_exact = true;  // phi(s, 0) = 0
  double lipschitz = 0.0;         // max adjacent-node quotient
  double bound_ratio = 0.0;       // max |phi| / |xi|
  double flatness_constant = 0.0; // max |phi| / |xi|^2 for |xi| <= 4 h_xi
};

/// Passes iff phi(s, 0) = 0, grid Lipschitz <= 1 + 1e-6, |phi| <= |xi|(1 + 1e-12)
/// and the flatness constant is finite.
GraphClassReport check_graph_class(const GraphFunction& phi);

struct InnerDiagnostics {
  int iterations = 0;
  std::vector<double> ratios;
  double final_difference = 0.0;
};

struct OuterDiagnostics {
  bool converged = false;
  int iterations = 0;
  std::vector<double> differences;
  std::vector<double> ratios;
  std::vector<double> max_inner_ratio;
  std::vector<int> max_inner_iterations;
  double inner_ratio_bound = 0.0;  // D delta / eps
  double outer_ratio_bound = 0.0;  // 3 C D delta / |a - b - 2 eps|
  double tail_bound = 0.0;
  double quadrature_estimate = 0.0;
  double residual = 0.0;  // ||phi_k+1 - phi_k||' at exit
};

struct ManifoldSolution {
  GraphFunction phi;
  OuterDiagnostics diagnostics;
};

/// Ratio-against-threshold verdict shared by the bound checks.
struct BoundReport {
  bool pass = true;
  bool skipped = false;
  double max_ratio = 0.0;
  double threshold = 0.0;
  std::size_t evaluated = 0;
  double worst_t = 0.0;
  double worst_s = 0.0;
  double worst_xi = 0.0;
  double worst_xi_bar = 0.0;
  std::string note;
};

/// Discretised two-level Lyapunov-Perron scheme on the grids of a
/// SolverConfig. The inner operator
///   (J x)(t, xi) = U(t, s) xi + int_s^t U(t, r) P f(r, x, phi(r, x)) dr
/// is evaluated with the cocycle U(t, r) = U(t, s) / U(r, s) as a running
/// integral; the outer operator
///   (Phi phi)(s, xi) = -int_s^T V(r, s)^{-1} Q f(r, x_phi, phi(r, x_phi)) dr
/// truncates at T = t_max. Every s node of the grid is a base time.
class LyapunovPerronSolver {
 public:
  /// Validates the grid configuration. Does not check delta; see solve().
  explicit LyapunovPerronSolver(ManifoldProblem problem);

  const ManifoldProblem& problem() const noexcept { return problem_; }
  const TimeGrid& time_grid() const noexcept { return grid_; }
  const XiGrid& xi_grid() const noexcept { return xi_; }
  double C() const noexcept { return C_; }

  /// x_0(t, xi) = U(t, s) xi at base node `base`.
  TrajectoryFamily initial_trajectory(std::size_t base) const;

  /// One application of J. Throws NonFiniteError on a non-finite integrand.
  TrajectoryFamily inner_operator(const TrajectoryFamily& x, const GraphFunction& phi) const;

  /// Iterates J from x_0 until ||x_k+1 - x_k||' <= tol_inner. Throws
  /// ConvergenceError when max_iter_inner is exceeded.
  std::pair<TrajectoryFamily, InnerDiagnostics> solve_x(const GraphFunction& phi,
                                                        std::size_t base) const;

  /// One application of Phi (an inner solve at every base node). Throws
  /// ConfigError when the truncation tail bound exceeds cfg.tail_tolerance.
  GraphFunction outer_operator(const GraphFunction& phi,
                               std::vector<InnerDiagnostics>* inner = nullptr) const;

  /// Iterates Phi from `initial` (zero when null) until
  /// ||phi_k+1 - phi_k||' <= tol_outer. Checks delta < delta_max, eps > 0 and
  /// a + eps < b first (PreconditionError).
  ManifoldSolution solve(const GraphFunction* initial = nullptr) const;

  /// 2 C D delta / |a - b - 2 eps| (mu(T)/mu(s))^(a - b - 2 eps) mu(s)^-eps |xi|.
  double tail_bound(double s, double xi_norm) const;

  /// Compares x_phi and x_psi against C (mu(t)/mu(s))^a mu(s)^-eps |xi| ||phi - psi||'
  /// at every `base_stride`-th base node. Requires delta < 2 eps / (3 D).
  BoundReport pair_distance_bound_check(const GraphFunction& phi, const GraphFunction& psi,
                                        std::size_t base_stride = 1) const;

  /// Weighted B-norm of a difference of two families on the same grid.
  double weighted_difference_B(const TrajectoryFamily& x, const TrajectoryFamily& y) const;

 private:
  void check_preconditions() const;
  void check_tail() const;
  double outer_value(const TrajectoryFamily& x, const GraphFunction& phi, std::size_t column,
                     std::vector<double>& scratch, std::vector<double>& integrand) const;

  ManifoldProblem problem_;
  TimeGrid grid_;
  XiGrid xi_;
  double C_;
  std::vector<double> log_mu_;
  std::vector<double> log_U_;
  std::vector<double> log_V_;
  std::vector<double> envelope_;
};

/// Convenience wrapper: LyapunovPerronSolver(problem).solve().
ManifoldSolution solve_manifold(const ManifoldProblem& problem);

}  // namespace mumanifold
