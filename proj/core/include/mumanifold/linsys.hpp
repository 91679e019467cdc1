#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mumanifold/growth.hpp"
#include "mumanifold/ode.hpp"

namespace mumanifold {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Operator norm induced by the sum norm ||(x, y)|| = ||x|| + ||y||, i.e. the
/// maximum absolute column sum.
double operator_norm(const Matrix& m);

/// Constants of a nonuniform mu-dichotomy: stable bound
/// D (mu(t)/mu(s))^a mu(s)^eps and unstable inverse bound
/// D (mu(t)/mu(s))^-b mu(t)^eps.
struct DichotomySpec {
  double D = 1.0;
  double a = -1.0;
  double b = 1.0;
  double eps = 0.0;

  /// Throws PreconditionError unless D >= 1, a < 0 <= b, eps >= 0.
  void validate() const;
  /// a + eps < b, required by the stable manifold construction.
  bool has_spectral_gap() const { return a + eps < b; }
};

/// Projections P(t) onto E(t); Q(t) = Id - P(t).
class Splitting {
 public:
  using ProjectorFn = std::function<Matrix(double)>;

  Splitting(std::size_t dim, ProjectorFn projector);

  /// Time-independent projection onto the first `stable_dim` coordinates.
  static Splitting coordinate(std::size_t dim, std::size_t stable_dim);

  std::size_t dim() const noexcept { return dim_; }
  Matrix P(double t) const { return projector_(t); }
  Matrix Q(double t) const;

  /// ||P^2 - P|| + ||P + Q - Id|| at t.
  double projection_residual(double t) const;

 private:
  std::size_t dim_;
  ProjectorFn projector_;
};

/// v' = A(t) v in R^n with a given splitting.
class GeneralLinearSystem {
 public:
  using CoefficientFn = std::function<Matrix(double)>;

  GeneralLinearSystem(std::size_t dim, CoefficientFn coefficient, Splitting splitting);

  std::size_t dim() const noexcept { return dim_; }
  Matrix coefficient(double t) const { return coefficient_(t); }
  const Splitting& splitting() const noexcept { return splitting_; }

 private:
  std::size_t dim_;
  CoefficientFn coefficient_;
  Splitting splitting_;
};

/// T(t, s) v by adaptive RK4 (local error 1e-10 per unit time by default).
/// Throws PreconditionError unless 0 <= s <= t; IntegrationError on failure.
Vector propagate(const GeneralLinearSystem& sys, double s, double t, const Vector& v,
                 const OdeOptions& opts = {});

/// T(t, s) assembled column by column.
Matrix evolution_operator(const GeneralLinearSystem& sys, double s, double t,
                          const OdeOptions& opts = {});

/// T(t, s)^{-1} w obtained by integrating backward from t to s.
Vector propagate_backward(const GeneralLinearSystem& sys, double t, double s, const Vector& w,
                          const OdeOptions& opts = {});

/// ||P(t) T(t,s) - T(t,s) P(s)||.
double commutation_residual(const GeneralLinearSystem& sys, double t, double s,
                            const OdeOptions& opts = {});

/// The planar family
///   u' = (a mu'/mu + omega mu'/mu (cos t - 1) - omega log mu sin t) u
///   v' = (b mu'/mu - omega mu'/mu (cos t - 1) + omega log mu sin t) v
/// with omega = eps / 2 and P(t)(u, v) = (u, 0). Its evolution operator is
/// diagonal with closed-form entries U(t, s) and V(t, s).
class ClosedFormExample {
 public:
  ClosedFormExample(GrowthRate growth, double a, double b, double eps);

  const GrowthRate& growth() const noexcept { return growth_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double eps() const noexcept { return eps_; }
  double omega() const noexcept { return omega_; }

  double U(double t, double s) const;
  double V(double t, double s) const;
  double V_inverse(double t, double s) const { return 1.0 / V(t, s); }

  /// log U(t, 0) and log V(t, 0); U(t, s) = exp(log_U(t) - log_U(s)).
  double log_U(double t) const;
  double log_V(double t) const;

  double stable_rate(double t) const;
  double unstable_rate(double t) const;

  GeneralLinearSystem linear_system() const;

 private:
  GrowthRate growth_;
  double a_;
  double b_;
  double eps_;
  double omega_;
};

/// Throws PreconditionError unless a < 0 <= b and eps >= 0.
ClosedFormExample example_system(const GrowthRate& g, double a, double b, double eps);

/// A planar system with diagonal coefficient, E(t) = span(e1), F(t) = span(e2).
/// The scalar evolution operators are carried as log-fundamental solutions,
/// U(t, s) = exp(lu(t) - lu(s)) and V(t, s) = exp(lv(t) - lv(s)).
class DiagonalPlanarSystem {
 public:
  using LogFn = std::function<double(double)>;

  DiagonalPlanarSystem(GeneralLinearSystem linear, LogFn log_stable, LogFn log_unstable);

  const GeneralLinearSystem& linear() const noexcept { return linear_; }
  double log_stable(double t) const { return log_stable_(t); }
  double log_unstable(double t) const { return log_unstable_(t); }

  double U(double t, double s) const;
  double V(double t, double s) const;
  /// V(r, s)^{-1}.
  double V_inverse(double r, double s) const;

 private:
  GeneralLinearSystem linear_;
  LogFn log_stable_;
  LogFn log_unstable_;
};

/// Uses the closed-form evolution of the example family.
DiagonalPlanarSystem planar_system(const ClosedFormExample& ex);

/// Tabulates log U(t_i, t_0) and log V(t_i, t_0) by propagating a diagonal
/// 2x2 system node to node; off-node values interpolate the logarithms
/// linearly. Throws PreconditionError if A(t) has off-diagonal entries on the
/// grid or the grid is not increasing.
DiagonalPlanarSystem tabulate_planar_system(const GeneralLinearSystem& sys,
                                            std::span<const double> grid,
                                            const OdeOptions& opts = {});

/// Times for a (t, s) pair sweep; the pairs are all t >= s drawn from `times`.
struct PairGrid {
  double t0 = 0.0;
  double t1 = 20.0;
  double step = 0.25;
  std::vector<double> times;

  static PairGrid uniform(double t0, double t1, double step);
  std::size_t pair_count() const { return times.size() * (times.size() + 1) / 2; }
};

struct DichotomyReport {
  bool pass = false;
  bool degenerate = false;
  double D_min_U = 0.0;
  double D_min_V = 0.0;
  std::pair<double, double> worst_pair_U{0.0, 0.0};
  std::pair<double, double> worst_pair_V{0.0, 0.0};
  std::vector<std::pair<double, double>> nonfinite_pairs;
  DichotomySpec spec;
  PairGrid grid;
};

using OperatorMap = std::function<Matrix(double t, double s)>;

/// Sweeps all grid pairs t >= s and reports the largest normalised operator
/// norms. Passes iff both maxima are <= D + 1e-9 and every value is finite.
DichotomyReport check_dichotomy(const OperatorMap& U, const OperatorMap& V_inverse,
                                const DichotomySpec& spec, const GrowthRate& g,
                                const PairGrid& grid);

/// Convenience overload wiring the closed-form U and V^{-1}.
DichotomyReport check_dichotomy(const ClosedFormExample& ex, const DichotomySpec& spec,
                                const PairGrid& grid);

struct WitnessEntry {
  int k = 0;
  double t = 0.0;
  double s = 0.0;
  double ratio = 0.0;
  double mu_s_pow_eps = 0.0;
};

/// r_k = |U(2k pi, 2k pi - pi)| / (mu(2k pi)/mu(2k pi - pi))^a, k = 1..k_max.
std::vector<WitnessEntry> nonuniformity_witness(const ClosedFormExample& ex, int k_max);

}  // namespace mumanifold
