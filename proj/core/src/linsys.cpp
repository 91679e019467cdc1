#include "mumanifold/linsys.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "mumanifold/errors.hpp"

namespace mumanifold {

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

void DichotomySpec::validate() const {
  if (!(D >= 1.0)) throw PreconditionError("dichotomy constant D must be >= 1");
  if (!(a < 0.0)) throw PreconditionError("stable exponent a must be negative");
  if (!(b >= 0.0)) throw PreconditionError("unstable exponent b must be nonnegative");
  if (!(eps >= 0.0)) throw PreconditionError("nonuniformity exponent eps must be >= 0");
}

// --- Splitting --------------------------------------------------------------

Splitting::Splitting(std::size_t dim, ProjectorFn projector)
    : dim_(dim), projector_(std::move(projector)) {
  if (dim_ == 0 || !projector_) throw PreconditionError("splitting needs a projector on R^n");
}

Splitting Splitting::coordinate(std::size_t dim, std::size_t stable_dim) {
  if (stable_dim > dim) throw PreconditionError("stable dimension exceeds state dimension");
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < stable_dim; ++i) {
    p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return Splitting(dim, [p](double) { return p; });
}

Matrix Splitting::Q(double t) const {
  const auto n = static_cast<Eigen::Index>(dim_);
  return Matrix::Identity(n, n) - P(t);
}

double Splitting::projection_residual(double t) const {
  const Matrix p = P(t);
  const Matrix q = Q(t);
  const auto n = static_cast<Eigen::Index>(dim_);
  return operator_norm(p * p - p) + operator_norm(p + q - Matrix::Identity(n, n));
}

// --- GeneralLinearSystem ----------------------------------------------------

GeneralLinearSystem::GeneralLinearSystem(std::size_t dim, CoefficientFn coefficient,
                                         Splitting splitting)
    : dim_(dim), coefficient_(std::move(coefficient)), splitting_(std::move(splitting)) {
  if (!coefficient_) throw PreconditionError("linear system needs a coefficient A(t)");
  if (splitting_.dim() != dim_) throw PreconditionError("splitting dimension mismatch");
}

Vector propagate(const GeneralLinearSystem& sys, double s, double t, const Vector& v,
                 const OdeOptions& opts) {
  if (!(s >= 0.0) || !(t >= s)) throw PreconditionError("propagate needs 0 <= s <= t");
  if (v.size() != static_cast<Eigen::Index>(sys.dim())) {
    throw PreconditionError("state dimension mismatch");
  }
  if (!v.allFinite()) throw PreconditionError("initial state must be finite");
  if (t == s) return v;
  const double nodes[] = {s, t};
  auto rhs = [&sys](double r, const Vector& y) -> Vector { return sys.coefficient(r) * y; };
  const auto traj = integrate_adaptive_rk4<Vector>(rhs, nodes, v, opts);
  if (traj.escaped) {
    throw IntegrationError("linear propagation escaped", traj.escape_time);
  }
  return traj.states.back();
}

Matrix evolution_operator(const GeneralLinearSystem& sys, double s, double t,
                          const OdeOptions& opts) {
  const auto n = static_cast<Eigen::Index>(sys.dim());
  Matrix T(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    T.col(j) = propagate(sys, s, t, Vector::Unit(n, j), opts);
  }
  return T;
}

Vector propagate_backward(const GeneralLinearSystem& sys, double t, double s, const Vector& w,
                          const OdeOptions& opts) {
  if (!(s >= 0.0) || !(t >= s)) throw PreconditionError("propagate_backward needs 0 <= s <= t");
  if (t == s) return w;
  // Reverse time: z(r) = v(t - r) solves z' = -A(t - r) z.
  const double nodes[] = {0.0, t - s};
  auto rhs = [&sys, t](double r, const Vector& z) -> Vector {
    return -(sys.coefficient(t - r) * z);
  };
  const auto traj = integrate_adaptive_rk4<Vector>(rhs, nodes, w, opts);
  if (traj.escaped) {
    throw IntegrationError("backward propagation escaped", t - traj.escape_time);
  }
  return traj.states.back();
}

double commutation_residual(const GeneralLinearSystem& sys, double t, double s,
                            const OdeOptions& opts) {
  const Matrix T = evolution_operator(sys, s, t, opts);
  const auto& split = sys.splitting();
  return operator_norm(split.P(t) * T - T * split.P(s));
}

// --- ClosedFormExample ------------------------------------------------------

ClosedFormExample::ClosedFormExample(GrowthRate growth, double a, double b, double eps)
    : growth_(std::move(growth)), a_(a), b_(b), eps_(eps), omega_(eps / 2.0) {
  if (!(a_ < 0.0)) throw PreconditionError("example family needs a < 0");
  if (!(b_ >= 0.0)) throw PreconditionError("example family needs b >= 0");
  if (!(eps_ >= 0.0)) throw PreconditionError("example family needs eps >= 0");
}

double ClosedFormExample::U(double t, double s) const {
  const double lt = growth_.log_value(t);
  const double ls = growth_.log_value(s);
  return std::pow(growth_(t) / growth_(s), a_) *
         std::exp(omega_ * lt * (std::cos(t) - 1.0) - omega_ * ls * (std::cos(s) - 1.0));
}

double ClosedFormExample::V(double t, double s) const {
  const double lt = growth_.log_value(t);
  const double ls = growth_.log_value(s);
  return std::pow(growth_(t) / growth_(s), b_) *
         std::exp(-omega_ * lt * (std::cos(t) - 1.0) + omega_ * ls * (std::cos(s) - 1.0));
}

double ClosedFormExample::log_U(double t) const {
  const double l = growth_.log_value(t);
  return a_ * l + omega_ * l * (std::cos(t) - 1.0);
}

double ClosedFormExample::log_V(double t) const {
  const double l = growth_.log_value(t);
  return b_ * l - omega_ * l * (std::cos(t) - 1.0);
}

double ClosedFormExample::stable_rate(double t) const {
  const double q = growth_.derivative(t) / growth_(t);
  return a_ * q + omega_ * q * (std::cos(t) - 1.0) - omega_ * growth_.log_value(t) * std::sin(t);
}

// The coefficient of b is mu'/mu (not mu/mu'), the only choice whose
// evolution operator is the closed-form V above.
double ClosedFormExample::unstable_rate(double t) const {
  const double q = growth_.derivative(t) / growth_(t);
  return b_ * q - omega_ * q * (std::cos(t) - 1.0) + omega_ * growth_.log_value(t) * std::sin(t);
}

GeneralLinearSystem ClosedFormExample::linear_system() const {
  const ClosedFormExample self = *this;
  return GeneralLinearSystem(
      2,
      [self](double t) {
        Matrix A = Matrix::Zero(2, 2);
        A(0, 0) = self.stable_rate(t);
        A(1, 1) = self.unstable_rate(t);
        return A;
      },
      Splitting::coordinate(2, 1));
}

ClosedFormExample example_system(const GrowthRate& g, double a, double b, double eps) {
  return ClosedFormExample(g, a, b, eps);
}

// --- DiagonalPlanarSystem ---------------------------------------------------

DiagonalPlanarSystem::DiagonalPlanarSystem(GeneralLinearSystem linear, LogFn log_stable,
                                           LogFn log_unstable)
    : linear_(std::move(linear)),
      log_stable_(std::move(log_stable)),
      log_unstable_(std::move(log_unstable)) {
  if (linear_.dim() != 2) throw PreconditionError("planar system must be two-dimensional");
}

double DiagonalPlanarSystem::U(double t, double s) const {
  return std::exp(log_stable_(t) - log_stable_(s));
}

double DiagonalPlanarSystem::V(double t, double s) const {
  return std::exp(log_unstable_(t) - log_unstable_(s));
}

double DiagonalPlanarSystem::V_inverse(double r, double s) const {
  return std::exp(log_unstable_(s) - log_unstable_(r));
}

DiagonalPlanarSystem planar_system(const ClosedFormExample& ex) {
  return DiagonalPlanarSystem(
      ex.linear_system(), [ex](double t) { return ex.log_U(t); },
      [ex](double t) { return ex.log_V(t); });
}

namespace {

struct LogTable {
  std::vector<double> times;
  std::vector<double> values;

  double operator()(double t) const {
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
    const double w = (t - times[i]) / (times[i + 1] - times[i]);
    return values[i] + w * (values[i + 1] - values[i]);
  }
};

}  // namespace

DiagonalPlanarSystem tabulate_planar_system(const GeneralLinearSystem& sys,
                                            std::span<const double> grid,
                                            const OdeOptions& opts) {
  if (sys.dim() != 2) throw PreconditionError("tabulation needs a planar system");
  if (grid.size() < 2) throw PreconditionError("tabulation grid needs at least two nodes");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw PreconditionError("tabulation grid must be increasing");
    }
    const Matrix A = sys.coefficient(grid[i]);
    if (A(0, 1) != 0.0 || A(1, 0) != 0.0) {
      throw PreconditionError("tabulation needs a diagonal coefficient on E x F");
    }
  }
  LogTable lu{{grid.begin(), grid.end()}, std::vector<double>(grid.size(), 0.0)};
  LogTable lv = lu;
  Vector e1 = Vector::Unit(2, 0);
  Vector e2 = Vector::Unit(2, 1);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    // Node-to-node steps keep the propagated values O(1).
    const Vector pu = propagate(sys, grid[i - 1], grid[i], e1, opts);
    const Vector pv = propagate(sys, grid[i - 1], grid[i], e2, opts);
    lu.values[i] = lu.values[i - 1] + std::log(pu(0));
    lv.values[i] = lv.values[i - 1] + std::log(pv(1));
  }
  return DiagonalPlanarSystem(sys, lu, lv);
}

// --- Dichotomy checks -------------------------------------------------------

PairGrid PairGrid::uniform(double t0, double t1, double step) {
  PairGrid g{t0, t1, step, {}};
  const auto n = static_cast<std::size_t>(std::llround((t1 - t0) / step));
  g.times.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g.times.push_back(t0 + static_cast<double>(i) * step);
  return g;
}

DichotomyReport check_dichotomy(const OperatorMap& U, const OperatorMap& V_inverse,
                                const DichotomySpec& spec, const GrowthRate& g,
                                const PairGrid& grid) {
  DichotomyReport r;
  r.spec = spec;
  r.grid = grid;
  const auto& ts = grid.times;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    for (std::size_t j = 0; j <= i; ++j) {
      const double s = ts[j];
      const double ratio_mu = g(t) / g(s);
      const double bound_u = std::pow(ratio_mu, spec.a) * std::pow(g(s), spec.eps);
      const double bound_v = std::pow(ratio_mu, -spec.b) * std::pow(g(t), spec.eps);
      const double nu = operator_norm(U(t, s)) / bound_u;
      const double nv = operator_norm(V_inverse(t, s)) / bound_v;
      if (!std::isfinite(nu) || !std::isfinite(nv)) {
        r.nonfinite_pairs.emplace_back(t, s);
        continue;
      }
      if (nu > r.D_min_U) {
        r.D_min_U = nu;
        r.worst_pair_U = {t, s};
      }
      if (nv > r.D_min_V) {
        r.D_min_V = nv;
        r.worst_pair_V = {t, s};
      }
    }
  }
  r.degenerate = (r.D_min_U == 0.0 || r.D_min_V == 0.0);
  r.pass = r.nonfinite_pairs.empty() && r.D_min_U <= spec.D + 1e-9 &&
           r.D_min_V <= spec.D + 1e-9;
  return r;
}

DichotomyReport check_dichotomy(const ClosedFormExample& ex, const DichotomySpec& spec,
                                const PairGrid& grid) {
  auto U = [&ex](double t, double s) { return Matrix::Constant(1, 1, ex.U(t, s)); };
  auto Vi = [&ex](double t, double s) { return Matrix::Constant(1, 1, ex.V_inverse(t, s)); };
  return check_dichotomy(U, Vi, spec, ex.growth(), grid);
}

std::vector<WitnessEntry> nonuniformity_witness(const ClosedFormExample& ex, int k_max) {
  if (k_max < 1) throw PreconditionError("witness needs k_max >= 1");
  const auto& g = ex.growth();
  std::vector<WitnessEntry> out;
  out.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    const double t = 2.0 * k * std::numbers::pi;
    const double s = t - std::numbers::pi;
    WitnessEntry w;
    w.k = k;
    w.t = t;
    w.s = s;
    w.ratio = std::abs(ex.U(t, s)) / std::pow(g(t) / g(s), ex.a());
    w.mu_s_pow_eps = std::pow(g(s), ex.eps());
    out.push_back(w);
  }
  return out;
}

}  // namespace mumanifold
