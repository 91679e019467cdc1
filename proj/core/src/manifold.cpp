#include "mumanifold/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mumanifold/errors.hpp"
#include "mumanifold/parallel.hpp"

namespace mumanifold {

namespace {

// Differences smaller than this are rounding noise; contraction ratios are
// only recorded above it.
constexpr double kRatioFloor = 1e-13;

}  // namespace

// --- configuration ----------------------------------------------------------

void SolverConfig::validate(const DichotomySpec& spec) const {
  spec.validate();
  if (!(s0 >= 0.0)) throw PreconditionError("base time s0 must be >= 0");
  if (!(t_max > s0)) throw PreconditionError("t_max must exceed s0");
  if (!(t_step > 0.0)) throw PreconditionError("t_step must be positive");
  if (!(xi_step > 0.0) || !(xi_range >= xi_step)) {
    throw PreconditionError("xi grid needs 0 < xi_step <= xi_range");
  }
  const double c = class_constant(spec);
  if (!(c > spec.D)) throw PreconditionError("class constant C must exceed D");
  if (!(tol_inner > 0.0) || !(tol_outer > 0.0)) {
    throw PreconditionError("tolerances must be positive");
  }
  if (max_iter_inner < 1 || max_iter_outer < 1) {
    throw PreconditionError("iteration caps must be positive");
  }
  if (time_grid().count < 2) throw PreconditionError("time grid needs at least two nodes");
}

// --- grid functions ---------------------------------------------------------

GraphFunction GraphFunction::zero(const TimeGrid& s_grid, const XiGrid& xi) {
  return GraphFunction{s_grid, xi,
                       Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s_grid.count),
                                             static_cast<Eigen::Index>(xi.size()))};
}

double GraphFunction::interpolate(std::size_t row, double x) const {
  const auto r = static_cast<Eigen::Index>(row);
  const double u = x / xi.step;
  const auto half = static_cast<double>(xi.half);
  if (u <= -half) return values(r, 0);
  if (u >= half) return values(r, static_cast<Eigen::Index>(2 * xi.half));
  const double fl = std::floor(u);
  const auto k = static_cast<Eigen::Index>(fl + half);
  const double w = u - fl;
  if (w == 0.0) return values(r, k);
  return values(r, k) + w * (values(r, k + 1) - values(r, k));
}

double GraphFunction::evaluate(double s, double x) const {
  double p = (s - s_grid.start) / s_grid.step;
  const auto last = static_cast<double>(s_grid.count - 1);
  p = std::clamp(p, 0.0, last);
  const double nearest = std::round(p);
  if (std::abs(p - nearest) < 1e-9) return interpolate(static_cast<std::size_t>(nearest), x);
  const double fl = std::floor(p);
  const auto i = static_cast<std::size_t>(fl);
  const double w = p - fl;
  return (1.0 - w) * interpolate(i, x) + w * interpolate(i + 1, x);
}

double weighted_norm_B(const TrajectoryFamily& x, const GrowthRate& g, double a, double eps) {
  const double log_mu_s = g.log_value(x.base());
  double sup = 0.0;
  for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
    const double log_mu_t = g.log_value(x.times.at(static_cast<std::size_t>(i)));
    const double w = std::exp(a * (log_mu_s - log_mu_t) - eps * log_mu_s);
    for (std::size_t k = 0; k < x.xi.size(); ++k) {
      if (k == x.xi.centre()) continue;
      const double v = w * std::abs(x.values(i, static_cast<Eigen::Index>(k))) / std::abs(x.xi.at(k));
      sup = std::max(sup, v);
    }
  }
  return sup;
}

double weighted_norm_X(const GraphFunction& phi) {
  double sup = 0.0;
  for (Eigen::Index i = 0; i < phi.values.rows(); ++i) {
    for (std::size_t k = 0; k < phi.xi.size(); ++k) {
      if (k == phi.xi.centre()) continue;
      sup = std::max(sup,
                     std::abs(phi.values(i, static_cast<Eigen::Index>(k))) / std::abs(phi.xi.at(k)));
    }
  }
  return sup;
}

TrajectoryClassReport check_trajectory_class(const TrajectoryFamily& x, const GrowthRate& g,
                                             const DichotomySpec& spec, double C) {
  TrajectoryClassReport r;
  const std::size_t m = x.xi.size();
  const auto c = static_cast<Eigen::Index>(x.xi.centre());
  for (std::size_t k = 0; k < m; ++k) {
    if (x.values(0, static_cast<Eigen::Index>(k)) != x.xi.at(k)) r.base_slice_exact = false;
  }
  const double log_mu_s = g.log_value(x.base());
  for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
    if (x.values(i, c) != 0.0) r.zero_column_exact = false;
    const double log_mu_t = g.log_value(x.times.at(static_cast<std::size_t>(i)));
    const double envelope = C * std::exp(spec.a * (log_mu_t - log_mu_s) + spec.eps * log_mu_s);
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double q = std::abs(x.values(i, kk + 1) - x.values(i, kk)) / x.xi.step;
      r.lipschitz_ratio = std::max(r.lipschitz_ratio, q / envelope);
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (k == x.xi.centre()) continue;
      const double q = std::abs(x.values(i, static_cast<Eigen::Index>(k))) / std::abs(x.xi.at(k));
      r.bound_ratio = std::max(r.bound_ratio, q / envelope);
    }
  }
  r.pass = r.base_slice_exact && r.zero_column_exact && r.lipschitz_ratio <= 1.0 &&
           r.bound_ratio <= 1.0;
  return r;
}

GraphClassReport check_graph_class(const GraphFunction& phi) {
  GraphClassReport r;
  const std::size_t m = phi.xi.size();
  const auto c = static_cast<Eigen::Index>(phi.xi.centre());
  const double near = 4.0 * phi.xi.step * (1.0 + 1e-12);
  for (Eigen::Index i = 0; i < phi.values.rows(); ++i) {
    if (phi.values(i, c) != 0.0) r.zero_column_exact = false;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      r.lipschitz =
          std::max(r.lipschitz, std::abs(phi.values(i, kk + 1) - phi.values(i, kk)) / phi.xi.step);
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (k == phi.xi.centre()) continue;
      const double xi = std::abs(phi.xi.at(k));
      const double v = std::abs(phi.values(i, static_cast<Eigen::Index>(k)));
      r.bound_ratio = std::max(r.bound_ratio, v / xi);
      if (xi <= near) r.flatness_constant = std::max(r.flatness_constant, v / (xi * xi));
    }
  }
  r.pass = r.zero_column_exact && r.lipschitz <= 1.0 + 1e-6 && r.bound_ratio <= 1.0 + 1e-12 &&
           std::isfinite(r.flatness_constant);
  return r;
}

// --- solver -----------------------------------------------------------------

LyapunovPerronSolver::LyapunovPerronSolver(ManifoldProblem problem)
    : problem_(std::move(problem)) {
  problem_.cfg.validate(problem_.spec);
  grid_ = problem_.cfg.time_grid();
  xi_ = problem_.cfg.xi_grid();
  C_ = problem_.C();
  const auto& g = problem_.growth();
  const std::size_t n = grid_.count;
  log_mu_.resize(n);
  log_U_.resize(n);
  log_V_.resize(n);
  envelope_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid_.at(i);
    log_mu_[i] = g.log_value(t);
    log_U_[i] = problem_.system.log_stable(t);
    log_V_[i] = problem_.system.log_unstable(t);
    envelope_[i] = problem_.f.envelope(t);
  }
}

TrajectoryFamily LyapunovPerronSolver::initial_trajectory(std::size_t base) const {
  if (base >= grid_.count) throw PreconditionError("base index outside the time grid");
  const std::size_t rows = grid_.count - base;
  TrajectoryFamily x{base, grid_.from(base), xi_,
                     Eigen::MatrixXd(static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(xi_.size()))};
  for (std::size_t i = 0; i < rows; ++i) {
    const double u = i == 0 ? 1.0 : std::exp(log_U_[base + i] - log_U_[base]);
    for (std::size_t k = 0; k < xi_.size(); ++k) {
      x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = u * xi_.at(k);
    }
  }
  return x;
}

TrajectoryFamily LyapunovPerronSolver::inner_operator(const TrajectoryFamily& x,
                                                      const GraphFunction& phi) const {
  const std::size_t base = x.base_index;
  const std::size_t rows = grid_.count - base;
  if (static_cast<std::size_t>(x.values.rows()) != rows ||
      static_cast<std::size_t>(x.values.cols()) != xi_.size()) {
    throw PreconditionError("trajectory family does not match the solver grid");
  }
  TrajectoryFamily out = x;
  std::vector<double> forward(rows);   // U(t_i, s)
  std::vector<double> backward(rows);  // U(t_i, s)^{-1}
  for (std::size_t i = 0; i < rows; ++i) {
    const double d = log_U_[base + i] - log_U_[base];
    forward[i] = i == 0 ? 1.0 : std::exp(d);
    backward[i] = i == 0 ? 1.0 : std::exp(-d);
  }
  std::vector<double> integrand(rows);
  std::vector<double> running(rows);
  const auto& f = problem_.f;
  for (std::size_t k = 0; k < xi_.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double xi = xi_.at(k);
    if (k == xi_.centre() || f.is_zero()) {
      for (std::size_t i = 0; i < rows; ++i) {
        out.values(static_cast<Eigen::Index>(i), kk) = i == 0 ? xi : forward[i] * xi;
      }
      continue;
    }
    for (std::size_t i = 0; i < rows; ++i) {
      const double xv = x.values(static_cast<Eigen::Index>(i), kk);
      const double yv = phi.interpolate(base + i, xv);
      const double fv = envelope_[base + i] * f.shape(PlanarState(xv, yv))(0);
      integrand[i] = backward[i] * fv;
      if (!std::isfinite(integrand[i])) {
        throw NonFiniteError("inner operator: non-finite integrand", grid_.at(base + i), xi);
      }
    }
    cumulative_integral(integrand, grid_.step, problem_.cfg.quadrature, running);
    out.values(0, kk) = xi;
    for (std::size_t i = 1; i < rows; ++i) {
      out.values(static_cast<Eigen::Index>(i), kk) = forward[i] * (xi + running[i]);
    }
  }
  return out;
}

double LyapunovPerronSolver::weighted_difference_B(const TrajectoryFamily& x,
                                                   const TrajectoryFamily& y) const {
  const std::size_t base = x.base_index;
  const double a = problem_.spec.a;
  const double eps = problem_.spec.eps;
  double sup = 0.0;
  for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
    const std::size_t g = base + static_cast<std::size_t>(i);
    const double w = std::exp(a * (log_mu_[base] - log_mu_[g]) - eps * log_mu_[base]);
    for (std::size_t k = 0; k < xi_.size(); ++k) {
      if (k == xi_.centre()) continue;
      const auto kk = static_cast<Eigen::Index>(k);
      const double d = std::abs(x.values(i, kk) - y.values(i, kk));
      const double v = w * d / std::abs(xi_.at(k));
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      sup = std::max(sup, v);
    }
  }
  return sup;
}

std::pair<TrajectoryFamily, InnerDiagnostics> LyapunovPerronSolver::solve_x(
    const GraphFunction& phi, std::size_t base) const {
  InnerDiagnostics diag;
  TrajectoryFamily x = initial_trajectory(base);
  double previous = 0.0;
  for (int iter = 1; iter <= problem_.cfg.max_iter_inner; ++iter) {
    TrajectoryFamily next = inner_operator(x, phi);
    const double d = weighted_difference_B(next, x);
    diag.iterations = iter;
    diag.final_difference = d;
    if (!std::isfinite(d)) {
      throw ConvergenceError("inner iteration diverged", iter,
                             diag.ratios.empty() ? std::numeric_limits<double>::infinity()
                                                 : diag.ratios.back());
    }
    if (iter > 1 && previous > kRatioFloor) diag.ratios.push_back(d / previous);
    if (d <= problem_.cfg.tol_inner) return {std::move(next), std::move(diag)};
    previous = d;
    x = std::move(next);
  }
  throw ConvergenceError("inner iteration exceeded max_iter_inner", diag.iterations,
                         diag.ratios.empty() ? 0.0 : diag.ratios.back());
}

double LyapunovPerronSolver::outer_value(const TrajectoryFamily& x, const GraphFunction& phi,
                                         std::size_t column, std::vector<double>& weights,
                                         std::vector<double>& integrand) const {
  const std::size_t base = x.base_index;
  const std::size_t rows = grid_.count - base;
  const auto kk = static_cast<Eigen::Index>(column);
  for (std::size_t i = 0; i < rows; ++i) {
    const double xv = x.values(static_cast<Eigen::Index>(i), kk);
    const double yv = phi.interpolate(base + i, xv);
    const double fv = envelope_[base + i] * problem_.f.shape(PlanarState(xv, yv))(1);
    integrand[i] = weights[i] * fv;
    if (!std::isfinite(integrand[i])) {
      throw NonFiniteError("outer operator: non-finite integrand", grid_.at(base + i),
                           xi_.at(column));
    }
  }
  return -integral(std::span<const double>(integrand.data(), rows), grid_.step,
                   problem_.cfg.quadrature);
}

double LyapunovPerronSolver::tail_bound(double s, double xi_norm) const {
  const auto& spec = problem_.spec;
  const auto& g = problem_.growth();
  const double gap = spec.a - spec.b - 2.0 * spec.eps;
  const double delta = problem_.f.is_zero() ? 0.0 : problem_.f.delta();
  return 2.0 * C_ * spec.D * delta / std::abs(gap) *
         std::pow(g(grid_.back()) / g(s), gap) * std::pow(g(s), -spec.eps) * xi_norm;
}

void LyapunovPerronSolver::check_tail() const {
  const double tail = tail_bound(grid_.start, xi_.radius());
  if (tail > problem_.cfg.tail_tolerance) {
    throw ConfigError("truncation tail bound " + std::to_string(tail) +
                      " exceeds tail_tolerance; increase t_max");
  }
}

GraphFunction LyapunovPerronSolver::outer_operator(const GraphFunction& phi,
                                                   std::vector<InnerDiagnostics>* inner) const {
  check_tail();
  if (phi.s_grid.count != grid_.count || phi.xi.size() != xi_.size()) {
    throw PreconditionError("graph function does not match the solver grid");
  }
  GraphFunction out = GraphFunction::zero(grid_, xi_);
  std::vector<InnerDiagnostics> diags(grid_.count);
  if (problem_.f.is_zero()) {
    if (inner) *inner = std::move(diags);
    return out;
  }
  const unsigned workers = worker_count(problem_.cfg.threads);
  parallel_for(
      grid_.count,
      [&](std::size_t base) {
        auto [x, diag] = solve_x(phi, base);
        const std::size_t rows = grid_.count - base;
        std::vector<double> weights(rows);
        std::vector<double> integrand(rows);
        for (std::size_t i = 0; i < rows; ++i) {
          weights[i] = i == 0 ? 1.0 : std::exp(log_V_[base] - log_V_[base + i]);
        }
        for (std::size_t k = 0; k < xi_.size(); ++k) {
          if (k == xi_.centre()) continue;
          out.values(static_cast<Eigen::Index>(base), static_cast<Eigen::Index>(k)) =
              outer_value(x, phi, k, weights, integrand);
        }
        diags[base] = std::move(diag);
      },
      workers);
  if (inner) *inner = std::move(diags);
  return out;
}

void LyapunovPerronSolver::check_preconditions() const {
  const auto& spec = problem_.spec;
  if (!(spec.eps > 0.0)) throw PreconditionError("stable manifold construction needs eps > 0");
  if (!spec.has_spectral_gap()) throw PreconditionError("spectral gap a + eps < b violated");
  if (problem_.f.eps() != spec.eps) {
    throw PreconditionError("perturbation envelope eps differs from the dichotomy eps");
  }
  const DeltaBounds bounds = delta_max(spec.D, C_, spec.eps, spec.a, spec.b);
  if (!problem_.f.is_zero() && !(problem_.f.delta() < bounds.delta_max)) {
    throw PreconditionError("delta = " + std::to_string(problem_.f.delta()) +
                            " is not below delta_max = " + std::to_string(bounds.delta_max) +
                            " (binding threshold: " + bounds.binding + ")");
  }
}

ManifoldSolution LyapunovPerronSolver::solve(const GraphFunction* initial) const {
  check_preconditions();
  check_tail();
  const auto& spec = problem_.spec;
  const double delta = problem_.f.is_zero() ? 0.0 : problem_.f.delta();

  ManifoldSolution sol{initial ? *initial : GraphFunction::zero(grid_, xi_), {}};
  auto& diag = sol.diagnostics;
  diag.inner_ratio_bound = spec.D * delta / spec.eps;
  diag.outer_ratio_bound =
      3.0 * C_ * spec.D * delta / std::abs(spec.a - spec.b - 2.0 * spec.eps);
  diag.tail_bound = tail_bound(grid_.start, xi_.radius());

  double previous = 0.0;
  for (int iter = 1; iter <= problem_.cfg.max_iter_outer; ++iter) {
    std::vector<InnerDiagnostics> inner;
    GraphFunction next = outer_operator(sol.phi, &inner);
    GraphFunction change{grid_, xi_, next.values - sol.phi.values};
    const double d = weighted_norm_X(change);
    double max_ratio = 0.0;
    int max_iters = 0;
    for (const auto& in : inner) {
      max_iters = std::max(max_iters, in.iterations);
      for (const double r : in.ratios) max_ratio = std::max(max_ratio, r);
    }
    diag.iterations = iter;
    diag.differences.push_back(d);
    diag.max_inner_ratio.push_back(max_ratio);
    diag.max_inner_iterations.push_back(max_iters);
    if (iter > 1 && previous > kRatioFloor) diag.ratios.push_back(d / previous);
    sol.phi = std::move(next);
    diag.residual = d;
    if (!std::isfinite(d)) {
      throw ConvergenceError("outer iteration diverged", iter,
                             diag.ratios.empty() ? 0.0 : diag.ratios.back());
    }
    if (d <= problem_.cfg.tol_outer) {
      diag.converged = true;
      break;
    }
    previous = d;
  }
  if (!diag.converged) {
    throw ConvergenceError("outer iteration exceeded max_iter_outer", diag.iterations,
                           diag.ratios.empty() ? 0.0 : diag.ratios.back());
  }
  if (problem_.cfg.estimate_quadrature && !problem_.f.is_zero()) {
    ManifoldProblem other = problem_;
    other.cfg.quadrature = problem_.cfg.quadrature == Quadrature::trapezoid
                               ? Quadrature::simpson
                               : Quadrature::trapezoid;
    const GraphFunction alt = LyapunovPerronSolver(std::move(other)).outer_operator(sol.phi);
    diag.quadrature_estimate = (alt.values - sol.phi.values).cwiseAbs().maxCoeff();
  }
  return sol;
}

BoundReport LyapunovPerronSolver::pair_distance_bound_check(const GraphFunction& phi,
                                                            const GraphFunction& psi,
                                                            std::size_t base_stride) const {
  const auto& spec = problem_.spec;
  BoundReport r;
  r.threshold = 1.0 + problem_.cfg.grid_slack;
  const double delta = problem_.f.is_zero() ? 0.0 : problem_.f.delta();
  if (!(delta < 2.0 * spec.eps / (3.0 * spec.D))) {
    throw PreconditionError("pair distance bound needs delta < 2 eps / (3 D)");
  }
  GraphFunction diff{grid_, xi_, phi.values - psi.values};
  const double distance = weighted_norm_X(diff);
  if (distance == 0.0) {
    r.skipped = true;
    r.note = "identical graphs; comparison skipped";
    return r;
  }
  base_stride = std::max<std::size_t>(base_stride, 1);
  std::vector<std::size_t> bases;
  for (std::size_t b = 0; b < grid_.count; b += base_stride) bases.push_back(b);
  std::vector<BoundReport> per_base(bases.size());
  parallel_for(
      bases.size(),
      [&](std::size_t n) {
        const std::size_t base = bases[n];
        const auto xp = solve_x(phi, base).first;
        const auto xq = solve_x(psi, base).first;
        BoundReport& local = per_base[n];
        for (Eigen::Index i = 0; i < xp.values.rows(); ++i) {
          const std::size_t g = base + static_cast<std::size_t>(i);
          const double env =
              C_ * std::exp(spec.a * (log_mu_[g] - log_mu_[base]) - spec.eps * log_mu_[base]);
          for (std::size_t k = 0; k < xi_.size(); ++k) {
            if (k == xi_.centre()) continue;
            const auto kk = static_cast<Eigen::Index>(k);
            const double ratio = std::abs(xp.values(i, kk) - xq.values(i, kk)) /
                                 (env * std::abs(xi_.at(k)) * distance);
            ++local.evaluated;
            if (ratio > local.max_ratio) {
              local.max_ratio = ratio;
              local.worst_t = grid_.at(g);
              local.worst_s = grid_.at(base);
              local.worst_xi = xi_.at(k);
            }
          }
        }
      },
      worker_count(problem_.cfg.threads));
  for (const auto& local : per_base) {
    r.evaluated += local.evaluated;
    if (local.max_ratio > r.max_ratio) {
      r.max_ratio = local.max_ratio;
      r.worst_t = local.worst_t;
      r.worst_s = local.worst_s;
      r.worst_xi = local.worst_xi;
    }
  }
  r.pass = r.max_ratio <= r.threshold;
  return r;
}

ManifoldSolution solve_manifold(const ManifoldProblem& problem) {
  return LyapunovPerronSolver(problem).solve();
}

}  // namespace mumanifold
