#include "mumanifold/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>

#include "mumanifold/errors.hpp"

namespace mumanifold {

namespace {

double sum_norm(const PlanarState& v) { return std::abs(v(0)) + std::abs(v(1)); }

std::vector<double> solver_nodes(const ManifoldProblem& problem, double horizon) {
  const TimeGrid grid = problem.cfg.time_grid();
  const auto n = static_cast<std::size_t>(std::llround(horizon / grid.step));
  std::vector<double> out(std::min(n + 1, grid.count));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid.at(i);
  return out;
}

double default_horizon(const ManifoldProblem& problem) {
  return 0.5 * (problem.cfg.t_max - problem.cfg.s0);
}

// (mu(t)/mu(s))^a mu(s)^(power * eps)
double decay_envelope(const ManifoldProblem& problem, double t, double s, double power) {
  const auto& g = problem.growth();
  const double ls = g.log_value(s);
  return std::exp(problem.spec.a * (g.log_value(t) - ls) + power * problem.spec.eps * ls);
}

}  // namespace

SemiflowSample integrate_nonlinear(const DiagonalPlanarSystem& sys, const Perturbation& f,
                                   double s, const PlanarState& v_s,
                                   std::span<const double> t_grid, const OdeOptions& opts) {
  if (t_grid.empty() || t_grid.front() != s) {
    throw PreconditionError("integration grid must start at the base time");
  }
  auto rhs = [&sys, &f](double t, const PlanarState& v) -> PlanarState {
    const Eigen::Matrix2d A = sys.linear().coefficient(t);
    return A * v + f(t, v);
  };
  SemiflowSample out;
  out.s = s;
  out.start = v_s;
  try {
    auto traj = integrate_adaptive_rk4<PlanarState>(rhs, t_grid, v_s, opts);
    out.times = std::move(traj.times);
    out.states = std::move(traj.states);
    out.escaped = traj.escaped;
    out.escape_time = traj.escape_time;
    out.escape_state = traj.escape_state;
  } catch (const IntegrationError& e) {
    out.escaped = true;
    out.escape_time = e.last_valid_time();
  }
  return out;
}

ResidualReport invariance_residual(const GraphFunction& phi, const ManifoldProblem& problem,
                                   const InvarianceOptions& opts) {
  const double limit = default_horizon(problem);
  const double horizon = opts.horizon > 0.0 ? opts.horizon : limit;
  if (horizon > limit * (1.0 + 1e-12)) {
    throw PreconditionError("invariance horizon must not exceed (t_max - s0) / 2");
  }
  const LyapunovPerronSolver solver(problem);
  const std::vector<double> nodes = solver_nodes(problem, horizon);

  ResidualReport r;
  r.horizon = horizon;
  r.offset = opts.offset;
  r.note =
      "the residual budget is assembled from solver diagnostics; invariance itself is exact set "
      "containment";
  r.budget.tolerance_term = 10.0 * problem.cfg.tol_outer;
  r.budget.quadrature_term = opts.quadrature_estimate;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index k = 1; k + 1 < phi.values.cols(); ++k) {
      const double second =
          phi.values(row, k + 1) - 2.0 * phi.values(row, k) + phi.values(row, k - 1);
      r.budget.interpolation_term = std::max(r.budget.interpolation_term, std::abs(second) / 8.0);
    }
  }
  r.budget.start_tail_term = solver.tail_bound(nodes.front(), phi.xi.radius());
  for (const double t : nodes) {
    r.budget.amplification = std::max(r.budget.amplification, problem.system.V(t, nodes.front()));
  }

  for (std::size_t k = 0; k < phi.xi.size(); ++k) {
    const double xi = phi.xi.at(k);
    const PlanarState start(xi, phi.values(0, static_cast<Eigen::Index>(k)) + opts.offset);
    const SemiflowSample traj =
        integrate_nonlinear(problem.system, problem.f, nodes.front(), start, nodes, opts.ode);
    ResidualSample sample;
    sample.xi = xi;
    sample.escaped = traj.escaped;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      const double x = traj.states[i](0);
      const double y = traj.states[i](1);
      if (!phi.in_range(x)) sample.out_of_range = true;
      const double res = std::abs(y - phi.interpolate(i, x));
      if (res > sample.max_residual) {
        sample.max_residual = res;
        sample.t_at_max = traj.times[i];
      }
      sample.final_residual = res;
      r.budget.tail_term = std::max(r.budget.tail_term, solver.tail_bound(traj.times[i], std::abs(x)));
    }
    if (traj.escaped) sample.final_residual = std::numeric_limits<double>::infinity();
    if (sample.out_of_range || sample.escaped) {
      ++r.excluded;
    } else {
      r.max_residual = std::max(r.max_residual, sample.max_residual);
    }
    r.samples.push_back(sample);
  }
  if (r.excluded > 0) {
    r.warning = std::to_string(r.excluded) +
                " sample(s) left the xi range or escaped and were excluded from the maximum";
  }
  r.pass = r.excluded < r.samples.size() && r.max_residual <= r.budget.total();
  return r;
}

NegativeControlReport negative_control(const GraphFunction& phi, const ManifoldProblem& problem,
                                       double offset, const InvarianceOptions& opts) {
  NegativeControlReport r;
  InvarianceOptions on = opts;
  on.offset = 0.0;
  InvarianceOptions off = opts;
  off.offset = offset;
  r.on_manifold = invariance_residual(phi, problem, on);
  r.off_manifold = invariance_residual(phi, problem, off);
  r.min_ratio = std::numeric_limits<double>::infinity();
  r.pass = true;
  for (std::size_t k = 0; k < r.on_manifold.samples.size(); ++k) {
    const double a = r.on_manifold.samples[k].final_residual;
    const double b = r.off_manifold.samples[k].final_residual;
    if (!(a * 10.0 <= b)) r.pass = false;
    if (a > 0.0) r.min_ratio = std::min(r.min_ratio, b / a);
  }
  return r;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_xi_pairs(const XiGrid& xi,
                                                                 std::size_t count,
                                                                 std::uint64_t seed) {
  const std::size_t m = xi.size();
  const std::size_t available = m * (m - 1) / 2;
  count = std::min(count, available);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  while (out.size() < count) {
    std::size_t k = pick(rng);
    std::size_t l = pick(rng);
    if (k == l) continue;
    if (k > l) std::swap(k, l);
    if (seen.insert({k, l}).second) out.emplace_back(k, l);
  }
  return out;
}

namespace {

class TrajectoryCache {
 public:
  TrajectoryCache(const GraphFunction& phi, const ManifoldProblem& problem,
                  std::vector<double> nodes, const OdeOptions& ode)
      : phi_(phi), problem_(problem), nodes_(std::move(nodes)), ode_(ode) {}

  const SemiflowSample& get(std::size_t k) {
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    const PlanarState start(phi_.xi.at(k), phi_.values(0, static_cast<Eigen::Index>(k)));
    auto sample = integrate_nonlinear(problem_.system, problem_.f, nodes_.front(), start, nodes_,
                                      ode_);
    return cache_.emplace(k, std::move(sample)).first->second;
  }

  const std::vector<double>& nodes() const { return nodes_; }

 private:
  const GraphFunction& phi_;
  const ManifoldProblem& problem_;
  std::vector<double> nodes_;
  OdeOptions ode_;
  std::map<std::size_t, SemiflowSample> cache_;
};

}  // namespace

BoundReport decay_check(const GraphFunction& phi, const ManifoldProblem& problem,
                        std::span<const std::pair<std::size_t, std::size_t>> pairs,
                        const DecayOptions& opts) {
  BoundReport r;
  const double K = opts.constant > 0.0 ? opts.constant : 2.0 * problem.C();
  r.threshold = K + problem.cfg.grid_slack;
  const double horizon = std::min(opts.horizon, problem.cfg.t_max - problem.cfg.s0);
  TrajectoryCache cache(phi, problem, solver_nodes(problem, horizon), opts.ode);
  const double s = cache.nodes().front();
  std::size_t skipped = 0;
  for (const auto& [k, l] : pairs) {
    const double dxi = std::abs(phi.xi.at(k) - phi.xi.at(l));
    if (k == l || dxi == 0.0) {
      ++skipped;
      continue;
    }
    const auto& p = cache.get(k);
    const auto& q = cache.get(l);
    if (p.escaped || q.escaped) {
      ++skipped;
      continue;
    }
    for (std::size_t i = 0; i < p.states.size(); ++i) {
      const double t = p.times[i];
      const double ratio =
          sum_norm(p.states[i] - q.states[i]) / (decay_envelope(problem, t, s, 1.0) * dxi);
      ++r.evaluated;
      if (ratio > r.max_ratio) {
        r.max_ratio = ratio;
        r.worst_t = t;
        r.worst_s = s;
        r.worst_xi = phi.xi.at(k);
        r.worst_xi_bar = phi.xi.at(l);
      }
    }
  }
  if (skipped > 0) r.note = std::to_string(skipped) + " coincident or escaped pair(s) skipped";
  r.skipped = r.evaluated == 0;
  r.pass = r.max_ratio <= r.threshold;
  return r;
}

BoundReport derivative_decay_check(const GraphFunction& phi, const ManifoldProblem& problem,
                                   std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                   const DecayOptions& opts) {
  BoundReport r;
  const double C = problem.C();
  const double K = opts.constant > 0.0 ? opts.constant : 2.0 * C + C * C;
  r.threshold = K + problem.cfg.grid_slack;
  const double horizon = std::min(opts.horizon, problem.cfg.t_max - problem.cfg.s0);
  TrajectoryCache cache(phi, problem, solver_nodes(problem, horizon), opts.ode);
  const double s = cache.nodes().front();
  const double h = phi.xi.step;
  const std::size_t last = phi.xi.size() - 2;
  std::size_t skipped = 0;
  for (auto [k, l] : pairs) {
    k = std::min(k, last);
    l = std::min(l, last);
    if (k == l) {
      ++skipped;
      continue;
    }
    const auto& pk = cache.get(k);
    const auto& pk1 = cache.get(k + 1);
    const auto& pl = cache.get(l);
    const auto& pl1 = cache.get(l + 1);
    if (pk.escaped || pk1.escaped || pl.escaped || pl1.escaped) {
      ++skipped;
      continue;
    }
    const double dxi = std::abs(phi.xi.at(k) - phi.xi.at(l));
    for (std::size_t i = 0; i < pk.states.size(); ++i) {
      const double t = pk.times[i];
      const PlanarState dk = (pk1.states[i] - pk.states[i]) / h;
      const PlanarState dl = (pl1.states[i] - pl.states[i]) / h;
      const double ratio = sum_norm(dk - dl) / (decay_envelope(problem, t, s, 2.0) * dxi);
      ++r.evaluated;
      if (ratio > r.max_ratio) {
        r.max_ratio = ratio;
        r.worst_t = t;
        r.worst_s = s;
        r.worst_xi = phi.xi.at(k);
        r.worst_xi_bar = phi.xi.at(l);
      }
    }
  }
  if (skipped > 0) r.note = std::to_string(skipped) + " coincident or escaped pair(s) skipped";
  r.skipped = r.evaluated == 0;
  r.pass = r.max_ratio <= r.threshold;
  return r;
}

TangencyReport tangency_check(const GraphFunction& phi) {
  TangencyReport r;
  const double near = 4.0 * phi.xi.step * (1.0 + 1e-12);
  std::vector<std::size_t> small;
  for (std::size_t k = 0; k < phi.xi.size(); ++k) {
    const double a = std::abs(phi.xi.at(k));
    if (a > 0.0 && a <= near) small.push_back(k);
  }
  r.points = small.size();
  if (small.size() < 4) throw PreconditionError("tangency check needs 4 nonzero xi within 4 h_xi");

  r.min_slope = std::numeric_limits<double>::infinity();
  bool any_fit = false;
  for (Eigen::Index row = 0; row < phi.values.rows(); ++row) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    bool flat = true;
    for (const std::size_t k : small) {
      const double v = std::abs(phi.values(row, static_cast<Eigen::Index>(k)));
      if (v >= 1e-14) flat = false;
      if (v == 0.0) continue;
      const double lx = std::log(std::abs(phi.xi.at(k)));
      const double ly = std::log(v);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
    if (flat) {
      ++r.flat_rows;
      continue;
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    const double slope = n >= 2 && denom > 0.0 ? (static_cast<double>(n) * sxy - sx * sy) / denom
                                               : 0.0;
    if (row == 0) r.slope = slope;
    if (slope < r.min_slope) {
      r.min_slope = slope;
      r.min_slope_row = static_cast<std::size_t>(row);
    }
    any_fit = true;
  }
  r.flat = !any_fit;
  if (r.flat) {
    r.min_slope = 0.0;
    r.pass = true;
  } else {
    r.pass = r.min_slope >= 1.5;
  }
  return r;
}

ShootingResult shooting_oracle(const ManifoldProblem& problem, double s, double xi,
                               const ShootingSearch& search) {
  const auto& g = problem.growth();
  const double t_esc = search.t_escape > 0.0 ? search.t_escape : problem.cfg.t_max;
  if (!(t_esc > s)) throw PreconditionError("escape time must exceed the base time");
  if (!(search.eta_lo < search.eta_hi)) throw PreconditionError("bracket must satisfy lo < hi");

  const double step = problem.cfg.t_step;
  const auto n = static_cast<std::size_t>(std::ceil((t_esc - s) / step - 1e-9));
  std::vector<double> nodes(n + 1);
  for (std::size_t i = 0; i < n; ++i) nodes[i] = s + static_cast<double>(i) * step;
  nodes[n] = t_esc;

  const double endpoints[] = {s, t_esc};
  const double growth_norm = std::pow(g(t_esc) / g(s), -problem.spec.b);
  auto classify = [&](double eta) {
    const SemiflowSample traj = integrate_nonlinear(problem.system, problem.f, s,
                                                    PlanarState(xi, eta), endpoints, search.ode);
    const double y = traj.escaped ? traj.escape_state(1) : traj.states.back()(1);
    const double normalised = traj.escaped ? y : y * growth_norm;
    return (normalised > 0.0) - (normalised < 0.0);
  };

  double lo = search.eta_lo;
  double hi = search.eta_hi;
  int sign_lo = classify(lo);
  const int sign_hi = classify(hi);
  ShootingResult r;
  r.t_escape = t_esc;
  if (sign_lo == 0 || sign_hi == 0) {
    r.eta = sign_lo == 0 ? lo : hi;
  } else {
    if (sign_lo == sign_hi) {
      throw PreconditionError("shooting bracket shows no sign change; widen [eta_lo, eta_hi]");
    }
    while (hi - lo > search.tolerance && r.bisections < search.max_bisections) {
      const double mid = 0.5 * (lo + hi);
      const int sign_mid = classify(mid);
      ++r.bisections;
      if (sign_mid == 0) {
        lo = hi = mid;
        break;
      }
      if (sign_mid == sign_lo) {
        lo = mid;
        sign_lo = sign_mid;
      } else {
        hi = mid;
      }
    }
    r.eta = 0.5 * (lo + hi);
  }
  r.bracket_width = hi - lo;

  const SemiflowSample traj =
      integrate_nonlinear(problem.system, problem.f, s, PlanarState(xi, r.eta), nodes, search.ode);
  const double C = problem.C();
  const double slack_eta = std::max(r.bracket_width, search.tolerance);
  r.envelope_ratio = 0.0;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const double t = traj.times[i];
    const double envelope = 2.0 * C * decay_envelope(problem, t, s, 1.0) * std::abs(xi) +
                            4.0 * slack_eta * problem.system.V(t, s);
    r.envelope_ratio = std::max(r.envelope_ratio, std::abs(traj.states[i](1)) / envelope);
  }
  r.contract_ok = !traj.escaped && r.envelope_ratio <= 1.0;
  return r;
}

}  // namespace mumanifold
