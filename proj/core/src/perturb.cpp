#include "mumanifold/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "mumanifold/errors.hpp"

namespace mumanifold {

namespace {

double sum_norm(const PlanarState& v) { return std::abs(v(0)) + std::abs(v(1)); }

double induced_norm(const PlanarJacobian& m) {
  return std::max(std::abs(m(0, 0)) + std::abs(m(1, 0)), std::abs(m(0, 1)) + std::abs(m(1, 1)));
}

}  // namespace

ShapeKind parse_shape(const std::string& name) {
  if (name == "huber_swap") return ShapeKind::huber_swap;
  if (name == "zero") return ShapeKind::zero;
  if (name == "custom") return ShapeKind::custom;
  throw PreconditionError("unknown perturbation shape '" + name + "'");
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::huber_swap:
      return "huber_swap";
    case ShapeKind::zero:
      return "zero";
    case ShapeKind::custom:
      return "custom";
  }
  return "custom";
}

Perturbation::Perturbation(double delta, GrowthRate growth, double eps, ShapeKind kind,
                           Shape shape)
    : delta_(delta),
      growth_(std::move(growth)),
      eps_(eps),
      kind_(kind),
      shape_(std::move(shape)) {}

double Perturbation::envelope(double t) const {
  if (delta_ == 0.0) return 0.0;
  return delta_ * growth_.derivative(t) * std::pow(growth_(t), -3.0 * eps_ - 1.0);
}

Perturbation Perturbation::with_delta(double delta) const {
  if (!(delta >= 0.0)) throw PreconditionError("perturbation scale delta must be >= 0");
  Perturbation copy = *this;
  copy.delta_ = delta;
  return copy;
}

Perturbation make_perturbation(const GrowthRate& g, double eps, double delta, ShapeKind kind,
                               Perturbation::Shape shape) {
  if (!(delta >= 0.0)) throw PreconditionError("perturbation scale delta must be >= 0");
  if (!(eps >= 0.0)) throw PreconditionError("envelope exponent eps must be >= 0");
  switch (kind) {
    case ShapeKind::huber_swap:
      return Perturbation(delta, g, eps, kind, [](const PlanarState& v) {
        return PlanarState(huber(v(1)), huber(v(0)));
      });
    case ShapeKind::zero:
      return Perturbation(delta, g, eps, kind,
                          [](const PlanarState&) { return PlanarState::Zero().eval(); });
    case ShapeKind::custom:
      if (!shape) throw PreconditionError("custom perturbation needs a shape function");
      return Perturbation(delta, g, eps, kind, std::move(shape));
  }
  throw PreconditionError("unknown perturbation shape");
}

PlanarJacobian finite_difference_jacobian(const Perturbation& f, double t, const PlanarState& v,
                                          double step) {
  PlanarJacobian J;
  for (int j = 0; j < 2; ++j) {
    PlanarState plus = v;
    PlanarState minus = v;
    plus(j) += step;
    minus(j) -= step;
    J.col(j) = (f(t, plus) - f(t, minus)) / (2.0 * step);
  }
  return J;
}

PerturbationReport check_perturbation(const Perturbation& f, std::span<const double> t_grid,
                                      std::span<const PlanarState> samples) {
  PerturbationReport r;
  if (t_grid.empty() || samples.empty()) {
    r.pass = false;
    r.failures.push_back("empty time grid or sample set");
    return r;
  }
  constexpr double slack = 1.0 + 1e-6;
  std::vector<PlanarJacobian> jac(samples.size());
  std::vector<PlanarState> val(samples.size());
  for (const double t : t_grid) {
    const double env = f.envelope(t);
    const double scale = env > 0.0 ? env : 1.0;
    const PlanarState origin = PlanarState::Zero();
    r.origin_value = std::max(r.origin_value, sum_norm(f(t, origin)));
    r.origin_jacobian =
        std::max(r.origin_jacobian, induced_norm(finite_difference_jacobian(f, t, origin)) / scale);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      val[i] = f(t, samples[i]);
      jac[i] = finite_difference_jacobian(f, t, samples[i]);
      const double jr = induced_norm(jac[i]) / scale;
      if (jr > r.jacobian_bound) {
        r.jacobian_bound = jr;
        r.worst_jacobian = {t, samples[i], samples[i], jr};
      }
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t k = i + 1; k < samples.size(); ++k) {
        const double d = sum_norm(samples[i] - samples[k]);
        if (d == 0.0) continue;
        const double lr = sum_norm(val[i] - val[k]) / (scale * d);
        if (lr > r.lipschitz) {
          r.lipschitz = lr;
          r.worst_lipschitz = {t, samples[i], samples[k], lr};
        }
        const double jl = induced_norm(jac[i] - jac[k]) / (scale * d);
        if (jl > r.jacobian_lipschitz) {
          r.jacobian_lipschitz = jl;
          r.worst_jacobian_lipschitz = {t, samples[i], samples[k], jl};
        }
      }
    }
  }
  if (r.origin_value != 0.0) r.failures.push_back("f(t, 0) != 0");
  if (r.origin_jacobian > 1e-7) r.failures.push_back("Jacobian at the origin is not zero");
  if (r.jacobian_bound > slack) r.failures.push_back("Jacobian bound exceeded");
  if (r.lipschitz > slack) r.failures.push_back("Lipschitz bound exceeded");
  if (r.jacobian_lipschitz > slack) r.failures.push_back("Jacobian Lipschitz bound exceeded");
  r.pass = r.failures.empty();
  return r;
}

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double out = 0.0;
  while (i > 0) {
    out += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return out;
}

}  // namespace

std::vector<PlanarState> default_samples(std::size_t count, double radius, std::uint64_t skip) {
  std::vector<PlanarState> out;
  out.reserve(count);
  for (std::uint64_t i = skip + 1; out.size() < count; ++i) {
    const PlanarState p(radius * (2.0 * radical_inverse(i, 2) - 1.0),
                        radius * (2.0 * radical_inverse(i, 3) - 1.0));
    if (sum_norm(p) <= radius) out.push_back(p);
  }
  return out;
}

std::vector<std::pair<std::string, double>> DeltaBounds::named() const {
  return {{"image_derivative", image_derivative},
          {"image_derivative_lipschitz", image_derivative_lipschitz},
          {"inner_contraction", inner_contraction},
          {"pair_distance", pair_distance},
          {"graph_derivative", graph_derivative},
          {"graph_derivative_lipschitz", graph_derivative_lipschitz},
          {"outer_contraction", outer_contraction}};
}

DeltaBounds delta_max(double D, double C, double eps, double a, double b) {
  if (!(D >= 1.0)) throw PreconditionError("delta_max needs D >= 1");
  if (!(C > D)) throw PreconditionError("delta_max needs C > D");
  if (!(eps > 0.0)) throw PreconditionError("delta_max needs eps > 0");
  if (!(a < 0.0) || !(b >= 0.0)) throw PreconditionError("delta_max needs a < 0 <= b");
  if (!(a + eps < b)) throw PreconditionError("delta_max needs the spectral gap a + eps < b");
  DeltaBounds r;
  r.D = D;
  r.C = C;
  r.eps = eps;
  r.a = a;
  r.b = b;
  const double gap = std::abs(a - b - 2.0 * eps);
  r.image_derivative = eps * (1.0 / D - 1.0 / C);
  r.image_derivative_lipschitz = 2.0 * eps / (7.0 * C * D);
  r.inner_contraction = eps / D;
  r.pair_distance = 2.0 * eps / (3.0 * D);
  r.graph_derivative = gap / (2.0 * C * D);
  r.graph_derivative_lipschitz = gap / (7.0 * C * C * D);
  r.outer_contraction = gap / (3.0 * C * D);
  r.delta_max = std::numeric_limits<double>::infinity();
  for (const auto& [name, value] : r.named()) {
    if (value < r.delta_max) {
      r.delta_max = value;
      r.binding = name;
    }
  }
  return r;
}

double envelope_tail_integral(const GrowthRate& g, double eps, double delta, double s) {
  if (!(eps > 0.0)) throw PreconditionError("envelope tail integral needs eps > 0");
  return delta * std::pow(g(s), -3.0 * eps) / (3.0 * eps);
}

}  // namespace mumanifold
