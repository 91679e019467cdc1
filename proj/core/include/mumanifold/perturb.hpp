#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mumanifold/growth.hpp"

namespace mumanifold {

using PlanarState = Eigen::Vector2d;
using PlanarJacobian = Eigen::Matrix2d;

/// Huber function: x^2/2 for |x| <= 1, |x| - 1/2 otherwise.
inline double huber(double x) {
  const double ax = x < 0.0 ? -x : x;
  return ax <= 1.0 ? 0.5 * x * x : ax - 0.5;
}

enum class ShapeKind { huber_swap, zero, custom };

ShapeKind parse_shape(const std::string& name);
std::string to_string(ShapeKind kind);

/// f(t, v) = delta mu'(t) mu(t)^(-3 eps - 1) h(v) on planar states.
class Perturbation {
 public:
  using Shape = std::function<PlanarState(const PlanarState&)>;

  Perturbation(double delta, GrowthRate growth, double eps, ShapeKind kind, Shape shape);

  double delta() const noexcept { return delta_; }
  double eps() const noexcept { return eps_; }
  ShapeKind kind() const noexcept { return kind_; }
  const GrowthRate& growth() const noexcept { return growth_; }
  bool is_zero() const noexcept { return kind_ == ShapeKind::zero || delta_ == 0.0; }

  /// delta mu'(t) mu(t)^(-3 eps - 1).
  double envelope(double t) const;
  PlanarState shape(const PlanarState& v) const { return shape_(v); }
  PlanarState operator()(double t, const PlanarState& v) const {
    return envelope(t) * shape_(v);
  }

  /// Same perturbation with another scale.
  Perturbation with_delta(double delta) const;

 private:
  double delta_;
  GrowthRate growth_;
  double eps_;
  ShapeKind kind_;
  Shape shape_;
};

/// huber_swap: h(u, v) = (huber(v), huber(u)); zero: h = 0; custom: `shape`.
/// Throws PreconditionError for negative delta or eps, or a missing custom shape.
Perturbation make_perturbation(const GrowthRate& g, double eps, double delta, ShapeKind kind,
                               Perturbation::Shape shape = {});

/// Jacobian of f(t, .) at v by central differences.
PlanarJacobian finite_difference_jacobian(const Perturbation& f, double t, const PlanarState& v,
                                          double step = 1e-5);

struct PerturbationSample {
  double t = 0.0;
  PlanarState u = PlanarState::Zero();
  PlanarState v = PlanarState::Zero();
  double ratio = 0.0;
};

/// Ratios are normalised by the envelope delta mu'(t) mu(t)^(-3 eps - 1);
/// the perturbation passes iff each is <= 1 + 1e-6 and f(t, 0) = 0.
struct PerturbationReport {
  bool pass = true;
  double origin_value = 0.0;        // max ||f(t, 0)||
  double origin_jacobian = 0.0;     // max ||df(t, 0)|| / envelope
  double jacobian_bound = 0.0;      // max ||df(t, u)|| / envelope
  double lipschitz = 0.0;           // max ||f(t,u) - f(t,v)|| / (envelope ||u - v||)
  double jacobian_lipschitz = 0.0;  // max ||df(t,u) - df(t,v)|| / (envelope ||u - v||)
  PerturbationSample worst_jacobian;
  PerturbationSample worst_lipschitz;
  PerturbationSample worst_jacobian_lipschitz;
  std::vector<std::string> failures;
};

PerturbationReport check_perturbation(const Perturbation& f, std::span<const double> t_grid,
                                      std::span<const PlanarState> samples);

/// Low-discrepancy (Halton, bases 2 and 3) points in the sum-norm ball of the
/// given radius. `skip` offsets the sequence and acts as the seed.
std::vector<PlanarState> default_samples(std::size_t count = 200, double radius = 5.0,
                                         std::uint64_t skip = 17);

/// The seven smallness thresholds on delta and their minimum.
struct DeltaBounds {
  double D = 1.0;
  double C = 2.0;
  double eps = 0.0;
  double a = 0.0;
  double b = 0.0;

  double image_derivative = 0.0;           // eps (1/D - 1/C)
  double image_derivative_lipschitz = 0.0; // 2 eps / (7 C D)
  double inner_contraction = 0.0;          // eps / D
  double pair_distance = 0.0;              // 2 eps / (3 D)
  double graph_derivative = 0.0;           // |a - b - 2 eps| / (2 C D)
  double graph_derivative_lipschitz = 0.0; // |a - b - 2 eps| / (7 C^2 D)
  double outer_contraction = 0.0;          // |a - b - 2 eps| / (3 C D)
  double delta_max = 0.0;
  std::string binding;

  std::vector<std::pair<std::string, double>> named() const;
};

/// Throws PreconditionError unless C > D >= 1, eps > 0, a < 0 <= b and
/// a + eps < b.
DeltaBounds delta_max(double D, double C, double eps, double a, double b);

/// delta int_s^inf mu'(r) mu(r)^(-3 eps - 1) dr = delta mu(s)^(-3 eps) / (3 eps).
double envelope_tail_integral(const GrowthRate& g, double eps, double delta, double s);

}  // namespace mumanifold
