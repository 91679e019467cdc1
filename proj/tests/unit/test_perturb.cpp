#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "mumanifold/errors.hpp"
#include "mumanifold/growth.hpp"
#include "mumanifold/perturb.hpp"
#include "mumanifold/quadrature.hpp"

using namespace mumanifold;

namespace {

std::vector<double> times(double t1, double step) {
  std::vector<double> out;
  for (int i = 0; i * step <= t1 + 1e-12; ++i) out.push_back(i * step);
  return out;
}

const GrowthRate& poly() {
  static const GrowthRate g = make_growth(GrowthKind::polynomial);
  return g;
}

}  // namespace

TEST(Huber, PiecewiseValues) {
  EXPECT_EQ(huber(0.0), 0.0);
  EXPECT_EQ(huber(0.5), 0.125);
  EXPECT_EQ(huber(-0.5), 0.125);
  EXPECT_EQ(huber(2.0), 1.5);
  EXPECT_EQ(huber(-2.0), 1.5);
  EXPECT_EQ(huber(1.0), 0.5);
}

TEST(Shape, HuberSwapEvaluation) {
  const auto f = make_perturbation(poly(), 0.2, 0.01, ShapeKind::huber_swap);
  const PlanarState h = f.shape(PlanarState(2.0, 0.5));
  EXPECT_EQ(h(0), 0.125);
  EXPECT_EQ(h(1), 1.5);
  EXPECT_EQ(f.shape(PlanarState::Zero()), PlanarState::Zero());
  EXPECT_LE(finite_difference_jacobian(f, 1.0, PlanarState::Zero()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Shape, ZeroShapeVanishes) {
  const auto f = make_perturbation(poly(), 0.2, 0.3, ShapeKind::zero);
  EXPECT_TRUE(f.is_zero());
  EXPECT_EQ(f(4.0, PlanarState(1.0, -7.0)), PlanarState::Zero());
}

TEST(Shape, ParseNames) {
  EXPECT_EQ(parse_shape("huber_swap"), ShapeKind::huber_swap);
  EXPECT_EQ(parse_shape("zero"), ShapeKind::zero);
  EXPECT_EQ(to_string(ShapeKind::zero), "zero");
  EXPECT_THROW(parse_shape("cubic"), PreconditionError);
}

TEST(Perturbation, Envelope) {
  const auto f = make_perturbation(poly(), 0.2, 0.01, ShapeKind::huber_swap);
  EXPECT_NEAR(f.envelope(3.0), 0.01 * std::pow(4.0, -1.6), 1e-16);
  EXPECT_EQ(f.with_delta(0.0).envelope(3.0), 0.0);
  EXPECT_TRUE(f.with_delta(0.0).is_zero());
  EXPECT_NEAR(f.with_delta(0.02).envelope(3.0), 2.0 * f.envelope(3.0), 1e-16);
}

TEST(Perturbation, RejectsNegativeDelta) {
  EXPECT_THROW(make_perturbation(poly(), 0.2, -0.1, ShapeKind::huber_swap), PreconditionError);
  EXPECT_THROW(make_perturbation(poly(), -0.2, 0.1, ShapeKind::huber_swap), PreconditionError);
  EXPECT_THROW(make_perturbation(poly(), 0.2, 0.1, ShapeKind::custom), PreconditionError);
  const auto f = make_perturbation(poly(), 0.2, 0.1, ShapeKind::huber_swap);
  EXPECT_THROW(f.with_delta(-1.0), PreconditionError);
}

TEST(CheckPerturbation, ZeroShapePasses) {
  const auto f = make_perturbation(poly(), 0.2, 0.01, ShapeKind::zero);
  const auto r = check_perturbation(f, times(10.0, 1.0), default_samples(30));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.lipschitz, 0.0);
  EXPECT_EQ(r.jacobian_lipschitz, 0.0);
}

TEST(CheckPerturbation, HuberSwapPassesOnBallOfRadiusTwo) {
  const auto f = make_perturbation(poly(), 0.2, 0.01, ShapeKind::huber_swap);
  const auto r = check_perturbation(f, times(10.0, 0.5), default_samples(100, 2.0));
  EXPECT_TRUE(r.pass) << (r.failures.empty() ? "" : r.failures.front());
  EXPECT_LE(r.lipschitz, 1.0 + 1e-6);
  EXPECT_LE(r.jacobian_bound, 1.0 + 1e-6);
  EXPECT_LE(r.jacobian_lipschitz, 1.0 + 1e-6);
  EXPECT_EQ(r.origin_value, 0.0);
  EXPECT_LE(r.origin_jacobian, 1e-7);
}

TEST(CheckPerturbation, HuberSwapGlobalBoundsForAnyScale) {
  for (const auto* spec : {"poly", "exp", "log"}) {
    for (double delta : {1e-4, 0.3}) {
      const auto f = make_perturbation(parse_growth(spec), 0.1, delta, ShapeKind::huber_swap);
      const auto r = check_perturbation(f, times(50.0, 5.0), default_samples(200, 5.0));
      EXPECT_TRUE(r.pass) << spec << " delta=" << delta;
    }
  }
}

TEST(CheckPerturbation, UnclippedSquareFails) {
  const auto f = make_perturbation(poly(), 0.2, 0.01, ShapeKind::custom, [](const PlanarState& v) {
    return PlanarState(v(1) * v(1), v(0) * v(0));
  });
  const auto r = check_perturbation(f, times(2.0, 1.0), default_samples(60, 10.0));
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.jacobian_bound, 1.0);
  EXPECT_GT(std::abs(r.worst_jacobian.u(0)) + std::abs(r.worst_jacobian.u(1)), 0.5);
  EXPECT_FALSE(r.failures.empty());
}

TEST(CheckPerturbation, NonzeroAtOriginFails) {
  const auto f = make_perturbation(poly(), 0.2, 0.01, ShapeKind::custom, [](const PlanarState& v) {
    return PlanarState(huber(v(1)) + 0.1, huber(v(0)));
  });
  const auto r = check_perturbation(f, times(1.0, 1.0), default_samples(10));
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.origin_value, 0.0);
}

TEST(CheckPerturbation, LinearAtOriginFails) {
  const auto f = make_perturbation(poly(), 0.2, 0.01, ShapeKind::custom, [](const PlanarState& v) {
    return PlanarState(0.5 * v(1), 0.0);
  });
  const auto r = check_perturbation(f, times(1.0, 1.0), default_samples(10));
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.origin_jacobian, 0.1);
}

TEST(CheckPerturbation, EmptyInputsReported) {
  const auto f = make_perturbation(poly(), 0.2, 0.01, ShapeKind::huber_swap);
  const std::vector<double> none;
  EXPECT_FALSE(check_perturbation(f, none, default_samples(5)).pass);
}

TEST(Samples, DeterministicAndInsideBall) {
  const auto a = default_samples(200, 5.0);
  const auto b = default_samples(200, 5.0);
  ASSERT_EQ(a.size(), 200u);
  EXPECT_EQ(a, b);
  for (const auto& v : a) EXPECT_LE(std::abs(v(0)) + std::abs(v(1)), 5.0 + 1e-12);
  EXPECT_NE(default_samples(10, 5.0, 3), default_samples(10, 5.0, 4));
}

TEST(DeltaMax, ReferenceValues) {
  const auto d = delta_max(1.0, 2.0, 0.1, -1.0, 1.0);
  EXPECT_NEAR(d.image_derivative, 0.05, 1e-15);
  EXPECT_NEAR(d.image_derivative_lipschitz, 1.0 / 70.0, 1e-15);
  EXPECT_NEAR(d.inner_contraction, 0.1, 1e-15);
  EXPECT_NEAR(d.pair_distance, 0.2 / 3.0, 1e-15);
  EXPECT_NEAR(d.graph_derivative, 0.55, 1e-15);
  EXPECT_NEAR(d.graph_derivative_lipschitz, 2.2 / 28.0, 1e-15);
  EXPECT_NEAR(d.outer_contraction, 2.2 / 6.0, 1e-15);
  EXPECT_NEAR(d.delta_max, 1.0 / 70.0, 1e-15);
  EXPECT_EQ(d.binding, "image_derivative_lipschitz");
  EXPECT_EQ(d.named().size(), 7u);
}

TEST(DeltaMax, LargeClassConstantLimit) {
  const auto d = delta_max(1.0, 1e12, 0.1, -1.0, 1.0);
  EXPECT_NEAR(d.image_derivative, d.inner_contraction, 1e-12);
}

TEST(DeltaMax, MonotoneInClassConstant) {
  EXPECT_LE(delta_max(1.0, 8.0, 0.2, -1.0, 1.0).delta_max, delta_max(1.0, 4.0, 0.2, -1.0, 1.0).delta_max);
  EXPECT_LE(delta_max(1.0, 4.0, 0.2, -1.0, 1.0).delta_max, delta_max(1.0, 2.0, 0.2, -1.0, 1.0).delta_max);
}

TEST(DeltaMax, RejectsInvalidParameters) {
  EXPECT_THROW(delta_max(1.0, 1.0, 0.1, -1.0, 1.0), PreconditionError);
  EXPECT_THROW(delta_max(0.5, 2.0, 0.1, -1.0, 1.0), PreconditionError);
  EXPECT_THROW(delta_max(1.0, 2.0, 0.0, -1.0, 1.0), PreconditionError);
  EXPECT_THROW(delta_max(1.0, 2.0, 0.5, -0.5, 0.0), PreconditionError);
  EXPECT_THROW(delta_max(1.0, 2.0, 0.1, 0.5, 1.0), PreconditionError);
}

TEST(DeltaMax, AllPositiveOnRandomAdmissibleParameters) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 500; ++n) {
    const double D = 1.0 + 3.0 * u(rng);
    const double C = D * (1.0 + 0.01 + 3.0 * u(rng));
    const double a = -0.05 - 3.0 * u(rng);
    const double eps = 0.01 + u(rng);
    const double b = std::max(0.0, a + eps) + 0.01 + u(rng);
    const auto d = delta_max(D, C, eps, a, b);
    double expected = std::numeric_limits<double>::infinity();
    for (const auto& [name, v] : d.named()) {
      EXPECT_GT(v, 0.0) << name;
      expected = std::min(expected, v);
    }
    EXPECT_EQ(d.delta_max, expected);
  }
}

TEST(Envelope, TailIntegralMatchesQuadrature) {
  const double eps = 0.2;
  const double delta = 0.01;
  for (const auto* spec : {"poly", "exp"}) {
    const GrowthRate g = parse_growth(spec);
    const auto f = make_perturbation(g, eps, delta, ShapeKind::huber_swap);
    for (double s : {0.0, 2.0, 10.0}) {
      const double closed = envelope_tail_integral(g, eps, delta, s);
      boost::math::quadrature::exp_sinh<double> rule;
      const double quad = rule.integrate(
          [&](double r) {
            const double v = f.envelope(r);
            return std::isfinite(v) ? v : 0.0;
          },
          s, std::numeric_limits<double>::infinity(), 1e-10);
      EXPECT_NEAR(quad, closed, 1e-6 * closed) << spec << " s=" << s;
    }
  }
  EXPECT_THROW(envelope_tail_integral(poly(), 0.0, 0.1, 0.0), PreconditionError);
}

TEST(Envelope, TruncatedQuadratureApproachesClosedForm) {
  const double eps = 0.2;
  const GrowthRate g = make_growth(GrowthKind::exponential);
  const auto f = make_perturbation(g, eps, 1.0, ShapeKind::huber_swap);
  const int n = 8000;
  const double T = 80.0;
  std::vector<double> v(n + 1);
  for (int i = 0; i <= n; ++i) v[i] = f.envelope(T * i / n);
  const double closed = envelope_tail_integral(g, eps, 1.0, 0.0);
  EXPECT_NEAR(integral(v, T / n, Quadrature::simpson), closed, 1e-6 * closed);
}
