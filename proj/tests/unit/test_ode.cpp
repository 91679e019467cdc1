#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mumanifold/errors.hpp"
#include "mumanifold/ode.hpp"

using namespace mumanifold;

TEST(AdaptiveRK4, ExponentialDecay) {
  const std::vector<double> times{0.0, 1.0, 2.5, 5.0};
  const auto traj = integrate_adaptive_rk4<double>([](double, double y) { return -y; }, times, 1.0);
  ASSERT_EQ(traj.states.size(), times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_EQ(traj.times[i], times[i]);
    EXPECT_NEAR(traj.states[i], std::exp(-times[i]), 1e-9);
  }
  EXPECT_FALSE(traj.escaped);
}

TEST(AdaptiveRK4, NonautonomousRotation) {
  using V = Eigen::Vector2d;
  const auto rhs = [](double t, const V& v) { return V(-t * v(1), t * v(0)); };
  const std::vector<double> times{0.0, 3.0};
  const auto traj = integrate_adaptive_rk4<V>(rhs, times, V(1.0, 0.0));
  const double angle = 4.5;
  EXPECT_NEAR(traj.states.back()(0), std::cos(angle), 1e-8);
  EXPECT_NEAR(traj.states.back()(1), std::sin(angle), 1e-8);
}

TEST(AdaptiveRK4, StartNodeIsExact) {
  const std::vector<double> times{2.0};
  const auto traj = integrate_adaptive_rk4<double>([](double, double y) { return y; }, times, 0.7);
  ASSERT_EQ(traj.states.size(), 1u);
  EXPECT_EQ(traj.states[0], 0.7);
}

TEST(AdaptiveRK4, ReportsEscapeWithState) {
  const std::vector<double> times{0.0, 2.0};
  OdeOptions opts;
  opts.escape_norm = 1e6;
  const auto traj =
      integrate_adaptive_rk4<double>([](double, double y) { return y * y; }, times, 1.0, opts);
  EXPECT_TRUE(traj.escaped);
  EXPECT_LT(traj.escape_time, 1.0);
  EXPECT_GT(traj.escape_state, 1e6);
  EXPECT_EQ(traj.states.size(), 1u);
}

TEST(AdaptiveRK4, ManyNodesDoNotShrinkSteps) {
  std::vector<double> times;
  for (int i = 0; i <= 2000; ++i) times.push_back(0.005 * i);
  const auto traj = integrate_adaptive_rk4<double>([](double, double y) { return -y; }, times, 1.0);
  EXPECT_NEAR(traj.states.back(), std::exp(-10.0), 1e-10);
  EXPECT_LE(traj.steps, 2100u);
}
