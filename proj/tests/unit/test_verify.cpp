#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "mumanifold/errors.hpp"
#include "mumanifold/verify.hpp"

using namespace mumanifold;
using namespace mumanifold::testing;

namespace {

const ManifoldProblem& coarse_problem() {
  static const ManifoldProblem p = example_problem(0.5, ShapeKind::huber_swap, coarse_config());
  return p;
}

const ManifoldSolution& coarse_solution() {
  static const ManifoldSolution sol = solve_manifold(coarse_problem());
  return sol;
}

const GraphFunction& coarse_phi() { return coarse_solution().phi; }

double coarse_quadrature_estimate() { return coarse_solution().diagnostics.quadrature_estimate; }

const ManifoldProblem& linear_problem() {
  static const ManifoldProblem p = example_problem(0.0, ShapeKind::zero, coarse_config());
  return p;
}

GraphFunction zero_graph(const ManifoldProblem& p) {
  return GraphFunction::zero(p.cfg.time_grid(), p.cfg.xi_grid());
}

std::vector<double> nodes(double s, double t, double h) {
  std::vector<double> out;
  for (int i = 0; s + i * h <= t + 1e-12; ++i) out.push_back(s + i * h);
  return out;
}

}  // namespace

TEST(IntegrateNonlinear, StableSubspaceInvariantWithoutPerturbation) {
  const auto& p = linear_problem();
  const auto grid = nodes(1.0, 11.0, 0.5);
  const auto s = integrate_nonlinear(p.system, p.f, 1.0, PlanarState(0.4, 0.0), grid);
  ASSERT_EQ(s.states.size(), grid.size());
  EXPECT_EQ(s.states.front(), PlanarState(0.4, 0.0));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(s.states[i](0), p.system.U(grid[i], 1.0) * 0.4, 1e-9);
    EXPECT_EQ(s.states[i](1), 0.0);
  }
}

TEST(IntegrateNonlinear, UnstableComponentFollowsV) {
  const auto& p = linear_problem();
  const auto grid = nodes(0.0, 15.0, 1.0);
  const auto s = integrate_nonlinear(p.system, p.f, 0.0, PlanarState(0.0, 0.01), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = p.system.V(grid[i], 0.0) * 0.01;
    EXPECT_NEAR(s.states[i](1), v, 1e-9 * std::max(1.0, v));
  }
  EXPECT_FALSE(s.escaped);
}

TEST(IntegrateNonlinear, EscapeReportedNotThrown) {
  const auto& p = linear_problem();
  OdeOptions opts;
  opts.escape_norm = 5.0;
  const auto grid = nodes(0.0, 30.0, 1.0);
  const auto s = integrate_nonlinear(p.system, p.f, 0.0, PlanarState(0.0, 1.0), grid, opts);
  EXPECT_TRUE(s.escaped);
  EXPECT_GT(s.escape_time, 0.0);
  EXPECT_LT(s.states.size(), grid.size());
}

TEST(IntegrateNonlinear, GridMustStartAtBase) {
  const auto& p = linear_problem();
  const auto grid = nodes(1.0, 2.0, 0.5);
  EXPECT_THROW(integrate_nonlinear(p.system, p.f, 0.0, PlanarState::Zero(), grid), PreconditionError);
}

TEST(Invariance, ZeroPerturbationResidualIsTiny) {
  const auto& p = linear_problem();
  const auto r = invariance_residual(zero_graph(p), p, {});
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.max_residual, 1e-8);
  EXPECT_EQ(r.excluded, 0u);
  EXPECT_DOUBLE_EQ(r.horizon, 20.0);
  EXPECT_FALSE(r.note.empty());
}

TEST(Invariance, CoarseInstancePassesWithItemisedBudget) {
  InvarianceOptions opts;
  opts.horizon = 20.0;
  opts.quadrature_estimate = coarse_quadrature_estimate();
  const auto r = invariance_residual(coarse_phi(), coarse_problem(), opts);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.max_residual, 1e-3 * 0.5);
  EXPECT_EQ(r.budget.tolerance_term, 10.0 * coarse_problem().cfg.tol_outer);
  EXPECT_GT(r.budget.tail_term, 0.0);
  EXPECT_GT(r.budget.amplification, 1.0);
  EXPECT_NEAR(r.budget.total(),
              r.budget.amplification * (r.budget.tolerance_term + r.budget.quadrature_term +
                                        r.budget.interpolation_term + r.budget.start_tail_term) +
                  r.budget.tail_term,
              1e-18);
  EXPECT_EQ(r.samples.size(), coarse_phi().xi.size());
}

TEST(Invariance, HorizonLimitedToHalfTheGrid) {
  InvarianceOptions opts;
  opts.horizon = 25.0;
  EXPECT_THROW(invariance_residual(coarse_phi(), coarse_problem(), opts), PreconditionError);
}

TEST(Invariance, OutOfRangeSamplesAreExcluded) {
  const auto& p = linear_problem();
  GraphFunction phi = zero_graph(p);
  InvarianceOptions opts;
  opts.horizon = 10.0;
  opts.offset = 1.0;
  auto problem = example_problem(0.5, ShapeKind::huber_swap, coarse_config());
  problem.f = make_perturbation(problem.growth(), kEps, problem.f.delta(), ShapeKind::custom,
                                [](const PlanarState& v) { return PlanarState(100.0 * v(1), 0.0); });
  const auto r = invariance_residual(phi, problem, opts);
  EXPECT_GT(r.excluded, 0u);
  EXPECT_FALSE(r.warning.empty());
}

TEST(NegativeControl, OffManifoldIsMuchWorse) {
  InvarianceOptions opts;
  opts.horizon = 20.0;
  const auto r = negative_control(coarse_phi(), coarse_problem(), 0.1, opts);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.min_ratio, 10.0);
  for (std::size_t k = 0; k < r.on_manifold.samples.size(); ++k) {
    EXPECT_LE(10.0 * r.on_manifold.samples[k].final_residual, r.off_manifold.samples[k].final_residual);
  }
}

TEST(NegativeControl, ZeroOffsetFails) {
  InvarianceOptions opts;
  opts.horizon = 5.0;
  EXPECT_FALSE(negative_control(coarse_phi(), coarse_problem(), 0.0, opts).pass);
}

TEST(XiPairs, DistinctAndDeterministic) {
  const XiGrid xi{0.05, 10};
  const auto a = sample_xi_pairs(xi, 50);
  EXPECT_EQ(a, sample_xi_pairs(xi, 50));
  EXPECT_EQ(a.size(), 50u);
  std::set<std::pair<std::size_t, std::size_t>> seen(a.begin(), a.end());
  EXPECT_EQ(seen.size(), 50u);
  for (const auto& [k, l] : a) {
    EXPECT_LT(k, l);
    EXPECT_LT(l, xi.size());
  }
  EXPECT_EQ(sample_xi_pairs(XiGrid{0.1, 1}, 50).size(), 3u);
  EXPECT_NE(a, sample_xi_pairs(xi, 50, 1));
}

TEST(Decay, ZeroPerturbationBoundedByOne) {
  const auto& p = linear_problem();
  const auto pairs = sample_xi_pairs(p.cfg.xi_grid(), 20);
  const auto r = decay_check(zero_graph(p), p, pairs, {});
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.max_ratio, 1.0 + 1e-8);
  EXPECT_NEAR(r.max_ratio, 1.0, 1e-8);
}

TEST(Decay, CoincidentPairsSkipped) {
  const auto& p = linear_problem();
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{3, 3}};
  const auto r = decay_check(zero_graph(p), p, pairs, {});
  EXPECT_TRUE(r.skipped);
  EXPECT_EQ(r.evaluated, 0u);
  EXPECT_FALSE(r.note.empty());
}

TEST(Decay, CoarseInstanceWithinProofConstants) {
  const auto pairs = sample_xi_pairs(coarse_phi().xi, 30);
  const auto r = decay_check(coarse_phi(), coarse_problem(), pairs, {});
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(r.threshold, 2.0 * kC + 0.05);
  const auto d = derivative_decay_check(coarse_phi(), coarse_problem(), pairs, {});
  EXPECT_TRUE(d.pass);
  EXPECT_DOUBLE_EQ(d.threshold, 2.0 * kC + kC * kC + 0.05);
}

TEST(Decay, DoublingConstantNeverFlipsToFail) {
  const auto pairs = sample_xi_pairs(coarse_phi().xi, 10);
  for (double K : {0.5, 1.0, 2.0, 4.0}) {
    DecayOptions a;
    a.horizon = 10.0;
    a.constant = K;
    DecayOptions b = a;
    b.constant = 2.0 * K;
    const auto ra = decay_check(coarse_phi(), coarse_problem(), pairs, a);
    const auto rb = decay_check(coarse_phi(), coarse_problem(), pairs, b);
    if (ra.pass) EXPECT_TRUE(rb.pass) << "K=" << K;
    EXPECT_EQ(ra.max_ratio, rb.max_ratio);
  }
}

TEST(Tangency, ZeroGraphIsFlat) {
  const auto r = tangency_check(zero_graph(linear_problem()));
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.flat);
  EXPECT_EQ(r.points, 8u);
}

TEST(Tangency, LinearGraphFails) {
  GraphFunction phi = zero_graph(linear_problem());
  for (std::size_t k = 0; k < phi.xi.size(); ++k) phi.values.col(static_cast<Eigen::Index>(k)).setConstant(0.5 * phi.xi.at(k));
  const auto r = tangency_check(phi);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.slope, 1.0, 1e-12);
}

TEST(Tangency, SolvedGraphIsQuadratic) {
  const auto r = tangency_check(coarse_phi());
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.slope, 2.0, 0.05);
  EXPECT_GE(r.min_slope, 1.5);
}

TEST(Tangency, NeedsFourSmallPoints) {
  GraphFunction phi = GraphFunction::zero(TimeGrid{0.0, 1.0, 2}, XiGrid{0.1, 1});
  EXPECT_THROW(tangency_check(phi), PreconditionError);
}

TEST(Shooting, ZeroPerturbationFindsStableSubspace) {
  const auto& p = linear_problem();
  for (double xi : {-0.5, 0.0, 0.3}) {
    const auto r = shooting_oracle(p, 0.0, xi, {});
    EXPECT_LE(std::abs(r.eta), 1e-10);
    EXPECT_TRUE(r.contract_ok);
  }
}

TEST(Shooting, OriginIsFixed) {
  const auto r = shooting_oracle(coarse_problem(), 0.0, 0.0, {});
  EXPECT_LE(std::abs(r.eta), 1e-10);
}

TEST(Shooting, AgreesWithSolvedGraph) {
  for (double xi : {-0.5, 0.3}) {
    const auto r = shooting_oracle(coarse_problem(), 0.0, xi, {});
    EXPECT_LE(r.bracket_width, 1e-10);
    EXPECT_TRUE(r.contract_ok);
    EXPECT_LE(std::abs(r.eta - coarse_phi().evaluate(0.0, xi)), 1e-4);
  }
}

TEST(Shooting, BracketWithoutSignChange) {
  ShootingSearch s;
  s.eta_lo = 0.1;
  s.eta_hi = 0.2;
  EXPECT_THROW(shooting_oracle(coarse_problem(), 0.0, 0.3, s), PreconditionError);
  s.eta_lo = 0.3;
  EXPECT_THROW(shooting_oracle(coarse_problem(), 0.0, 0.3, s), PreconditionError);
}
