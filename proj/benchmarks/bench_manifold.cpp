#include <benchmark/benchmark.h>

#include "mumanifold/growth.hpp"
#include "mumanifold/linsys.hpp"
#include "mumanifold/manifold.hpp"
#include "mumanifold/perturb.hpp"
#include "mumanifold/verify.hpp"

using namespace mumanifold;

namespace {

ManifoldProblem problem(double t_step, double xi_step) {
  const GrowthRate g = make_growth(GrowthKind::polynomial);
  SolverConfig cfg;
  cfg.t_step = t_step;
  cfg.xi_step = xi_step;
  cfg.C = 2.0;
  cfg.estimate_quadrature = false;
  const double delta = 0.5 * delta_max(1.0, 2.0, 0.2, -1.0, 1.0).delta_max;
  return ManifoldProblem{planar_system(example_system(g, -1.0, 1.0, 0.2)),
                         make_perturbation(g, 0.2, delta, ShapeKind::huber_swap),
                         DichotomySpec{1.0, -1.0, 1.0, 0.2}, cfg};
}

void BM_CheckDichotomy(benchmark::State& state) {
  const auto ex = example_system(make_growth(GrowthKind::polynomial), -1.0, 1.0, 0.2);
  const auto grid = PairGrid::uniform(0.0, 20.0, 0.25);
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_dichotomy(ex, DichotomySpec{1.0, -1.0, 1.0, 0.2}, grid));
  }
}
BENCHMARK(BM_CheckDichotomy)->Unit(benchmark::kMillisecond);

void BM_SolveX(benchmark::State& state) {
  const LyapunovPerronSolver solver(problem(0.05, 0.025));
  const GraphFunction phi = GraphFunction::zero(solver.time_grid(), solver.xi_grid());
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve_x(phi, 0));
}
BENCHMARK(BM_SolveX)->Unit(benchmark::kMillisecond);

void BM_OuterOperator(benchmark::State& state) {
  const LyapunovPerronSolver solver(problem(0.1, 0.05));
  const GraphFunction phi = GraphFunction::zero(solver.time_grid(), solver.xi_grid());
  for (auto _ : state) benchmark::DoNotOptimize(solver.outer_operator(phi));
}
BENCHMARK(BM_OuterOperator)->Unit(benchmark::kMillisecond);

void BM_SolveManifold(benchmark::State& state) {
  const double t_step = 0.1 / static_cast<double>(state.range(0));
  const auto p = problem(t_step, 0.025);
  for (auto _ : state) benchmark::DoNotOptimize(solve_manifold(p));
}
BENCHMARK(BM_SolveManifold)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_ShootingOracle(benchmark::State& state) {
  const auto p = problem(0.1, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(shooting_oracle(p, 0.0, 0.3));
}
BENCHMARK(BM_ShootingOracle)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
