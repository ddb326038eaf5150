#include "wpl/evolution.hpp"
#include "wpl/operators.hpp"
#include "wpl/spectral.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

const double kPi = std::acos(-1.0);

wpl::ProblemConfig damped_problem(int n) {
  wpl::ProblemConfig config;
  config.grid = wpl::Grid::line(kPi, n);
  config.alpha = 1;
  config.c = wpl::build_coefficient(config.grid, wpl::Box::interval(1.0, 2.2), 0.75,
                                    wpl::CoefficientProfile::PlateauWithSkirt);
  config.d = wpl::build_coefficient(config.grid, wpl::Box::interval(1.3, 2.5), 1.0,
                                    wpl::CoefficientProfile::PlateauWithSkirt);
  return config;
}

void BM_laplacian_apply(benchmark::State& state) {
  const wpl::Grid grid = wpl::Grid::line(kPi, static_cast<int>(state.range(0)));
  const wpl::SparseOperator lap = wpl::assemble_laplacian(grid);
  wpl::VectorC v = wpl::VectorC::Ones(grid.num_interior());
  for (auto _ : state) {
    benchmark::DoNotOptimize(lap.apply(v));
  }
}
BENCHMARK(BM_laplacian_apply)->Arg(400)->Arg(1000);

void BM_generator_assembly(benchmark::State& state) {
  const wpl::ProblemConfig config = damped_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(wpl::assemble_generator(config));
  }
}
BENCHMARK(BM_generator_assembly)->Arg(400)->Arg(1000);

void BM_midpoint_step(benchmark::State& state) {
  const wpl::ProblemConfig config = damped_problem(static_cast<int>(state.range(0)));
  const wpl::BalancedSystem system(config);
  const wpl::MidpointStepper stepper(system, 1e-3);
  wpl::StateVector init(config.grid, 1);
  for (int i = 0; i < config.grid.count(0); ++i) {
    init.y[i] = std::sin(config.grid.coord(0, i));
  }
  wpl::VectorC balanced = system.to_balanced(init.pack());
  for (auto _ : state) {
    balanced = stepper.step(balanced);
  }
  benchmark::DoNotOptimize(balanced);
}
BENCHMARK(BM_midpoint_step)->Arg(400)->Arg(1000);

void BM_resolvent_solve(benchmark::State& state) {
  const wpl::ProblemConfig config = damped_problem(static_cast<int>(state.range(0)));
  const wpl::BalancedSystem system(config);
  wpl::StateVector rhs(config.grid, 1);
  for (int i = 0; i < config.grid.count(0); ++i) {
    rhs.u[i] = std::sin(2.0 * config.grid.coord(0, i));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(wpl::resolvent_solve(system, wpl::Complex(0.0, 2.5), rhs));
  }
}
BENCHMARK(BM_resolvent_solve)->Arg(200)->Arg(400);

}  // namespace

BENCHMARK_MAIN();
