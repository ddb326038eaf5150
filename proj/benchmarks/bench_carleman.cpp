#include "wpl/carleman.hpp"
#include "wpl/geometry.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

const double kPi = std::acos(-1.0);

struct CarlemanFixture {
  wpl::Grid grid = wpl::Grid::line(kPi, 121);
  wpl::SubdomainChain chain =
      wpl::make_chain_auto(grid, wpl::Box::interval(1.0, 2.4), wpl::Box::interval(1.2, 2.6));
  wpl::WeightBase base =
      wpl::build_weight_base(grid, kPi / 2.0, 1.0, 1.0, chain.omega(0));
};

void BM_weight_build(benchmark::State& state) {
  CarlemanFixture fx;
  const double mu = 2.0;
  const wpl::SpaceTimeGrid stgrid(wpl::carleman_b(mu), 129, fx.grid, fx.chain);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wpl::build_weights(stgrid, fx.base, mu, 32.0));
  }
}
BENCHMARK(BM_weight_build);

void BM_elliptic_estimate(benchmark::State& state) {
  CarlemanFixture fx;
  const double mu = 2.0;
  const wpl::SpaceTimeGrid stgrid(wpl::carleman_b(mu), 129, fx.grid, fx.chain);
  const wpl::CarlemanWeightSet weights = wpl::build_weights(stgrid, fx.base, mu, 32.0);
  const wpl::STField p = wpl::random_test_function(stgrid, 11, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wpl::verify_elliptic_carleman(p, stgrid, weights, fx.chain.omega(0)));
  }
}
BENCHMARK(BM_elliptic_estimate);

void BM_test_function(benchmark::State& state) {
  CarlemanFixture fx;
  const wpl::SpaceTimeGrid stgrid(wpl::carleman_b(2.0), 129, fx.grid, fx.chain);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(wpl::random_test_function(stgrid, seed++, 6));
  }
}
BENCHMARK(BM_test_function);

}  // namespace
