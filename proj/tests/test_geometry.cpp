#include "wpl/geometry.hpp"

#include <doctest.h>

#include <cmath>

using namespace wpl;

namespace {
const double kPi = std::acos(-1.0);
}

TEST_CASE("build_grid spacing and interior points") {
  const Grid g = build_grid(1, {kPi}, {3});
  CHECK(g.spacing(0) == doctest::Approx(kPi / 4.0).epsilon(1e-15));
  CHECK(g.coord(0, 0) == doctest::Approx(kPi / 4.0));
  CHECK(g.coord(0, 1) == doctest::Approx(kPi / 2.0));
  CHECK(g.coord(0, 2) == doctest::Approx(3.0 * kPi / 4.0));

  const Grid fine = build_grid(1, {kPi}, {1000});
  CHECK(fine.spacing(0) == doctest::Approx(kPi / 1001.0).epsilon(1e-15));

  const Grid square = build_grid(2, {1.0, 1.0}, {50, 50});
  CHECK(square.num_interior() == 2500);
}

TEST_CASE("build_grid rejects bad input") {
  CHECK_THROWS_AS(build_grid(1, {kPi}, {2}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, {0.0}, {10}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, {-1.0}, {10}), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(3, {1.0, 1.0, 1.0}, {4, 4, 4}), std::invalid_argument);
}

TEST_CASE("boundary mask marks exactly the boundary nodes") {
  const Grid g = build_grid(2, {1.0, 2.0}, {4, 5});
  const auto& mask = g.boundary_mask();
  const int m0 = g.count(0) + 2;
  const int m1 = g.count(1) + 2;
  REQUIRE(static_cast<int>(mask.size()) == m0 * m1);
  int boundary = 0;
  for (int j = 0; j < m1; ++j) {
    for (int i = 0; i < m0; ++i) {
      const bool expect = i == 0 || i == m0 - 1 || j == 0 || j == m1 - 1;
      CHECK(mask[static_cast<std::size_t>(j) * m0 + i] == (expect ? 1 : 0));
      boundary += expect ? 1 : 0;
    }
  }
  CHECK(boundary == 2 * m0 + 2 * m1 - 4);
}

TEST_CASE("weight base: x(L-x) on (0,pi)") {
  const Grid g = Grid::line(kPi, 51);  // odd count puts pi/2 on the grid
  const Box omega0 = Box::interval(1.2, 2.0);
  const WeightBase base = build_weight_base(g, kPi / 2.0, 1.0, 1.0, omega0);
  CHECK(base.sup_norm == doctest::Approx(kPi * kPi / 4.0).epsilon(1e-15));
  CHECK(base.samples.values.maxCoeff() == doctest::Approx(kPi * kPi / 4.0).epsilon(1e-15));
  // normalized samples peak at exactly 1 when the critical point is a node
  CHECK(base.samples.values.maxCoeff() / base.sup_norm == doctest::Approx(1.0).epsilon(1e-15));

  SUBCASE("derivatives match the closed form for p=q=1") {
    for (int i = 0; i < g.count(0); ++i) {
      const double x = g.coord(0, i);
      CHECK(base.dx(x) == doctest::Approx(kPi - 2.0 * x).epsilon(1e-12));
      CHECK(base.dxx(x) == doctest::Approx(-2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("weight base: x^2(1-x) peaks at 2/3") {
  const Grid g = Grid::line(1.0, 40);
  const Box omega0 = Box::interval(0.5, 0.8);
  const WeightBase base = build_weight_base(g, 2.0 / 3.0, 2.0, 1.0, omega0);
  CHECK(base.critical_point == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(base.value(2.0 / 3.0) == doctest::Approx(4.0 / 27.0).epsilon(1e-14));
}

TEST_CASE("weight base rejects a critical point outside omega0") {
  const Grid g = Grid::line(kPi, 20);
  CHECK_THROWS_AS(build_weight_base(g, kPi / 2.0, 1.0, 1.0, Box::interval(0.2, 0.9)),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_weight_base(g, 1.0, 1.0, 1.0, Box::interval(0.5, 1.5)),
                  std::invalid_argument);
}

TEST_CASE("weight base gradient is bounded away from zero off omega0") {
  const Grid g = Grid::line(kPi, 101);
  const Box omega0 = Box::interval(1.35, 1.85);
  const WeightBase base = build_weight_base(g, kPi / 2.0, 1.0, 1.0, omega0);
  // first differences of the samples
  double min_slope = 1e300;
  int argmin = -1;
  for (int i = 0; i + 1 < g.count(0); ++i) {
    const double mid = 0.5 * (g.coord(0, i) + g.coord(0, i + 1));
    if (omega0.contains1d(mid)) continue;
    const double slope =
        std::abs(base.samples.values[i + 1] - base.samples.values[i]) / g.spacing(0);
    if (slope < min_slope) {
      min_slope = slope;
      argmin = i;
    }
  }
  CHECK(min_slope > 0.0);
  // the weakest slope sits against the boundary of omega0
  const double x_argmin = 0.5 * (g.coord(0, argmin) + g.coord(0, argmin + 1));
  const double dist = std::min(std::abs(x_argmin - omega0.lo[0]), std::abs(x_argmin - omega0.hi[0]));
  CHECK(dist <= 1.5 * g.spacing(0));
}

TEST_CASE("coefficients: constant, plateau, zero") {
  const Grid g = Grid::line(kPi, 200);

  const RealField c1 =
      build_coefficient(g, g.domain_box(), 1.0, CoefficientProfile::ConstantOnDomain);
  CHECK(c1.values.minCoeff() == 1.0);
  CHECK(c1.values.maxCoeff() == 1.0);

  const Box support = Box::interval(1.0, 2.0);
  const RealField c2 = build_coefficient(g, support, 2.0, CoefficientProfile::PlateauWithSkirt);
  double min_on_support = 1e300;
  for (int i = 0; i < g.count(0); ++i) {
    if (support.contains1d(g.coord(0, i))) min_on_support = std::min(min_on_support, c2.values[i]);
  }
  CHECK(min_on_support == 2.0);
  CHECK(c2.values.minCoeff() >= 0.0);
  // vanishes outside the 2h skirt
  for (int i = 0; i < g.count(0); ++i) {
    const double x = g.coord(0, i);
    if (x < support.lo[0] - 2.0 * g.spacing(0) || x > support.hi[0] + 2.0 * g.spacing(0)) {
      CHECK(c2.values[i] == 0.0);
    }
  }

  const RealField d0 =
      build_coefficient(g, g.domain_box(), 0.0, CoefficientProfile::ConstantOnDomain);
  CHECK(d0.values.maxCoeff() == 0.0);

  CHECK_THROWS_AS(build_coefficient(g, support, -1.0, CoefficientProfile::PlateauWithSkirt),
                  std::invalid_argument);
}

TEST_CASE("chains nest with 2h margins and cut-offs plateau exactly") {
  const Grid g = Grid::line(kPi, 300);
  const Box omega_c = Box::interval(1.0, 2.4);
  const Box omega_d = Box::interval(1.2, 2.6);
  const SubdomainChain chain = make_chain_auto(g, omega_c, omega_d);
  REQUIRE(chain.omegas.size() == 5);
  CHECK(chain.omega(4).lo[0] == doctest::Approx(1.2));
  CHECK(chain.omega(4).hi[0] == doctest::Approx(2.4));

  const CutoffSet cutoffs = build_cutoffs(g, chain, 1.5973, 1.4960);
  REQUIRE(cutoffs.eta.size() == 5);
  for (int j = 0; j < 4; ++j) {
    const RealField& eta = cutoffs.eta[static_cast<std::size_t>(j)];
    for (int i = 0; i < g.count(0); ++i) {
      const double x = g.coord(0, i);
      if (chain.omega(j).contains1d(x)) CHECK(eta.values[i] == 1.0);
      if (!chain.omega(j + 1).contains1d(x)) CHECK(eta.values[i] == 0.0);
      CHECK(eta.values[i] >= 0.0);
      CHECK(eta.values[i] <= 1.0);
    }
  }
  // center of omega0 sits on the plateau of eta1
  const double omega0_center = chain.omega(0).center()[0];
  int nearest = 0;
  for (int i = 1; i < g.count(0); ++i) {
    if (std::abs(g.coord(0, i) - omega0_center) < std::abs(g.coord(0, nearest) - omega0_center)) {
      nearest = i;
    }
  }
  CHECK(cutoffs.eta[0].values[nearest] == 1.0);

  SUBCASE("temporal profile") {
    CHECK(cutoffs.temporal(0.0) == 1.0);
    CHECK(cutoffs.temporal(1.4959) == 1.0);
    CHECK(cutoffs.temporal(1.5973) == 0.0);
    CHECK(cutoffs.temporal(-1.5973) == 0.0);
    const double mid = cutoffs.temporal(1.54);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
  }

  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(build_cutoffs(g, chain, 1.4, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(build_cutoffs(g, chain, 2.5, 1.2), std::invalid_argument);
    CHECK_THROWS_AS(build_cutoffs(g, chain, 1.5, 0.9), std::invalid_argument);
  }
}

TEST_CASE("auto chain rejects a grid too coarse for the margins") {
  const Grid g = Grid::line(kPi, 12);
  CHECK_THROWS_AS(make_chain_auto(g, Box::interval(1.0, 1.8), Box::interval(1.1, 2.0)),
                  std::invalid_argument);
}

TEST_CASE("field CSV export carries coordinates then values") {
  const Grid g = Grid::line(1.0, 3);
  RealField f(g);
  f.values << 0.5, 1.0, -2.0;
  const std::string csv = field_to_csv(f);
  CHECK(csv.find("x,value\n") == 0);
  CHECK(csv.find("5.0000000000000000e-01") != std::string::npos);
  CHECK(csv.find("-2.0000000000000000e+00") != std::string::npos);
}
