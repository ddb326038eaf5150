#include "wpl/spectral.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace wpl;

namespace {

const double kPi = std::acos(-1.0);

VectorC sine_mode(const Grid& g, int k) {
  VectorC v(g.num_interior());
  for (int i = 0; i < g.count(0); ++i) {
    v[i] = std::sin(k * kPi * g.coord(0, i) / g.extent(0));
  }
  return v;
}

ProblemConfig uncoupled(const Grid& g) {
  ProblemConfig config;
  config.grid = g;
  config.alpha = 1;
  config.c = build_coefficient(g, g.domain_box(), 0.0, CoefficientProfile::ConstantOnDomain);
  config.d = build_coefficient(g, g.domain_box(), 0.0, CoefficientProfile::ConstantOnDomain);
  return config;
}

ProblemConfig damped_coupled(const Grid& g, int alpha) {
  ProblemConfig config;
  config.grid = g;
  config.alpha = alpha;
  config.c = build_coefficient(g, Box::interval(1.0, 2.4), 0.75,
                               CoefficientProfile::PlateauWithSkirt);
  config.d = build_coefficient(g, Box::interval(1.2, 2.6), 1.0,
                               CoefficientProfile::PlateauWithSkirt);
  config.c_floor = 0.75;
  config.d_floor = 1.0;
  config.chain = make_chain_auto(g, Box::interval(1.0, 2.4), Box::interval(1.2, 2.6));
  return config;
}

double discrete_nu(const Grid& g, int k) {
  const double h = g.spacing(0);
  return 2.0 / h * std::sin(0.5 * k * h * kPi / g.extent(0));
}

bool has_eigenvalue_near(const std::vector<EigenPair>& pairs, Complex target, double tol) {
  return std::any_of(pairs.begin(), pairs.end(), [&](const EigenPair& p) {
    return std::abs(p.lambda - target) <= tol * (1.0 + std::abs(target));
  });
}

}  // namespace

TEST_CASE("shift-invert finds the wave/plate doublet near 1.2i") {
  const Grid g = Grid::line(kPi, 400);
  const BalancedSystem system(uncoupled(g));
  const auto pairs = eigenpairs_near(system, Complex(0.0, 1.2), 4);
  REQUIRE(pairs.size() >= 2);
  const double nu1 = discrete_nu(g, 1);
  // wave k=1 at iν₁ and plate k=1 at iν₁² are distinct discrete eigenvalues
  CHECK(has_eigenvalue_near(pairs, Complex(0.0, nu1), 1e-9));
  CHECK(has_eigenvalue_near(pairs, Complex(0.0, nu1 * nu1), 1e-9));
  for (const auto& pair : pairs) {
    CHECK(pair.converged);
    CHECK(pair.residual <= 1e-8);
  }
}

TEST_CASE("shift-invert near 3.8i sees plate k=2 and wave k=3, k=4") {
  const Grid g = Grid::line(kPi, 400);
  const BalancedSystem system(uncoupled(g));
  const auto pairs = eigenpairs_near(system, Complex(0.0, 3.8), 5);
  const double nu2 = discrete_nu(g, 2);
  const double nu3 = discrete_nu(g, 3);
  const double nu4 = discrete_nu(g, 4);
  CHECK(has_eigenvalue_near(pairs, Complex(0.0, nu2 * nu2), 1e-9));  // plate ≈ 4i
  CHECK(has_eigenvalue_near(pairs, Complex(0.0, nu4), 1e-9));        // wave ≈ 4i
  CHECK(has_eigenvalue_near(pairs, Complex(0.0, nu3), 1e-9));        // wave ≈ 3i
}

TEST_CASE("singular factorizations are reported") {
  // structurally singular operator: factorization fails, solve throws
  SparseMatrixC m(2, 2);
  m.insert(0, 0) = Complex(1.0, 0.0);
  SparseOperator op(std::move(m));
  CHECK_FALSE(op.try_factorize());
  CHECK_THROWS_AS(op.solve(VectorC::Ones(2)), SingularOperatorError);

  // a shift sitting on an analytic eigenvalue is still a regular solve in
  // floats; shift-invert simply converges to that eigenvalue
  const Grid g = Grid::line(kPi, 200);
  const BalancedSystem system(uncoupled(g));
  const double nu1 = discrete_nu(g, 1);
  const auto pairs = eigenpairs_near(system, Complex(0.0, nu1), 2);
  REQUIRE_FALSE(pairs.empty());
  CHECK(std::abs(pairs.front().lambda - Complex(0.0, nu1)) < 1e-9);
  CHECK(pairs.front().residual <= 1e-8);
}

TEST_CASE("resolvent norm equals inverse distance to the skew spectrum") {
  const Grid g = Grid::line(kPi, 400);
  const BalancedSystem system(uncoupled(g));

  // spectrum near 1.5i: wave/plate k=1 at ≈ i, wave k=2 at ≈ 2i → dist = 0.5
  const double norm = resolvent_norm(system, Complex(0.0, 1.5));
  CHECK(norm == doctest::Approx(2.0).epsilon(0.05));

  SUBCASE("conjugation symmetry") {
    const double conj_norm = resolvent_norm(system, Complex(0.0, -1.5));
    CHECK(std::abs(norm - conj_norm) <= 1e-8 * norm);
  }

  SUBCASE("far field") {
    const double far = resolvent_norm(system, Complex(100.0, 0.0));
    const double nu1 = discrete_nu(g, 1);
    const double dist = std::abs(Complex(100.0, 0.0) - Complex(0.0, nu1));
    CHECK(far <= 2.0 / dist);
    CHECK(far >= 0.5 / dist);
  }
}

TEST_CASE("resolvent solve satisfies the first-order reconstruction") {
  const Grid g = Grid::line(kPi, 400);
  const BalancedSystem system(uncoupled(g));

  SUBCASE("zero data gives the zero solution") {
    const StateVector zero(g, 1);
    const auto record = resolvent_solve(system, Complex(0.2, 0.9), zero);
    CHECK(record.solution.pack().norm() == 0.0);
  }

  SUBCASE("Poisson block at lambda = 0") {
    StateVector rhs(g, 1);
    rhs.u = -sine_mode(g, 1);  // f¹ = −sin x
    const auto record = resolvent_solve(system, Complex(0.0, 0.0), rhs);
    // Δy⁰ = f¹ gives y⁰ = sin x up to the discrete eigenvalue correction
    const VectorC expect = sine_mode(g, 1);
    const double h = g.spacing(0);
    CHECK((record.solution.y - expect).norm() / expect.norm() < h * h);
    CHECK(record.reconstruction_err < 1e-10);
    CHECK(record.residual_rel < 1e-10);
  }

  SUBCASE("random shifts leave a tiny residual and consistent norms") {
    const BalancedSystem damped(damped_coupled(g, 1));
    std::uint64_t state = 7;
    auto unif = [&state] {
      state += 0x9E3779B97F4A7C15ull;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      z = z ^ (z >> 31);
      return static_cast<double>(z >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 20; ++trial) {
      const Complex lambda(0.5 - unif(), 4.0 * unif() - 2.0);
      StateVector rhs(g, 1);
      for (int k = 1; k <= 4; ++k) {
        rhs.u += Complex(unif() - 0.5, unif() - 0.5) * sine_mode(g, k);
        rhs.v += Complex(unif() - 0.5, unif() - 0.5) * sine_mode(g, k);
      }
      const auto record = resolvent_solve(damped, lambda, rhs);
      CHECK(record.residual_rel <= 1e-10);
      CHECK(record.reconstruction_err <= 1e-10);
      const double norm = resolvent_norm(damped, lambda);
      CHECK(norm >= record.norm_ratio * (1.0 - 1e-7));
    }
  }
}

TEST_CASE("spectrum sweep: conjugate symmetry and stability") {
  const Grid g = Grid::line(kPi, 300);
  const BalancedSystem system(damped_coupled(g, 1));
  std::vector<Complex> targets;
  for (const double tau : {1.3, 2.1, 3.6, -1.3, -2.1, -3.6}) targets.emplace_back(0.0, tau);
  const SpectrumReport report = spectrum_sweep(system, targets, 6);
  REQUIRE(report.pairs.size() >= 8);

  for (const auto& pair : report.pairs) {
    CHECK(pair.residual <= 1e-8);
    CHECK(pair.lambda.real() <= 1e-8);  // stability under d >= 0
    CHECK(has_eigenvalue_near(report.pairs, std::conj(pair.lambda), 1e-8));
  }
}

TEST_CASE("exclusion region fit") {
  SUBCASE("synthetic eigenvalues recover slope -1") {
    SpectrumReport report;
    for (int k = 1; k <= 12; ++k) {
      EigenPair pair;
      pair.lambda = Complex(-std::exp(-static_cast<double>(k)), static_cast<double>(k));
      pair.converged = true;
      report.pairs.push_back(pair);
    }
    const ExclusionFit fit = scan_exclusion_region(report);
    REQUIRE(fit.ok);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(fit.containment);
    for (const auto& pair : report.pairs) {
      if (std::abs(pair.lambda) <= 1.0) continue;
      CHECK(-pair.lambda.real() >=
            std::exp(-fit.c_excl * std::abs(pair.lambda.imag())) / fit.c_excl);
    }
  }

  SUBCASE("undamped spectrum is refused") {
    SpectrumReport report;
    for (int k = 1; k <= 12; ++k) {
      EigenPair pair;
      pair.lambda = Complex(0.0, static_cast<double>(k));
      pair.converged = true;
      report.pairs.push_back(pair);
    }
    const ExclusionFit fit = scan_exclusion_region(report);
    CHECK_FALSE(fit.ok);
    CHECK(fit.flag == "no decay");
  }

  SUBCASE("too few points is refused") {
    SpectrumReport report;
    for (int k = 1; k <= 5; ++k) {
      EigenPair pair;
      pair.lambda = Complex(-0.1, static_cast<double>(k));
      report.pairs.push_back(pair);
    }
    CHECK_FALSE(scan_exclusion_region(report).ok);
  }
}

TEST_CASE("2D uncoupled spectrum matches the tensor modes") {
  const Grid g = Grid::rectangle(kPi, kPi, 24, 24);
  const BalancedSystem system(uncoupled(g));
  // lowest wave frequency: ν² = ν_x²(1) + ν_y²(1)
  const double h = g.spacing(0);
  const double nu_axis_sq = std::pow(2.0 / h * std::sin(0.5 * h), 2);
  const double omega = std::sqrt(2.0 * nu_axis_sq);
  const auto pairs = eigenpairs_near(system, Complex(0.0, omega + 0.05), 3);
  CHECK(has_eigenvalue_near(pairs, Complex(0.0, omega), 1e-8));
}
