// Carleman weight family θ = e^{λφ}, φ = e^{μψ}, ψ = ψ̂/‖ψ̂‖_∞ + b² − s², the
// three weighted estimates it supports (elliptic, local-energy, parabolic),
// the lift of resolvent data into the coupled elliptic-parabolic system, and
// the interpolation inequalities over X = (−2,2)×Ω.
//
// θ² overflows double for moderate (μ, λ); every weighted quadrature is
// computed with θ² rescaled by its global maximum. Both sides of each
// inequality share the factor, so the empirical constants are unaffected.
#pragma once

#include "wpl/geometry.hpp"
#include "wpl/operators.hpp"
#include "wpl/spectral.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace wpl {

// b = √(1 + ln(2+e^μ)/μ), b₀ = √(b² − ln((1+e^μ)/e^μ)/μ); needs μ > ln 2.
double carleman_b(double mu);
double carleman_b0(double mu);

// Tensor grid over (−s_half, s_half) × Ω with the regions of §4:
// X = (−2,2)×Ω, Y = (−1,1)×Ω, X* = (−2,2)×(ω_c ∩ ω_d).
class SpaceTimeGrid {
 public:
  SpaceTimeGrid(double s_half, int s_count, Grid space, SubdomainChain chain);

  double s_half() const { return s_half_; }
  int s_count() const { return s_count_; }
  double ds() const { return ds_; }
  const Grid& space() const { return space_; }
  const SubdomainChain& chain() const { return chain_; }

  double s_coord(int j) const { return -s_half_ + (j + 1) * ds_; }
  Eigen::Index num_points() const {
    return static_cast<Eigen::Index>(s_count_) * space_.num_interior();
  }
  Eigen::Index flat(int j, int i) const {
    return static_cast<Eigen::Index>(j) * space_.num_interior() + i;
  }
  double cell_volume() const { return ds_ * space_.cell_volume(); }
  bool in_Y(int j) const { return std::abs(s_coord(j)) < 1.0; }
  bool x_in(const Box& box, int i) const { return box.contains1d(space_.coord(0, i)); }

 private:
  double s_half_ = 0.0;
  int s_count_ = 0;
  double ds_ = 0.0;
  Grid space_;
  SubdomainChain chain_;
};

// Space-time complex samples, s-major layout matching SpaceTimeGrid::flat.
using STField = Eigen::VectorXcd;

struct CarlemanWeightSet {
  double mu = 0.0;
  double lambda = 0.0;
  double b = 0.0;
  double b0 = 0.0;
  VectorR psi, phi, ell;                          // samples over the grid
  VectorR ell_s, ell_x, ell_ss, ell_xx, ell_xs;   // closed-form derivatives
  double ell_max = 0.0;
  VectorR theta_sq;  // exp(2(ℓ − ℓ_max)); shared rescale of θ²
  bool band_lower_ok = false;  // φ ≥ 2+e^μ on |s| ≤ 1
  bool band_upper_ok = false;  // φ ≤ 1+e^μ on b₀ ≤ |s| ≤ b
};

CarlemanWeightSet build_weights(const SpaceTimeGrid& grid, const WeightBase& base, double mu,
                                double lambda);

// Truncated double sine series with seeded coefficients, vanishing on the
// whole space-time boundary, normalized to unit discrete H¹.
STField random_test_function(const SpaceTimeGrid& grid, std::uint64_t seed, int modes);

struct InequalityRow {
  double mu = 0.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  std::vector<double> rhs_terms;
  double c_emp = 0.0;
  bool pass = true;
};

struct InequalityReport {
  std::string kind;
  std::vector<std::string> rhs_labels;
  std::vector<InequalityRow> rows;
  bool pass = true;
  std::string flag;
  std::string to_csv() const;
};

struct VerifierConfig {
  double gamma = 1.0;
  double beta = 2.0;  // ≥ 2
  int cutoff_index = 0;  // j of η_{j+1}
  int phi_power = 1;     // k
  std::vector<double> mu_grid{2.0, 3.0};
  std::vector<double> lambda_grid{8.0, 16.0, 32.0, 64.0};
  std::vector<double> eps_grid;  // empty: 12 log-spaced in [0.05, 5]
  std::uint64_t seed = 1;
  int modes = 6;
  int num_test_functions = 50;
};

std::vector<double> default_eps_grid();

// Lemma-style estimates; each returns one report row with the empirical
// constant. All sides are quadratic in the test function, so C_emp is
// scaling-invariant.
InequalityRow verify_elliptic_carleman(const STField& p, const SpaceTimeGrid& grid,
                                       const CarlemanWeightSet& weights, const Box& omega0);
InequalityRow verify_local_energy(const STField& q, const SpaceTimeGrid& grid,
                                  const CarlemanWeightSet& weights, const VerifierConfig& cfg);
InequalityRow verify_parabolic_carleman(const STField& q, const SpaceTimeGrid& grid,
                                        const CarlemanWeightSet& weights, double gamma,
                                        const Box& omega1);

// Lifted data p = e^{iλs}y⁰, q = e^{iλs}z⁰, w = (iλ − Δ)q of the coupled
// elliptic-parabolic system, with sources matching the resolvent data.
struct EPSystemData {
  SpaceTimeGrid grid;
  Complex lambda;
  int alpha = 1;
  VectorC y0, z0;
  STField p, q, w;
  STField p_src, w_src;
  RealField c, d;
  std::array<double, 3> residuals{0.0, 0.0, 0.0};
};

EPSystemData lift_resolvent_data(const ResolventSolveRecord& record, const ProblemConfig& config,
                                 const SpaceTimeGrid& grid);

// Relative residuals of the three equations; `stencil_s` replaces the exact
// e^{iλs} s-derivatives with centered differences (for refinement studies).
std::array<double, 3> ep_system_residuals(const EPSystemData& data, bool stencil_s);

struct InterpolationResult {
  std::vector<double> eps;
  std::vector<double> c_of_eps;
  std::vector<double> group1_weight;  // C(ε)·e^{C(ε)/ε}
  std::vector<double> group2_weight;  // C(ε)·e^{−2/ε}
  double lhs = 0.0;
  double group1 = 0.0;
  double group2 = 0.0;
  double c_star = 0.0;
  double c_star_eps = 0.0;
  bool tradeoff_ok = false;
  bool vacuous = false;
  bool pass = false;
};

// Theorem-4.1 (α=1, observes p, p_s on X*) or Theorem-4.2 (α=0, observes
// q, q_s) inequality: per ε, the smallest C with
//   LHS ≤ C e^{C/ε}·(sources + observation) + C e^{−2/ε}·(global norms).
InterpolationResult verify_interpolation(const EPSystemData& data, const VerifierConfig& cfg);

struct ImEstimateRow {
  Complex lambda;
  double lhs = 0.0;
  std::array<double, 4> rhs_terms{0.0, 0.0, 0.0, 0.0};
  double c_min = 0.0;
  double coupling_im = 0.0;  // Im ∫ c (z⁰ȳ⁰ + y⁰z̄⁰), identically zero
  bool vacuous = false;
};

ImEstimateRow check_imaginary_part_estimate(const ResolventSolveRecord& record,
                                            const ProblemConfig& config);

}  // namespace wpl
