// Eigenvalues of the discrete generator via shift-invert Arnoldi, resolvent
// norms ‖(A−λ)⁻¹‖ in the H metric, resolvent solves, and the spectrum-free
// region fit −Re λ ≥ e^{−C|Im λ|}/C.
//
// All Krylov work runs in the frequency-balanced coordinates of
// BalancedSystem; residuals are reported in that metric (the plate block is
// Δ-weighted exactly as in the H norm), which keeps the bilaplacian scale
// h⁻⁴ out of the floating-point floor.
#pragma once

#include "wpl/operators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wpl {

struct EigenPair {
  Complex lambda;
  VectorC vector;  // original state coordinates
  double residual = 0.0;
  bool converged = false;
};

struct ExclusionFit {
  bool ok = false;
  std::string flag;
  double slope = 0.0;  // of log(−Re λ) versus |Im λ|
  double intercept = 0.0;
  double fit_residual = 0.0;
  double c_excl = 0.0;
  bool containment = false;
  int points_used = 0;
};

struct SpectrumReport {
  std::vector<EigenPair> pairs;  // sorted by (Im λ, Re λ)
  double spectral_abscissa = 0.0;
  ExclusionFit exclusion;
  std::string to_csv() const;  // Re, Im, residual
};

struct EigSolveOptions {
  int krylov_dim = 0;  // 0: choose from count
  int max_polish = 6;
  double residual_tol = 1e-10;
  std::uint64_t seed = 0x9E3779B97F4A7C15ull;
};

// k eigenpairs of A nearest σ: shift-invert Arnoldi with a twice
// re-orthogonalized Krylov basis, then Rayleigh-quotient polishing per pair.
// Pairs that stay above 1e-8 residual are returned flagged.
std::vector<EigenPair> eigenpairs_near(const BalancedSystem& system, Complex sigma, int count,
                                       const EigSolveOptions& opts = {});

// 1/σ_min(A−λ) in the H metric: power iteration on the Gram-weighted normal
// system of (A−λ)⁻¹ with the factorization reused across iterations.
// Returns +inf when the shifted factorization fails (λ on the spectrum).
double resolvent_norm(const BalancedSystem& system, Complex lambda);

struct ResolventSolveRecord {
  Complex lambda;
  StateVector rhs;       // F = (f⁰, f¹, g⁰, g¹)
  StateVector solution;  // U₀ = (y⁰, y¹, z⁰, z¹)
  double residual_rel = 0.0;
  double norm_ratio = 0.0;          // ‖U₀‖_H / ‖F‖_H
  double reconstruction_err = 0.0;  // y¹ = f⁰+λy⁰, z¹ = g⁰+λz⁰ cross-check
};

ResolventSolveRecord resolvent_solve(const BalancedSystem& system, Complex lambda,
                                     const StateVector& rhs);

SpectrumReport spectrum_sweep(const BalancedSystem& system, const std::vector<Complex>& targets,
                              int count_per_target, const EigSolveOptions& opts = {},
                              int threads = 1);

// Fits log(−Re λ) = a + slope·|Im λ| over eigenvalues with Re λ < 0 and
// |λ| > 1, then bisects the smallest C whose region excludes every computed
// eigenvalue; containment is re-verified by direct evaluation.
ExclusionFit scan_exclusion_region(const SpectrumReport& report);

}  // namespace wpl
