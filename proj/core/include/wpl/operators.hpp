// Discrete Dirichlet Laplacian, hinged bilaplacian, the block generator of
// the coupled wave-plate system, and the energy / H-norm machinery.
//
// State layout: U = [y; u; z; v], each block over the interior grid points.
// The generator acts as
//   A U = ( u,
//           Δy − c z − α d u,
//           v,
//           −Δ²z − c y − (1−α) d v )
// with the hinged plate condition z = Δz = 0, so Δ² is exactly the square of
// the Dirichlet Laplacian.
//
// Quadrature is the trapezoid rule over interior points (boundary halves
// vanish with the Dirichlet data), which matches the stencils' summation by
// parts exactly: the dissipation identity below holds to roundoff, not O(h²).
#pragma once

#include "wpl/geometry.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>
#include <optional>
#include <string>

namespace wpl {

using SparseMatrixC = Eigen::SparseMatrix<Complex>;
using VectorC = Eigen::VectorXcd;
using VectorR = Eigen::VectorXd;

class SingularOperatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Square sparse operator with an optional cached LU factorization. The
// assembled matrix is immutable; the factorization cache is lazy and must be
// confined to one worker (copying resets it).
class SparseOperator {
 public:
  SparseOperator() = default;
  explicit SparseOperator(SparseMatrixC mat, bool symmetric = false);
  SparseOperator(const SparseOperator& other);
  SparseOperator& operator=(const SparseOperator& other);
  SparseOperator(SparseOperator&&) = default;
  SparseOperator& operator=(SparseOperator&&) = default;

  Eigen::Index dim() const { return mat_.rows(); }
  const SparseMatrixC& matrix() const { return mat_; }
  bool symmetric() const { return symmetric_; }

  VectorC apply(const VectorC& v) const { return mat_ * v; }
  // Direct solve; factors on first use, throws SingularOperatorError if the
  // factorization fails.
  VectorC solve(const VectorC& rhs) const;
  VectorC solve_adjoint(const VectorC& rhs) const;
  bool try_factorize() const;

  // Coordinate text export: "row col re im" per nonzero.
  std::string to_coordinate_text() const;

 private:
  void ensure_factorized() const;

  SparseMatrixC mat_;
  bool symmetric_ = false;
  mutable std::unique_ptr<Eigen::SparseLU<SparseMatrixC>> lu_;
  mutable bool factorization_failed_ = false;
};

// Four-block state U = (y, u, z, v) with the α flag of the problem.
struct StateVector {
  Grid grid;
  VectorC y, u, z, v;
  int alpha = 1;

  StateVector() = default;
  StateVector(const Grid& g, int a);
  static StateVector zero(const Grid& g, int a) { return StateVector(g, a); }

  Eigen::Index block_size() const { return y.size(); }
  VectorC pack() const;
  static StateVector unpack(const Grid& g, const VectorC& packed, int a);
};

// Problem data: grid, coupling c, damping d, which equation is damped.
struct ProblemConfig {
  Grid grid;
  RealField c;
  RealField d;
  int alpha = 1;  // 1: damping on the wave, 0: on the plate
  double c_floor = 0.0;
  double d_floor = 0.0;
  std::optional<SubdomainChain> chain;
};

// Checks the coefficient floor conditions on the declared supports.
void validate_problem(const ProblemConfig& config);

SparseOperator assemble_laplacian(const Grid& grid);
SparseOperator assemble_bilaplacian(const Grid& grid);
SparseOperator assemble_generator(const ProblemConfig& config);

// ∫|∇y|² by first differences with Dirichlet closure (equals ⟨-Δ_h y, y⟩·vol
// exactly, by summation by parts).
double grad_sq_integral(const Grid& grid, const VectorC& y);
double l2_sq_integral(const Grid& grid, const VectorC& v);

// Energy and norm evaluation with the Laplacian assembled once.
class EnergyEvaluator {
 public:
  EnergyEvaluator(const Grid& grid, RealField c_field);

  // E(U) = ½∫(|∇y|²+|u|²) + ½∫(|Δz|²+|v|²) + ∫ c·Re(y z̄). Not a norm: may be
  // negative for large coupling.
  double energy(const StateVector& state) const;
  // Hermitian form with product(U,U) = 2·E(U); its real part drives the
  // dissipation identity Re⟨A U, U⟩_E = −α∫d|u|² − (1−α)∫d|v|².
  Complex product(const StateVector& a, const StateVector& b) const;
  // ‖U‖_H² = ∫|∇y|² + ∫|u|² + ∫|Δz|² + ∫|v|².
  double h_norm(const StateVector& state) const;

  const SparseOperator& laplacian() const { return lap_; }
  const RealField& coupling() const { return c_; }

 private:
  Grid grid_;
  RealField c_;
  SparseOperator lap_;
  double vol_ = 0.0;
};

double energy(const StateVector& state, const RealField& c_field);
double h_norm(const StateVector& state);
double graph_norm(const StateVector& state, const SparseOperator& generator);
double dissipation_rate(const StateVector& state, const RealField& d_field);

// Gram matrix of the H inner product: vol·diag(−Δ, I, Δ², I). SPD.
SparseOperator h_gram(const Grid& grid);

// Frequency-balanced representation (y, u, ζ, v) with ζ = −Δ_h z. In these
// coordinates the generator applies without any Δ² product, so residuals can
// be evaluated near machine precision even when ‖Δ²‖ ~ h⁻⁴ dwarfs the H-scale
// of the state. Shifted solves factor the original sparse generator and
// refine in balanced coordinates.
class BalancedSystem {
 public:
  explicit BalancedSystem(const ProblemConfig& config);

  const ProblemConfig& config() const { return config_; }
  const Grid& grid() const { return config_.grid; }
  const SparseOperator& generator() const { return gen_; }
  const SparseOperator& laplacian() const { return lap_; }
  Eigen::Index dim() const { return gen_.dim(); }
  double cell_volume() const { return grid().cell_volume(); }

  VectorC to_balanced(const VectorC& state) const;
  VectorC to_original(const VectorC& balanced) const;
  VectorC apply(const VectorC& balanced) const;          // Ã v
  VectorC apply_adjoint(const VectorC& balanced) const;  // Ã^H v
  // Solves (−Δ) x = rhs on a single grid block (SPD, factored once).
  VectorC neglap_solve(const VectorC& rhs) const;

  // ‖·‖ of a balanced vector under the H metric (the ζ and v blocks are
  // already L²-weighted; y carries the gradient form).
  double h_norm_balanced(const VectorC& balanced) const;

  // Owns the LU of (A − λ) and solves (Ã − λ)ṽ = b̃ with iterative refinement
  // in balanced coordinates.
  class ShiftedSolver {
   public:
    ShiftedSolver(const BalancedSystem& sys, Complex lambda);
    bool singular() const { return singular_; }
    Complex shift() const { return lambda_; }
    VectorC solve(const VectorC& rhs_balanced) const;
    VectorC solve_adjoint(const VectorC& rhs_balanced) const;
    // Relative balanced residual of the last solve.
    double last_residual() const { return last_residual_; }

   private:
    const BalancedSystem* sys_;
    Complex lambda_;
    SparseMatrixC shifted_;
    mutable Eigen::SparseLU<SparseMatrixC> lu_;  // adjoint() view is non-const in Eigen
    bool singular_ = false;
    mutable double last_residual_ = 0.0;
  };

  ShiftedSolver shifted(Complex lambda) const { return ShiftedSolver(*this, lambda); }

 private:
  ProblemConfig config_;
  SparseOperator lap_;         // Dirichlet Laplacian (for ζ = −Δz maps)
  SparseOperator gen_;         // original block generator
  SparseOperator lap_solver_;  // −Δ, factored once for ζ → z
};

}  // namespace wpl
