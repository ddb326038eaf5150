// Time integration of U' = A U by the implicit midpoint rule, energy /
// dissipation bookkeeping, and decay-model fitting.
#pragma once

#include "wpl/operators.hpp"

#include <string>
#include <vector>

namespace wpl {

struct DecayReport {
  std::vector<double> time;
  std::vector<double> energy;
  std::vector<double> h_norm;
  std::vector<double> ledger;  // ∫₀ᵗ (α∫d|u|² + (1−α)∫d|v|²) ds, trapezoid in t
  double initial_graph_norm = 0.0;
  double max_energy_increase = 0.0;
  std::string to_csv() const;
};

enum class DecayFitMode { Exponential, LogEnvelope };

struct DecayFit {
  bool ok = false;
  std::string flag;
  double value = 0.0;     // LS slope of log‖U‖_H (Exponential) or C_log (LogEnvelope)
  double at_time = 0.0;   // time attaining the envelope max
  double residual = 0.0;  // RMS of the LS fit
};

// Exponential mode fits the tail half of the trace; the log envelope is
// C_log = max_k ‖U(t_k)‖_H · log(2+t_k) / ‖U₀‖_{D(A)}.
DecayFit fit_decay(const DecayReport& report, DecayFitMode mode);

// (I − Δt/2·A) U' = (I + Δt/2·A) U, solved by sparse LU on the original
// block layout with residual refinement in balanced coordinates. The Cayley
// map preserves every quadratic invariant of the flow, so with d = 0 the
// energy is conserved to solver roundoff.
class MidpointStepper {
 public:
  MidpointStepper(const BalancedSystem& system, double dt);
  double dt() const { return dt_; }
  VectorC step(const VectorC& balanced) const;
  VectorC step_back(const VectorC& balanced) const;

 private:
  VectorC advance(const VectorC& balanced, double tau,
                  const Eigen::SparseLU<SparseMatrixC>& lu) const;
  const BalancedSystem* sys_;
  double dt_ = 0.0;
  SparseMatrixC forward_, backward_;  // I − τA, I + τA
  Eigen::SparseLU<SparseMatrixC> lu_forward_, lu_backward_;
};

// Records every step from t = 0 to t_final. Initial data must be real-valued;
// NaN in the state aborts with a diagnostic.
DecayReport simulate(const BalancedSystem& system, const StateVector& initial, double t_final,
                     double dt);

}  // namespace wpl
