#include "wpl/evolution.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace wpl {

std::string DecayReport::to_csv() const {
  std::string out = "t,E,H_norm,ledger\n";
  char buf[160];
  for (std::size_t k = 0; k < time.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.16e,%.16e,%.16e,%.16e\n", time[k], energy[k],
                  h_norm[k], ledger[k]);
    out += buf;
  }
  return out;
}

MidpointStepper::MidpointStepper(const BalancedSystem& system, double dt)
    : sys_(&system), dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("MidpointStepper: dt must be positive");
  const Complex tau(0.5 * dt, 0.0);
  SparseMatrixC eye(system.dim(), system.dim());
  eye.setIdentity();
  forward_ = eye - tau * system.generator().matrix();
  backward_ = eye + tau * system.generator().matrix();
  forward_.makeCompressed();
  backward_.makeCompressed();
  lu_forward_.compute(forward_);
  lu_backward_.compute(backward_);
  if (lu_forward_.info() != Eigen::Success || lu_backward_.info() != Eigen::Success) {
    throw SingularOperatorError("MidpointStepper: factorization failed");
  }
}

VectorC MidpointStepper::advance(const VectorC& balanced, double tau,
                                 const Eigen::SparseLU<SparseMatrixC>& lu) const {
  // rhs = (I + τA)U in balanced coordinates, then solve (I − τA)U' = rhs with
  // refinement against the balanced operator apply.
  const VectorC rhs = balanced + tau * sys_->apply(balanced);
  VectorC x = sys_->to_balanced(lu.solve(sys_->to_original(rhs)));
  const double rhs_norm = rhs.norm();
  for (int round = 0; round < 3; ++round) {
    const VectorC residual = rhs - (x - tau * sys_->apply(x));
    if (residual.norm() <= 1e-13 * rhs_norm) break;
    x += sys_->to_balanced(lu.solve(sys_->to_original(residual)));
  }
  return x;
}

VectorC MidpointStepper::step(const VectorC& balanced) const {
  return advance(balanced, 0.5 * dt_, lu_forward_);
}

VectorC MidpointStepper::step_back(const VectorC& balanced) const {
  return advance(balanced, -0.5 * dt_, lu_backward_);
}

DecayReport simulate(const BalancedSystem& system, const StateVector& initial, double t_final,
                     double dt) {
  if (!(t_final > 0.0)) throw std::invalid_argument("simulate: t_final must be positive");
  const VectorC packed = initial.pack();
  for (Eigen::Index k = 0; k < packed.size(); ++k) {
    if (packed[k].imag() != 0.0) {
      throw std::invalid_argument("simulate: initial data must be real-valued");
    }
  }
  const ProblemConfig& config = system.config();
  EnergyEvaluator evaluator(config.grid, config.c);
  MidpointStepper stepper(system, dt);
  const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));

  DecayReport report;
  report.time.reserve(steps + 1);
  report.energy.reserve(steps + 1);
  report.h_norm.reserve(steps + 1);
  report.ledger.reserve(steps + 1);
  report.initial_graph_norm = graph_norm(initial, system.generator());

  VectorC state = system.to_balanced(packed);
  StateVector original = initial;
  double rate_prev = dissipation_rate(original, config.d);
  double ledger = 0.0;
  report.time.push_back(0.0);
  report.energy.push_back(evaluator.energy(original));
  report.h_norm.push_back(system.h_norm_balanced(state));
  report.ledger.push_back(0.0);

  for (std::size_t k = 1; k <= steps; ++k) {
    state = stepper.step(state);
    if (!state.allFinite()) {
      throw std::runtime_error("simulate: non-finite state at t = " +
                               std::to_string(static_cast<double>(k) * dt));
    }
    original = StateVector::unpack(config.grid, system.to_original(state), config.alpha);
    const double rate = dissipation_rate(original, config.d);
    ledger += 0.5 * dt * (rate_prev + rate);
    rate_prev = rate;
    const double e = evaluator.energy(original);
    report.max_energy_increase =
        std::max(report.max_energy_increase, e - report.energy.back());
    report.time.push_back(static_cast<double>(k) * dt);
    report.energy.push_back(e);
    report.h_norm.push_back(system.h_norm_balanced(state));
    report.ledger.push_back(ledger);
  }
  return report;
}

namespace {

bool trace_decays(const DecayReport& report) {
  if (report.h_norm.size() < 2) return false;
  const double head = report.h_norm.front();
  const double tail = report.h_norm.back();
  return tail < head * (1.0 - 1e-9);
}

}  // namespace

DecayFit fit_decay(const DecayReport& report, DecayFitMode mode) {
  DecayFit fit;
  const std::size_t n = report.time.size();
  if (n < 100) {
    fit.flag = "trace too short";
    return fit;
  }
  if (!trace_decays(report)) {
    fit.flag = "no decay";
    return fit;
  }
  if (mode == DecayFitMode::LogEnvelope) {
    if (report.initial_graph_norm <= 0.0) {
      fit.flag = "zero graph norm";
      return fit;
    }
    double best = -1.0;
    double at = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double val =
          report.h_norm[k] * std::log(2.0 + report.time[k]) / report.initial_graph_norm;
      if (val > best) {
        best = val;
        at = report.time[k];
      }
    }
    fit.ok = true;
    fit.value = best;
    fit.at_time = at;
    return fit;
  }
  // Least squares on log‖U‖_H over the tail half.
  const std::size_t begin = n / 2;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0;
  for (std::size_t k = begin; k < n; ++k) {
    if (!(report.h_norm[k] > 0.0)) continue;
    const double x = report.time[k];
    const double y = std::log(report.h_norm[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 10) {
    fit.flag = "tail too short";
    return fit;
  }
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) {
    fit.flag = "degenerate abscissa";
    return fit;
  }
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;
  double rss = 0.0;
  for (std::size_t k = begin; k < n; ++k) {
    if (!(report.h_norm[k] > 0.0)) continue;
    const double r = std::log(report.h_norm[k]) - (intercept + slope * report.time[k]);
    rss += r * r;
  }
  fit.ok = true;
  fit.value = slope;
  fit.residual = std::sqrt(rss / static_cast<double>(count));
  return fit;
}

}  // namespace wpl
