#include "wpl/operators.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace wpl {

namespace {

using Triplet = Eigen::Triplet<Complex>;

void append_block(std::vector<Triplet>& out, const SparseMatrixC& block,
                  Eigen::Index row0, Eigen::Index col0, Complex scale) {
  for (Eigen::Index outer = 0; outer < block.outerSize(); ++outer) {
    for (SparseMatrixC::InnerIterator it(block, outer); it; ++it) {
      out.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
    }
  }
}

void append_identity(std::vector<Triplet>& out, Eigen::Index n, Eigen::Index row0,
                     Eigen::Index col0, Complex scale) {
  for (Eigen::Index i = 0; i < n; ++i) out.emplace_back(row0 + i, col0 + i, scale);
}

void append_diag(std::vector<Triplet>& out, const VectorR& diag, Eigen::Index row0,
                 Eigen::Index col0, double scale) {
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (diag[i] != 0.0) out.emplace_back(row0 + i, col0 + i, Complex(scale * diag[i], 0.0));
  }
}

}  // namespace

SparseOperator::SparseOperator(SparseMatrixC mat, bool symmetric)
    : mat_(std::move(mat)), symmetric_(symmetric) {
  if (mat_.rows() != mat_.cols()) throw std::invalid_argument("SparseOperator: square only");
  mat_.makeCompressed();
}

SparseOperator::SparseOperator(const SparseOperator& other)
    : mat_(other.mat_), symmetric_(other.symmetric_) {}

SparseOperator& SparseOperator::operator=(const SparseOperator& other) {
  if (this != &other) {
    mat_ = other.mat_;
    symmetric_ = other.symmetric_;
    lu_.reset();
    factorization_failed_ = false;
  }
  return *this;
}

void SparseOperator::ensure_factorized() const {
  if (lu_) return;
  if (factorization_failed_) throw SingularOperatorError("sparse factorization failed");
  auto lu = std::make_unique<Eigen::SparseLU<SparseMatrixC>>();
  lu->compute(mat_);
  if (lu->info() != Eigen::Success) {
    factorization_failed_ = true;
    throw SingularOperatorError("sparse factorization failed");
  }
  lu_ = std::move(lu);
}

VectorC SparseOperator::solve(const VectorC& rhs) const {
  ensure_factorized();
  return lu_->solve(rhs);
}

VectorC SparseOperator::solve_adjoint(const VectorC& rhs) const {
  ensure_factorized();
  return lu_->adjoint().solve(rhs);
}

bool SparseOperator::try_factorize() const {
  try {
    ensure_factorized();
  } catch (const SingularOperatorError&) {
    return false;
  }
  return true;
}

std::string SparseOperator::to_coordinate_text() const {
  std::string out;
  char buf[96];
  for (Eigen::Index outer = 0; outer < mat_.outerSize(); ++outer) {
    for (SparseMatrixC::InnerIterator it(mat_, outer); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%ld %ld %.16e %.16e\n", static_cast<long>(it.row()),
                    static_cast<long>(it.col()), it.value().real(), it.value().imag());
      out += buf;
    }
  }
  return out;
}

StateVector::StateVector(const Grid& g, int a)
    : grid(g),
      y(VectorC::Zero(g.num_interior())),
      u(VectorC::Zero(g.num_interior())),
      z(VectorC::Zero(g.num_interior())),
      v(VectorC::Zero(g.num_interior())),
      alpha(a) {
  if (a != 0 && a != 1) throw std::invalid_argument("StateVector: alpha must be 0 or 1");
}

VectorC StateVector::pack() const {
  const Eigen::Index n = block_size();
  VectorC packed(4 * n);
  packed.segment(0, n) = y;
  packed.segment(n, n) = u;
  packed.segment(2 * n, n) = z;
  packed.segment(3 * n, n) = v;
  return packed;
}

StateVector StateVector::unpack(const Grid& g, const VectorC& packed, int a) {
  StateVector state(g, a);
  const Eigen::Index n = state.block_size();
  if (packed.size() != 4 * n) throw std::invalid_argument("StateVector: size mismatch");
  state.y = packed.segment(0, n);
  state.u = packed.segment(n, n);
  state.z = packed.segment(2 * n, n);
  state.v = packed.segment(3 * n, n);
  return state;
}

void validate_problem(const ProblemConfig& config) {
  if (config.alpha != 0 && config.alpha != 1) {
    throw std::invalid_argument("ProblemConfig: alpha must be 0 or 1");
  }
  const Grid& g = config.grid;
  if (config.c.values.size() != g.num_interior() || config.d.values.size() != g.num_interior()) {
    throw std::invalid_argument("ProblemConfig: coefficient fields off-grid");
  }
  if (!config.c.values.allFinite() || !config.d.values.allFinite()) {
    throw std::invalid_argument("ProblemConfig: non-finite coefficient");
  }
  if (config.c.values.minCoeff() < 0.0 || config.d.values.minCoeff() < 0.0) {
    throw std::invalid_argument("ProblemConfig: coefficients must be nonnegative");
  }
  if (config.chain) {
    validate_chain(g, *config.chain);
    for (Eigen::Index k = 0; k < g.num_interior(); ++k) {
      const auto x = g.point(k);
      if (config.chain->omega_c.contains(x) && config.c.values[k] < config.c_floor - 1e-12) {
        throw std::invalid_argument("ProblemConfig: coupling below floor on ω_c");
      }
      if (config.chain->omega_d.contains(x) && config.d.values[k] < config.d_floor - 1e-12) {
        throw std::invalid_argument("ProblemConfig: damping below floor on ω_d");
      }
    }
  }
}

SparseOperator assemble_laplacian(const Grid& grid) {
  const Eigen::Index n = grid.num_interior();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(n) * 5);
  const double ihx2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
  const double ihy2 = grid.dimension() == 2 ? 1.0 / (grid.spacing(1) * grid.spacing(1)) : 0.0;
  const int nx = grid.count(0);
  const int ny = grid.dimension() == 2 ? grid.count(1) : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Eigen::Index k = grid.flat(i, j);
      double diag = -2.0 * ihx2;
      if (grid.dimension() == 2) diag -= 2.0 * ihy2;
      trips.emplace_back(k, k, Complex(diag, 0.0));
      if (i > 0) trips.emplace_back(k, grid.flat(i - 1, j), Complex(ihx2, 0.0));
      if (i + 1 < nx) trips.emplace_back(k, grid.flat(i + 1, j), Complex(ihx2, 0.0));
      if (grid.dimension() == 2) {
        if (j > 0) trips.emplace_back(k, grid.flat(i, j - 1), Complex(ihy2, 0.0));
        if (j + 1 < ny) trips.emplace_back(k, grid.flat(i, j + 1), Complex(ihy2, 0.0));
      }
    }
  }
  SparseMatrixC mat(n, n);
  mat.setFromTriplets(trips.begin(), trips.end());
  return SparseOperator(std::move(mat), true);
}

SparseOperator assemble_bilaplacian(const Grid& grid) {
  const SparseOperator lap = assemble_laplacian(grid);
  SparseMatrixC sq = (lap.matrix() * lap.matrix()).pruned();
  return SparseOperator(std::move(sq), true);
}

SparseOperator assemble_generator(const ProblemConfig& config) {
  validate_problem(config);
  const Eigen::Index n = config.grid.num_interior();
  const SparseOperator lap = assemble_laplacian(config.grid);
  const SparseMatrixC bilap = (lap.matrix() * lap.matrix()).pruned();

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(lap.matrix().nonZeros()) * 2 + bilap.nonZeros() +
                static_cast<std::size_t>(n) * 6);
  append_identity(trips, n, 0, n, Complex(1.0, 0.0));              // y' = u
  append_block(trips, lap.matrix(), n, 0, Complex(1.0, 0.0));      // u' += Δy
  append_diag(trips, config.c.values, n, 2 * n, -1.0);             // u' -= c z
  if (config.alpha == 1) append_diag(trips, config.d.values, n, n, -1.0);
  append_identity(trips, n, 2 * n, 3 * n, Complex(1.0, 0.0));      // z' = v
  append_block(trips, bilap, 3 * n, 2 * n, Complex(-1.0, 0.0));    // v' -= Δ²z
  append_diag(trips, config.c.values, 3 * n, 0, -1.0);             // v' -= c y
  if (config.alpha == 0) append_diag(trips, config.d.values, 3 * n, 3 * n, -1.0);

  SparseMatrixC mat(4 * n, 4 * n);
  mat.setFromTriplets(trips.begin(), trips.end());
  return SparseOperator(std::move(mat), false);
}

double grad_sq_integral(const Grid& grid, const VectorC& y) {
  const int nx = grid.count(0);
  const int ny = grid.dimension() == 2 ? grid.count(1) : 1;
  const double hx = grid.spacing(0);
  double acc = 0.0;
  // x-direction edges, zero boundary values.
  double sx = 0.0;
  for (int j = 0; j < ny; ++j) {
    Complex prev(0.0, 0.0);
    for (int i = 0; i < nx; ++i) {
      const Complex cur = y[grid.flat(i, j)];
      sx += std::norm(cur - prev);
      prev = cur;
    }
    sx += std::norm(prev);  // edge to the right boundary
  }
  if (grid.dimension() == 1) return sx / hx;
  const double hy = grid.spacing(1);
  acc += sx / (hx * hx) * hx * hy;
  double sy = 0.0;
  for (int i = 0; i < nx; ++i) {
    Complex prev(0.0, 0.0);
    for (int j = 0; j < ny; ++j) {
      const Complex cur = y[grid.flat(i, j)];
      sy += std::norm(cur - prev);
      prev = cur;
    }
    sy += std::norm(prev);
  }
  acc += sy / (hy * hy) * hx * hy;
  return acc;
}

double l2_sq_integral(const Grid& grid, const VectorC& v) {
  return grid.cell_volume() * v.squaredNorm();
}

EnergyEvaluator::EnergyEvaluator(const Grid& grid, RealField c_field)
    : grid_(grid), c_(std::move(c_field)), lap_(assemble_laplacian(grid)),
      vol_(grid.cell_volume()) {
  if (c_.values.size() != grid.num_interior()) {
    throw std::invalid_argument("EnergyEvaluator: coupling field off-grid");
  }
}

double EnergyEvaluator::energy(const StateVector& state) const {
  const VectorC lap_z = lap_.apply(state.z);
  double e = 0.5 * (grad_sq_integral(grid_, state.y) + vol_ * state.u.squaredNorm());
  e += 0.5 * vol_ * (lap_z.squaredNorm() + state.v.squaredNorm());
  double coupling = 0.0;
  for (Eigen::Index k = 0; k < state.y.size(); ++k) {
    coupling += c_.values[k] * (state.y[k] * std::conj(state.z[k])).real();
  }
  return e + vol_ * coupling;
}

Complex EnergyEvaluator::product(const StateVector& a, const StateVector& b) const {
  // Conjugate-linear in the first argument; product(U,U) = 2 E(U).
  const VectorC lap_za = lap_.apply(a.z);
  const VectorC lap_zb = lap_.apply(b.z);
  Complex acc = vol_ * (Complex(-1.0, 0.0) * a.y.dot(lap_.apply(b.y)));
  acc += vol_ * a.u.dot(b.u);
  acc += vol_ * lap_za.dot(lap_zb);
  acc += vol_ * a.v.dot(b.v);
  for (Eigen::Index k = 0; k < a.y.size(); ++k) {
    acc += vol_ * c_.values[k] *
           (std::conj(a.y[k]) * b.z[k] + std::conj(a.z[k]) * b.y[k]);
  }
  return acc;
}

double EnergyEvaluator::h_norm(const StateVector& state) const {
  const VectorC lap_z = lap_.apply(state.z);
  const double sq = grad_sq_integral(grid_, state.y) + vol_ * state.u.squaredNorm() +
                    vol_ * lap_z.squaredNorm() + vol_ * state.v.squaredNorm();
  return std::sqrt(sq);
}

double energy(const StateVector& state, const RealField& c_field) {
  return EnergyEvaluator(state.grid, c_field).energy(state);
}

double h_norm(const StateVector& state) {
  RealField zero_c(state.grid);
  return EnergyEvaluator(state.grid, zero_c).h_norm(state);
}

double graph_norm(const StateVector& state, const SparseOperator& generator) {
  const StateVector image =
      StateVector::unpack(state.grid, generator.apply(state.pack()), state.alpha);
  return h_norm(state) + h_norm(image);
}

double dissipation_rate(const StateVector& state, const RealField& d_field) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < state.u.size(); ++k) {
    const double w = state.alpha == 1 ? std::norm(state.u[k]) : std::norm(state.v[k]);
    acc += d_field.values[k] * w;
  }
  return state.grid.cell_volume() * acc;
}

SparseOperator h_gram(const Grid& grid) {
  const Eigen::Index n = grid.num_interior();
  const SparseOperator lap = assemble_laplacian(grid);
  const SparseMatrixC bilap = (lap.matrix() * lap.matrix()).pruned();
  const Complex vol(grid.cell_volume(), 0.0);
  std::vector<Triplet> trips;
  append_block(trips, lap.matrix(), 0, 0, -vol);
  append_identity(trips, n, n, n, vol);
  append_block(trips, bilap, 2 * n, 2 * n, vol);
  append_identity(trips, n, 3 * n, 3 * n, vol);
  SparseMatrixC mat(4 * n, 4 * n);
  mat.setFromTriplets(trips.begin(), trips.end());
  return SparseOperator(std::move(mat), true);
}

BalancedSystem::BalancedSystem(const ProblemConfig& config)
    : config_(config), lap_(assemble_laplacian(config.grid)), gen_(assemble_generator(config)) {
  // Factor −Δ once; every to_original / apply call reuses it.
  SparseMatrixC neg = (-lap_.matrix()).eval();
  lap_solver_ = SparseOperator(std::move(neg), true);
  lap_solver_.try_factorize();
}

VectorC BalancedSystem::to_balanced(const VectorC& state) const {
  const Eigen::Index n = grid().num_interior();
  VectorC out = state;
  out.segment(2 * n, n) = -lap_.apply(state.segment(2 * n, n));
  return out;
}

VectorC BalancedSystem::to_original(const VectorC& balanced) const {
  const Eigen::Index n = grid().num_interior();
  VectorC out = balanced;
  out.segment(2 * n, n) = lap_solver_.solve(balanced.segment(2 * n, n));
  return out;
}

VectorC BalancedSystem::neglap_solve(const VectorC& rhs) const { return lap_solver_.solve(rhs); }

VectorC BalancedSystem::apply(const VectorC& balanced) const {
  const Eigen::Index n = grid().num_interior();
  const auto y = balanced.segment(0, n);
  const auto u = balanced.segment(n, n);
  const auto zeta = balanced.segment(2 * n, n);
  const auto v = balanced.segment(3 * n, n);
  const VectorC z = lap_solver_.solve(zeta);
  VectorC out(4 * n);
  out.segment(0, n) = u;
  out.segment(n, n) = lap_.apply(y);
  out.segment(2 * n, n) = -lap_.apply(v);
  out.segment(3 * n, n) = lap_.apply(zeta);
  for (Eigen::Index k = 0; k < n; ++k) {
    out[n + k] -= config_.c.values[k] * z[k];
    out[3 * n + k] -= config_.c.values[k] * y[k];
    if (config_.alpha == 1) {
      out[n + k] -= config_.d.values[k] * u[k];
    } else {
      out[3 * n + k] -= config_.d.values[k] * v[k];
    }
  }
  return out;
}

VectorC BalancedSystem::apply_adjoint(const VectorC& balanced) const {
  const Eigen::Index n = grid().num_interior();
  const auto y = balanced.segment(0, n);
  const auto u = balanced.segment(n, n);
  const auto zeta = balanced.segment(2 * n, n);
  const auto v = balanced.segment(3 * n, n);
  VectorC cu(n);
  for (Eigen::Index k = 0; k < n; ++k) cu[k] = config_.c.values[k] * u[k];
  const VectorC kcu = lap_solver_.solve(cu);
  VectorC out(4 * n);
  out.segment(0, n) = lap_.apply(u);
  out.segment(n, n) = y;
  out.segment(2 * n, n) = -kcu + lap_.apply(v);
  out.segment(3 * n, n) = -lap_.apply(zeta);
  for (Eigen::Index k = 0; k < n; ++k) {
    out[k] -= config_.c.values[k] * v[k];
    if (config_.alpha == 1) {
      out[n + k] -= config_.d.values[k] * u[k];
    } else {
      out[3 * n + k] -= config_.d.values[k] * v[k];
    }
  }
  return out;
}

double BalancedSystem::h_norm_balanced(const VectorC& balanced) const {
  const Eigen::Index n = grid().num_interior();
  const double vol = cell_volume();
  const double sq = grad_sq_integral(grid(), balanced.segment(0, n)) +
                    vol * balanced.segment(n, 3 * n).squaredNorm();
  return std::sqrt(sq);
}

BalancedSystem::ShiftedSolver::ShiftedSolver(const BalancedSystem& sys, Complex lambda)
    : sys_(&sys), lambda_(lambda) {
  SparseMatrixC shifted = sys.generator().matrix();
  SparseMatrixC eye(shifted.rows(), shifted.cols());
  eye.setIdentity();
  shifted_ = shifted - lambda * eye;
  shifted_.makeCompressed();
  lu_.compute(shifted_);
  singular_ = lu_.info() != Eigen::Success;
}

VectorC BalancedSystem::ShiftedSolver::solve(const VectorC& rhs_balanced) const {
  if (singular_) throw SingularOperatorError("shifted solve: factorization failed");
  auto solve_once = [&](const VectorC& b) {
    return sys_->to_balanced(lu_.solve(sys_->to_original(b)));
  };
  VectorC x = solve_once(rhs_balanced);
  const double rhs_norm = rhs_balanced.norm();
  for (int round = 0; round < 3; ++round) {
    VectorC residual = rhs_balanced - (sys_->apply(x) - lambda_ * x);
    last_residual_ = rhs_norm > 0.0 ? residual.norm() / rhs_norm : residual.norm();
    if (last_residual_ <= 1e-13) break;
    x += solve_once(residual);
  }
  return x;
}

VectorC BalancedSystem::ShiftedSolver::solve_adjoint(const VectorC& rhs_balanced) const {
  if (singular_) throw SingularOperatorError("shifted solve: factorization failed");
  auto solve_once = [&](const VectorC& b) {
    return sys_->to_original(lu_.adjoint().solve(sys_->to_balanced(b)));
  };
  VectorC x = solve_once(rhs_balanced);
  const double rhs_norm = rhs_balanced.norm();
  for (int round = 0; round < 3; ++round) {
    VectorC residual =
        rhs_balanced - (sys_->apply_adjoint(x) - std::conj(lambda_) * x);
    last_residual_ = rhs_norm > 0.0 ? residual.norm() / rhs_norm : residual.norm();
    if (last_residual_ <= 1e-13) break;
    x += solve_once(residual);
  }
  return x;
}

}  // namespace wpl
