#include "wpl/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <stdexcept>

namespace wpl {

namespace {

double uniform01(std::uint64_t& state) {
  // splitmix64; reproducible across platforms
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

VectorC random_start(Eigen::Index n, std::uint64_t seed) {
  std::uint64_t state = seed;
  VectorC v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = Complex(2.0 * uniform01(state) - 1.0, 2.0 * uniform01(state) - 1.0);
  }
  v.normalize();
  return v;
}

// Real start keeps the power iteration conjugation-equivariant: the run at
// conj(λ) is the exact conjugate of the run at λ, so norm(λ) = norm(conj λ)
// holds to the last bit for real-coefficient operators.
VectorC real_random_start(Eigen::Index n, std::uint64_t seed) {
  std::uint64_t state = seed;
  VectorC v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(2.0 * uniform01(state) - 1.0, 0.0);
  v.normalize();
  return v;
}

struct RitzCandidate {
  Complex lambda;
  VectorC vector;  // balanced coordinates
};

}  // namespace

std::vector<EigenPair> eigenpairs_near(const BalancedSystem& system, Complex sigma, int count,
                                       const EigSolveOptions& opts) {
  if (count < 1) throw std::invalid_argument("eigenpairs_near: count must be positive");
  const Eigen::Index n = system.dim();
  auto solver = system.shifted(sigma);
  if (solver.singular()) {
    throw SingularOperatorError("eigenpairs_near: shift is on the spectrum");
  }
  const int m = std::min<Eigen::Index>(
      n, opts.krylov_dim > 0 ? opts.krylov_dim : std::max(2 * count + 16, 40));

  // Arnoldi on (A − σ)⁻¹ with two-pass modified Gram-Schmidt.
  std::vector<VectorC> basis;
  basis.reserve(m + 1);
  basis.push_back(random_start(n, opts.seed));
  Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(m + 1, m);
  int built = 0;
  for (int j = 0; j < m; ++j) {
    VectorC w = solver.solve(basis[j]);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const Complex c = basis[i].dot(w);
        hess(i, j) += c;
        w -= c * basis[i];
      }
    }
    const double beta = w.norm();
    hess(j + 1, j) = beta;
    built = j + 1;
    if (beta < 1e-12) break;  // invariant subspace
    basis.push_back(w / beta);
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(hess.topLeftCorner(built, built));
  if (ces.info() != Eigen::Success) {
    throw std::runtime_error("eigenpairs_near: Hessenberg eigensolve failed");
  }

  std::vector<RitzCandidate> candidates;
  for (int i = 0; i < built; ++i) {
    const Complex theta = ces.eigenvalues()[i];
    if (std::abs(theta) < 1e-12) continue;  // far from the shift
    RitzCandidate cand;
    cand.lambda = sigma + 1.0 / theta;
    cand.vector = VectorC::Zero(n);
    for (int k = 0; k < built; ++k) cand.vector += ces.eigenvectors()(k, i) * basis[k];
    cand.vector.normalize();
    candidates.push_back(std::move(cand));
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](const RitzCandidate& a, const RitzCandidate& b) {
              return std::abs(a.lambda - sigma) < std::abs(b.lambda - sigma);
            });
  // Drop Ritz duplicates before the polish loop.
  std::vector<RitzCandidate> unique_candidates;
  for (auto& cand : candidates) {
    bool dup = false;
    for (const auto& kept : unique_candidates) {
      if (std::abs(cand.lambda - kept.lambda) <= 1e-6 * (1.0 + std::abs(kept.lambda))) {
        dup = true;
        break;
      }
    }
    if (!dup) unique_candidates.push_back(std::move(cand));
    if (static_cast<int>(unique_candidates.size()) >= 2 * count + 4) break;
  }

  std::vector<EigenPair> pairs;
  for (auto& cand : unique_candidates) {
    Complex lambda = cand.lambda;
    VectorC vec = cand.vector;
    double residual = (system.apply(vec) - lambda * vec).norm();
    for (int it = 0; it < opts.max_polish && residual > opts.residual_tol; ++it) {
      auto shifted = system.shifted(lambda);
      if (shifted.singular()) {
        lambda += Complex(1e-12 * (1.0 + std::abs(lambda)), 0.0);
        continue;
      }
      vec = shifted.solve(vec);
      vec.normalize();
      lambda = vec.dot(system.apply(vec));
      residual = (system.apply(vec) - lambda * vec).norm();
    }
    EigenPair pair;
    pair.lambda = lambda;
    pair.residual = residual;
    pair.converged = residual <= 1e-8;
    pair.vector = system.to_original(vec);
    bool dup = false;
    for (auto& kept : pairs) {
      if (std::abs(pair.lambda - kept.lambda) <= 1e-8 * (1.0 + std::abs(kept.lambda))) {
        if (pair.residual < kept.residual) kept = pair;
        dup = true;
        break;
      }
    }
    if (!dup) pairs.push_back(std::move(pair));
  }
  std::sort(pairs.begin(), pairs.end(), [&](const EigenPair& a, const EigenPair& b) {
    return std::abs(a.lambda - sigma) < std::abs(b.lambda - sigma);
  });
  if (static_cast<int>(pairs.size()) > count) pairs.resize(count);
  return pairs;
}

double resolvent_norm(const BalancedSystem& system, Complex lambda) {
  auto solver = system.shifted(lambda);
  if (solver.singular()) return std::numeric_limits<double>::infinity();
  const Eigen::Index n = system.dim();
  const Eigen::Index nb = system.grid().num_interior();
  const double vol = system.cell_volume();
  const SparseOperator& lap = system.laplacian();

  auto gram_apply = [&](const VectorC& v) {
    VectorC out = vol * v;
    out.segment(0, nb) = -vol * lap.apply(v.segment(0, nb));
    return out;
  };
  auto gram_solve = [&](const VectorC& v) {
    VectorC out = v / vol;
    out.segment(0, nb) = system.neglap_solve(v.segment(0, nb) / vol);
    return out;
  };

  VectorC v = real_random_start(n, 0x51ED2701A9B3D4E5ull);
  // G-normalize.
  double gn = std::sqrt(std::abs(v.dot(gram_apply(v)).real()));
  v /= gn;
  double estimate = 0.0;
  for (int it = 0; it < 300; ++it) {
    const VectorC t1 = solver.solve(v);
    const VectorC t2 = gram_apply(t1);
    const VectorC t3 = solver.solve_adjoint(t2);
    const VectorC t4 = gram_solve(t3);
    const double mu = std::abs(v.dot(t3).real());  // ⟨M v, v⟩_G = ‖(A−λ)⁻¹v‖_G²
    const double next = std::sqrt(mu);
    const double change = std::abs(next - estimate);
    estimate = next;
    gn = std::sqrt(std::abs(t4.dot(gram_apply(t4)).real()));
    if (gn == 0.0) break;
    v = t4 / gn;
    if (it >= 3 && change <= 3e-10 * std::max(estimate, 1e-300)) break;
  }
  return estimate;
}

ResolventSolveRecord resolvent_solve(const BalancedSystem& system, Complex lambda,
                                     const StateVector& rhs) {
  auto solver = system.shifted(lambda);
  if (solver.singular()) {
    throw SingularOperatorError("resolvent_solve: λ is on the spectrum");
  }
  ResolventSolveRecord record;
  record.lambda = lambda;
  record.rhs = rhs;
  const VectorC f_bal = system.to_balanced(rhs.pack());
  const VectorC u_bal = solver.solve(f_bal);
  const VectorC res = f_bal - (system.apply(u_bal) - lambda * u_bal);
  const double f_norm = f_bal.norm();
  record.residual_rel = f_norm > 0.0 ? res.norm() / f_norm : res.norm();
  record.solution =
      StateVector::unpack(rhs.grid, system.to_original(u_bal), rhs.alpha);
  const double fh = system.h_norm_balanced(f_bal);
  const double uh = system.h_norm_balanced(u_bal);
  record.norm_ratio = fh > 0.0 ? uh / fh : 0.0;

  // Cross-check the first-order relations y¹ = f⁰ + λy⁰, z¹ = g⁰ + λz⁰.
  const VectorC y1 = rhs.y + lambda * record.solution.y;
  const VectorC z1 = rhs.z + lambda * record.solution.z;
  const double scale = std::max({record.solution.u.norm(), record.solution.v.norm(), 1e-300});
  record.reconstruction_err =
      std::max((y1 - record.solution.u).norm(), (z1 - record.solution.v).norm()) / scale;
  return record;
}

SpectrumReport spectrum_sweep(const BalancedSystem& system, const std::vector<Complex>& targets,
                              int count_per_target, const EigSolveOptions& opts, int threads) {
  std::vector<std::vector<EigenPair>> per_target(targets.size());
  if (threads > 1) {
    std::vector<std::future<std::vector<EigenPair>>> futures;
    futures.reserve(targets.size());
    for (const Complex sigma : targets) {
      futures.push_back(std::async(std::launch::async, [&, sigma] {
        return eigenpairs_near(system, sigma, count_per_target, opts);
      }));
    }
    for (std::size_t t = 0; t < targets.size(); ++t) per_target[t] = futures[t].get();
  } else {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      per_target[t] = eigenpairs_near(system, targets[t], count_per_target, opts);
    }
  }

  SpectrumReport report;
  for (auto& chunk : per_target) {
    for (auto& pair : chunk) {
      if (!pair.converged) continue;
      bool dup = false;
      for (auto& kept : report.pairs) {
        if (std::abs(pair.lambda - kept.lambda) <= 1e-8 * (1.0 + std::abs(kept.lambda))) {
          if (pair.residual < kept.residual) kept = pair;
          dup = true;
          break;
        }
      }
      if (!dup) report.pairs.push_back(std::move(pair));
    }
  }
  std::sort(report.pairs.begin(), report.pairs.end(), [](const EigenPair& a, const EigenPair& b) {
    if (a.lambda.imag() != b.lambda.imag()) return a.lambda.imag() < b.lambda.imag();
    return a.lambda.real() < b.lambda.real();
  });
  report.spectral_abscissa = -std::numeric_limits<double>::infinity();
  for (const auto& pair : report.pairs) {
    report.spectral_abscissa = std::max(report.spectral_abscissa, pair.lambda.real());
  }
  return report;
}

ExclusionFit scan_exclusion_region(const SpectrumReport& report) {
  ExclusionFit fit;
  std::vector<std::pair<double, double>> pts;  // (|Im λ|, log(−Re λ))
  for (const auto& pair : report.pairs) {
    if (std::abs(pair.lambda) <= 1.0) continue;
    if (pair.lambda.real() < -1e-12) {
      pts.emplace_back(std::abs(pair.lambda.imag()), std::log(-pair.lambda.real()));
    }
  }
  fit.points_used = static_cast<int>(pts.size());
  if (pts.size() < 10) {
    fit.flag = "no decay";
    return fit;
  }
  double im_min = std::numeric_limits<double>::infinity(), im_max = 0.0;
  for (const auto& p : pts) {
    im_min = std::min(im_min, p.first);
    im_max = std::max(im_max, p.first);
  }
  if (im_max < 10.0 * std::max(im_min, 1e-3)) {
    fit.flag = "imaginary span below a decade";
    return fit;
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sx += p.first;
    sy += p.second;
    sxx += p.first * p.first;
    sxy += p.first * p.second;
  }
  const double m = static_cast<double>(pts.size());
  const double denom = m * sxx - sx * sx;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  double rss = 0.0;
  for (const auto& p : pts) {
    const double r = p.second - (fit.intercept + fit.slope * p.first);
    rss += r * r;
  }
  fit.fit_residual = std::sqrt(rss / m);

  // Smallest C with −Re λ ≥ e^{−C|Im λ|}/C for every point; the margin
  // g(C) is strictly increasing in C, so bisect.
  auto margin = [&](double c) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& pair : report.pairs) {
      if (std::abs(pair.lambda) <= 1.0) continue;
      const double lhs = -pair.lambda.real();
      const double rhs = std::exp(-c * std::abs(pair.lambda.imag())) / c;
      worst = std::min(worst, lhs - rhs);
    }
    return worst;
  };
  double hi = std::max({-fit.slope, 1.0, std::exp(std::min(fit.intercept, 200.0))});
  int guard = 0;
  while (margin(hi) < 0.0 && guard++ < 60) hi *= 2.0;
  if (margin(hi) < 0.0) {
    fit.flag = "containment unattainable";
    return fit;
  }
  double lo = hi;
  while (lo > 1e-8 && margin(lo * 0.5) >= 0.0) lo *= 0.5;
  if (lo < hi) {
    double lo_fail = lo * 0.5;
    for (int it = 0; it < 200 && (lo - lo_fail) > 1e-12 * lo; ++it) {
      const double mid = 0.5 * (lo + lo_fail);
      if (margin(mid) >= 0.0) {
        lo = mid;
      } else {
        lo_fail = mid;
      }
    }
    hi = lo;
  }
  fit.c_excl = hi;
  fit.containment = margin(fit.c_excl) >= 0.0;
  fit.ok = fit.containment;
  return fit;
}

std::string SpectrumReport::to_csv() const {
  std::string out = "re,im,residual\n";
  char buf[120];
  for (const auto& pair : pairs) {
    std::snprintf(buf, sizeof(buf), "%.16e,%.16e,%.16e\n", pair.lambda.real(),
                  pair.lambda.imag(), pair.residual);
    out += buf;
  }
  return out;
}

}  // namespace wpl
