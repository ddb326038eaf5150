#include "wpl/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace wpl {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double uniform01(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace

double carleman_b(double mu) {
  if (!(mu > kLn2)) throw std::invalid_argument("carleman_b: need μ > ln 2");
  return std::sqrt(1.0 + std::log(2.0 + std::exp(mu)) / mu);
}

double carleman_b0(double mu) {
  const double b = carleman_b(mu);
  const double drop = std::log((1.0 + std::exp(mu)) / std::exp(mu)) / mu;
  return std::sqrt(b * b - drop);
}

SpaceTimeGrid::SpaceTimeGrid(double s_half, int s_count, Grid space, SubdomainChain chain)
    : s_half_(s_half), s_count_(s_count), space_(std::move(space)), chain_(std::move(chain)) {
  if (!(s_half > 0.0) || s_half > 2.0 + 1e-12) {
    throw std::invalid_argument("SpaceTimeGrid: need 0 < s_half <= 2");
  }
  if (s_count < 3) throw std::invalid_argument("SpaceTimeGrid: need at least 3 s-points");
  if (space_.dimension() != 1) throw std::invalid_argument("SpaceTimeGrid: 1D spatial only");
  validate_chain(space_, chain_);
  ds_ = 2.0 * s_half / (s_count + 1);
}

CarlemanWeightSet build_weights(const SpaceTimeGrid& grid, const WeightBase& base, double mu,
                                double lambda) {
  if (!(mu > kLn2)) throw std::invalid_argument("build_weights: need μ > ln 2");
  if (!(lambda > 0.0)) throw std::invalid_argument("build_weights: need λ > 0");
  if (!base.grid.same_layout(grid.space())) {
    throw std::invalid_argument("build_weights: ψ̂ sampled on a different grid");
  }
  CarlemanWeightSet w;
  w.mu = mu;
  w.lambda = lambda;
  w.b = carleman_b(mu);
  w.b0 = carleman_b0(mu);

  const Eigen::Index total = grid.num_points();
  w.psi.resize(total);
  w.phi.resize(total);
  w.ell.resize(total);
  w.ell_s.resize(total);
  w.ell_x.resize(total);
  w.ell_ss.resize(total);
  w.ell_xx.resize(total);
  w.ell_xs.resize(total);

  const double inv_sup = 1.0 / base.sup_norm;
  const int nx = grid.space().count(0);
  w.band_lower_ok = true;
  w.band_upper_ok = true;
  const double lower_floor = 2.0 + std::exp(mu);
  const double upper_cap = (1.0 + std::exp(mu)) * (1.0 + 1e-12);
  for (int j = 0; j < grid.s_count(); ++j) {
    const double s = grid.s_coord(j);
    for (int i = 0; i < nx; ++i) {
      const double x = grid.space().coord(0, i);
      const Eigen::Index k = grid.flat(j, i);
      const double psi = base.value(x) * inv_sup + w.b * w.b - s * s;
      const double psi_s = -2.0 * s;
      const double psi_x = base.dx(x) * inv_sup;
      const double psi_xx = base.dxx(x) * inv_sup;
      const double phi = std::exp(mu * psi);
      const double ell = lambda * phi;
      w.psi[k] = psi;
      w.phi[k] = phi;
      w.ell[k] = ell;
      w.ell_s[k] = lambda * mu * phi * psi_s;
      w.ell_x[k] = lambda * mu * phi * psi_x;
      w.ell_xs[k] = lambda * mu * mu * phi * psi_s * psi_x;
      w.ell_ss[k] = lambda * mu * mu * phi * psi_s * psi_s + lambda * mu * phi * (-2.0);
      w.ell_xx[k] = lambda * mu * mu * phi * psi_x * psi_x + lambda * mu * phi * psi_xx;
      if (std::abs(s) <= 1.0 && phi < lower_floor) w.band_lower_ok = false;
      if (std::abs(s) >= w.b0 && std::abs(s) <= w.b && phi > upper_cap) w.band_upper_ok = false;
    }
  }
  w.ell_max = w.ell.maxCoeff();
  w.theta_sq = (2.0 * (w.ell.array() - w.ell_max)).exp();
  return w;
}

namespace {

// Centered stencils with zero Dirichlet closure in both directions.
STField d_s(const SpaceTimeGrid& g, const STField& f) {
  const int m = g.s_count();
  const int n = static_cast<int>(g.space().num_interior());
  const double inv = 1.0 / (2.0 * g.ds());
  STField out(f.size());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Complex up = j + 1 < m ? f[g.flat(j + 1, i)] : Complex(0, 0);
      const Complex dn = j > 0 ? f[g.flat(j - 1, i)] : Complex(0, 0);
      out[g.flat(j, i)] = (up - dn) * inv;
    }
  }
  return out;
}

STField d_ss(const SpaceTimeGrid& g, const STField& f) {
  const int m = g.s_count();
  const int n = static_cast<int>(g.space().num_interior());
  const double inv = 1.0 / (g.ds() * g.ds());
  STField out(f.size());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Complex up = j + 1 < m ? f[g.flat(j + 1, i)] : Complex(0, 0);
      const Complex dn = j > 0 ? f[g.flat(j - 1, i)] : Complex(0, 0);
      out[g.flat(j, i)] = (up - 2.0 * f[g.flat(j, i)] + dn) * inv;
    }
  }
  return out;
}

STField d_x(const SpaceTimeGrid& g, const STField& f) {
  const int m = g.s_count();
  const int n = static_cast<int>(g.space().num_interior());
  const double inv = 1.0 / (2.0 * g.space().spacing(0));
  STField out(f.size());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Complex right = i + 1 < n ? f[g.flat(j, i + 1)] : Complex(0, 0);
      const Complex left = i > 0 ? f[g.flat(j, i - 1)] : Complex(0, 0);
      out[g.flat(j, i)] = (right - left) * inv;
    }
  }
  return out;
}

STField lap_x(const SpaceTimeGrid& g, const STField& f) {
  const int m = g.s_count();
  const int n = static_cast<int>(g.space().num_interior());
  const double inv = 1.0 / (g.space().spacing(0) * g.space().spacing(0));
  STField out(f.size());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Complex right = i + 1 < n ? f[g.flat(j, i + 1)] : Complex(0, 0);
      const Complex left = i > 0 ? f[g.flat(j, i - 1)] : Complex(0, 0);
      out[g.flat(j, i)] = (right - 2.0 * f[g.flat(j, i)] + left) * inv;
    }
  }
  return out;
}

void require_matching_b(const SpaceTimeGrid& grid, const CarlemanWeightSet& weights) {
  if (std::abs(grid.s_half() - weights.b) > 1e-9) {
    throw std::invalid_argument("weighted estimate: grid s-extent must equal the weight b");
  }
}

void require_nonzero(const STField& f) {
  if (f.norm() < 1e-14) throw std::invalid_argument("degenerate test function");
}

}  // namespace

STField random_test_function(const SpaceTimeGrid& grid, std::uint64_t seed, int modes) {
  if (modes < 1) throw std::invalid_argument("random_test_function: modes >= 1");
  std::uint64_t state = seed;
  const int m = grid.s_count();
  const int n = static_cast<int>(grid.space().num_interior());
  const double S = grid.s_half();
  const double L = grid.space().extent(0);
  std::vector<Complex> coeff(static_cast<std::size_t>(modes) * modes);
  for (auto& c : coeff) {
    c = Complex(2.0 * uniform01(state) - 1.0, 2.0 * uniform01(state) - 1.0);
  }
  STField f = STField::Zero(grid.num_points());
  const double pi = std::acos(-1.0);
  for (int j = 0; j < m; ++j) {
    const double s = grid.s_coord(j);
    for (int i = 0; i < n; ++i) {
      const double x = grid.space().coord(0, i);
      Complex acc(0.0, 0.0);
      for (int ks = 1; ks <= modes; ++ks) {
        const double sin_s = std::sin(ks * pi * (s + S) / (2.0 * S));
        for (int kx = 1; kx <= modes; ++kx) {
          acc += coeff[static_cast<std::size_t>(ks - 1) * modes + (kx - 1)] * sin_s *
                 std::sin(kx * pi * x / L);
        }
      }
      f[grid.flat(j, i)] = acc;
    }
  }
  const STField fs = d_s(grid, f);
  const STField fx = d_x(grid, f);
  const double h1_sq =
      grid.cell_volume() * (f.squaredNorm() + fs.squaredNorm() + fx.squaredNorm());
  f /= std::sqrt(h1_sq);
  return f;
}

InequalityRow verify_elliptic_carleman(const STField& p, const SpaceTimeGrid& grid,
                                       const CarlemanWeightSet& weights, const Box& omega0) {
  require_matching_b(grid, weights);
  require_nonzero(p);
  const double mu = weights.mu;
  const double lam = weights.lambda;
  const STField ps = d_s(grid, p);
  const STField px = d_x(grid, p);
  const STField f1 = d_ss(grid, p) + lap_x(grid, p);

  const int m = grid.s_count();
  const int n = static_cast<int>(grid.space().num_interior());
  double lhs = 0.0, rhs_f = 0.0, rhs_obs = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index k = grid.flat(j, i);
      const double th = weights.theta_sq[k];
      const double phi = weights.phi[k];
      const double density =
          lam * mu * mu * th * phi *
          (std::norm(px[k]) + std::norm(ps[k]) +
           lam * lam * mu * mu * phi * phi * std::norm(p[k]));
      lhs += density;
      rhs_f += th * std::norm(f1[k]);
      if (grid.x_in(omega0, i)) rhs_obs += density;
    }
  }
  const double vol = grid.cell_volume();
  InequalityRow row;
  row.mu = mu;
  row.lambda = lam;
  row.lhs = lhs * vol;
  row.rhs_terms = {rhs_f * vol, rhs_obs * vol};
  const double denom = row.rhs_terms[0] + row.rhs_terms[1];
  row.c_emp = denom > 0.0 ? row.lhs / denom : 0.0;
  row.pass = std::isfinite(row.c_emp);
  return row;
}

InequalityRow verify_local_energy(const STField& q, const SpaceTimeGrid& grid,
                                  const CarlemanWeightSet& weights, const VerifierConfig& cfg) {
  require_matching_b(grid, weights);
  // zero data is a vacuous pass here (both sides vanish)
  if (cfg.beta < 2.0) throw std::invalid_argument("verify_local_energy: β >= 2");
  if (cfg.cutoff_index < 0 || cfg.cutoff_index > 4) {
    throw std::invalid_argument("verify_local_energy: cutoff index in 0..4");
  }
  const CutoffSet cutoffs = build_cutoffs(grid.space(), grid.chain(), weights.b, weights.b0);
  const RealField& eta = cutoffs.eta[static_cast<std::size_t>(cfg.cutoff_index)];

  const double mu = weights.mu;
  const double lam = weights.lambda;
  const double lm_beta = std::pow(lam * mu, cfg.beta);
  const STField qs = d_s(grid, q);
  const STField qx = d_x(grid, q);
  const STField f2 = cfg.gamma * qs + lap_x(grid, q);

  const int m = grid.s_count();
  const int n = static_cast<int>(grid.space().num_interior());
  double lhs = 0.0, rhs_f = 0.0, rhs_mass = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index k = grid.flat(j, i);
      const double th = weights.theta_sq[k];
      const double eta2 = eta.values[i] * eta.values[i];
      const double phik = std::pow(weights.phi[k], cfg.phi_power);
      lhs += th * eta2 * phik * std::norm(qx[k]);
      rhs_f += th * std::norm(f2[k]);
      rhs_mass += th * eta2 * phik * weights.phi[k] * weights.phi[k] * std::norm(q[k]);
    }
  }
  const double vol = grid.cell_volume();
  InequalityRow row;
  row.mu = mu;
  row.lambda = lam;
  row.lhs = lhs * vol;
  row.rhs_terms = {rhs_f * vol / lm_beta, lm_beta * rhs_mass * vol};
  // C multiplies only the mass term in this estimate.
  row.c_emp = row.rhs_terms[1] > 0.0
                  ? std::max(0.0, row.lhs - row.rhs_terms[0]) / row.rhs_terms[1]
                  : 0.0;
  row.pass = std::isfinite(row.c_emp);
  return row;
}

InequalityRow verify_parabolic_carleman(const STField& q, const SpaceTimeGrid& grid,
                                        const CarlemanWeightSet& weights, double gamma,
                                        const Box& omega1) {
  require_matching_b(grid, weights);
  require_nonzero(q);
  const double mu = weights.mu;
  const double lam = weights.lambda;
  const STField qs = d_s(grid, q);
  const STField qx = d_x(grid, q);
  const STField lap_q = lap_x(grid, q);
  const STField f2 = gamma * qs + lap_q;

  const int m = grid.s_count();
  const int n = static_cast<int>(grid.space().num_interior());
  double lhs = 0.0, rhs_f = 0.0, rhs_obs = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index k = grid.flat(j, i);
      const double th = weights.theta_sq[k];
      const double phi = weights.phi[k];
      lhs += th / (lam * phi) * (std::norm(lap_q[k]) + gamma * gamma * std::norm(qs[k]));
      lhs += lam * mu * mu * th * phi *
             (std::norm(qx[k]) + lam * lam * mu * mu * phi * phi * std::norm(q[k]));
      rhs_f += th * std::norm(f2[k]);
      if (grid.x_in(omega1, i)) {
        rhs_obs += lam * lam * lam * mu * mu * mu * mu * th * phi * phi * phi * std::norm(q[k]);
      }
    }
  }
  const double vol = grid.cell_volume();
  InequalityRow row;
  row.mu = mu;
  row.lambda = lam;
  row.lhs = lhs * vol;
  row.rhs_terms = {rhs_f * vol, rhs_obs * vol};
  const double denom = row.rhs_terms[0] + row.rhs_terms[1];
  row.c_emp = denom > 0.0 ? row.lhs / denom : 0.0;
  row.pass = std::isfinite(row.c_emp);
  return row;
}

EPSystemData lift_resolvent_data(const ResolventSolveRecord& record, const ProblemConfig& config,
                                 const SpaceTimeGrid& grid) {
  if (!record.solution.grid.same_layout(grid.space())) {
    throw std::invalid_argument("lift_resolvent_data: record grid mismatch");
  }
  EPSystemData data{grid,   record.lambda, record.rhs.alpha, record.solution.y,
                    record.solution.z, {}, {}, {}, {}, {}, config.c, config.d,
                    {0.0, 0.0, 0.0}};
  const int m = grid.s_count();
  const int n = static_cast<int>(grid.space().num_interior());
  const Complex ilam = Complex(0.0, 1.0) * record.lambda;
  const Eigen::Index total = grid.num_points();
  data.p.resize(total);
  data.q.resize(total);
  data.w.resize(total);
  data.p_src.resize(total);
  data.w_src.resize(total);

  // Spatial factors: w = (iλ − Δ)q in closed form; α-exact sources.
  const SparseOperator lap = assemble_laplacian(grid.space());
  const VectorC lap_z0 = lap.apply(data.z0);
  VectorC w_row = ilam * data.z0 - lap_z0;
  VectorC psrc_row(n), wsrc_row(n);
  const double alpha = static_cast<double>(data.alpha);
  for (int i = 0; i < n; ++i) {
    psrc_row[i] = (record.lambda + alpha * config.d.values[i]) * record.rhs.y[i] +
                  record.rhs.u[i];
    wsrc_row[i] = (record.lambda + (1.0 - alpha) * config.d.values[i]) * record.rhs.z[i] +
                  record.rhs.v[i];
  }
  for (int j = 0; j < m; ++j) {
    const Complex osc = std::exp(ilam * grid.s_coord(j));
    for (int i = 0; i < n; ++i) {
      const Eigen::Index k = grid.flat(j, i);
      data.p[k] = osc * data.y0[i];
      data.q[k] = osc * data.z0[i];
      data.w[k] = osc * w_row[i];
      data.p_src[k] = osc * psrc_row[i];
      data.w_src[k] = osc * wsrc_row[i];
    }
  }
  data.residuals = ep_system_residuals(data, false);
  const double worst = std::max({data.residuals[0], data.residuals[1], data.residuals[2]});
  if (worst > 1e-8) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "lift_resolvent_data: residuals %.3e %.3e %.3e exceed 1e-8",
                  data.residuals[0], data.residuals[1], data.residuals[2]);
    throw std::runtime_error(buf);
  }
  return data;
}

std::array<double, 3> ep_system_residuals(const EPSystemData& data, bool stencil_s) {
  const SpaceTimeGrid& g = data.grid;
  const int m = g.s_count();
  const int n = static_cast<int>(g.space().num_interior());
  const Complex ilam = Complex(0.0, 1.0) * data.lambda;
  const double alpha = static_cast<double>(data.alpha);

  STField ps, pss, qsf, wsf;
  if (stencil_s) {
    ps = d_s(g, data.p);
    pss = d_ss(g, data.p);
    qsf = d_s(g, data.q);
    wsf = d_s(g, data.w);
  } else {
    ps = ilam * data.p;
    pss = ilam * ilam * data.p;
    qsf = ilam * data.q;
    wsf = ilam * data.w;
  }
  const STField lap_p = lap_x(g, data.p);
  const STField lap_q = lap_x(g, data.q);
  const STField lap_w = lap_x(g, data.w);

  // The lift carries no boundary data at s = ±s_half, so stencil mode skips
  // the outermost s rows.
  const int j_lo = stencil_s ? 1 : 0;
  const int j_hi = stencil_s ? m - 1 : m;
  double r1 = 0.0, r2 = 0.0, r3 = 0.0;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (int j = j_lo; j < j_hi; ++j) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index k = g.flat(j, i);
      const double c = data.c.values[i];
      const double d = data.d.values[i];
      const Complex e1 = pss[k] + lap_p[k] - c * data.q[k] +
                         Complex(0.0, 1.0) * (alpha * d) * ps[k] - data.p_src[k];
      const Complex e2 = wsf[k] + lap_w[k] +
                         Complex(0.0, 1.0) * ((1.0 - alpha) * d) * qsf[k] -
                         c * data.p[k] - data.w_src[k];
      const Complex e3 = qsf[k] - lap_q[k] - data.w[k];
      r1 += std::norm(e1);
      r2 += std::norm(e2);
      r3 += std::norm(e3);
      s1 += std::norm(pss[k]) + std::norm(lap_p[k]) + std::norm(data.p_src[k]);
      s2 += std::norm(wsf[k]) + std::norm(lap_w[k]) + std::norm(data.w_src[k]);
      s3 += std::norm(qsf[k]) + std::norm(lap_q[k]) + std::norm(data.w[k]);
    }
  }
  return {std::sqrt(r1 / std::max(s1, 1e-300)), std::sqrt(r2 / std::max(s2, 1e-300)),
          std::sqrt(r3 / std::max(s3, 1e-300))};
}

std::vector<double> default_eps_grid() {
  std::vector<double> eps;
  const double lo = 0.05, hi = 5.0;
  const int count = 12;
  for (int i = 0; i < count; ++i) {
    eps.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  }
  return eps;
}

namespace {

// Smallest C with C e^{C/ε} g1 + C e^{-2/ε} g2 ≥ lhs (monotone in C).
double fit_c_of_eps(double lhs, double g1, double g2, double eps) {
  if (lhs <= 0.0) return 0.0;
  auto value = [&](double c) {
    double acc = 0.0;
    if (g1 > 0.0 && c > 0.0) {
      const double log_term = std::log(c) + c / eps + std::log(g1);
      acc += log_term > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(log_term);
    }
    if (g2 > 0.0 && c > 0.0) acc += c * std::exp(-2.0 / eps) * g2;
    return acc;
  };
  double hi = 1.0;
  int guard = 0;
  while (value(hi) < lhs && guard++ < 4000) hi *= 2.0;
  if (value(hi) < lhs) return std::numeric_limits<double>::infinity();
  double lo = 0.0;
  for (int it = 0; it < 500 && (hi - lo) > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (value(mid) >= lhs) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

InterpolationResult verify_interpolation(const EPSystemData& data, const VerifierConfig& cfg) {
  const SpaceTimeGrid& g = data.grid;
  if (std::abs(g.s_half() - 2.0) > 1e-9) {
    throw std::invalid_argument("verify_interpolation: grid must span (-2,2)");
  }
  const int m = g.s_count();
  const int n = static_cast<int>(g.space().num_interior());
  const double vol = g.cell_volume();
  const Box& omega4 = g.chain().omega(4);
  const STField p_s = Complex(0.0, 1.0) * data.lambda * data.p;
  const STField q_s = Complex(0.0, 1.0) * data.lambda * data.q;
  const STField p_x = d_x(g, data.p);

  double p_h1_y = 0.0, w_y = 0.0, q_y = 0.0;
  double psrc_x = 0.0, wsrc_x = 0.0, obs = 0.0, obs_s = 0.0;
  double p_x_norm = 0.0, ps_x_norm = 0.0, w_x_norm = 0.0, q_x_norm = 0.0;
  for (int j = 0; j < m; ++j) {
    const bool in_y = g.in_Y(j);
    for (int i = 0; i < n; ++i) {
      const Eigen::Index k = g.flat(j, i);
      const double p2 = std::norm(data.p[k]);
      const double ps2 = std::norm(p_s[k]);
      const double w2 = std::norm(data.w[k]);
      const double q2 = std::norm(data.q[k]);
      if (in_y) {
        p_h1_y += p2 + ps2 + std::norm(p_x[k]);
        w_y += w2;
        q_y += q2;
      }
      psrc_x += std::norm(data.p_src[k]);
      wsrc_x += std::norm(data.w_src[k]);
      if (g.x_in(omega4, i)) {
        if (data.alpha == 1) {
          obs += p2;
          obs_s += ps2;
        } else {
          obs += q2;
          obs_s += std::norm(q_s[k]);
        }
      }
      p_x_norm += p2;
      ps_x_norm += ps2;
      w_x_norm += w2;
      q_x_norm += q2;
    }
  }
  InterpolationResult out;
  out.lhs = std::sqrt(p_h1_y * vol) + std::sqrt(w_y * vol) + std::sqrt(q_y * vol);
  out.group1 = std::sqrt(psrc_x * vol) + std::sqrt(wsrc_x * vol) + std::sqrt(obs * vol) +
               std::sqrt(obs_s * vol);
  out.group2 = std::sqrt(p_x_norm * vol) + std::sqrt(ps_x_norm * vol) +
               std::sqrt(w_x_norm * vol) + std::sqrt(q_x_norm * vol);
  out.eps = cfg.eps_grid.empty() ? default_eps_grid() : cfg.eps_grid;
  for (const double eps : out.eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("verify_interpolation: ε must be positive");
  }
  if (out.lhs <= 0.0) {
    out.vacuous = true;
    out.pass = true;
    out.c_of_eps.assign(out.eps.size(), 0.0);
    out.group1_weight.assign(out.eps.size(), 0.0);
    out.group2_weight.assign(out.eps.size(), 0.0);
    out.tradeoff_ok = true;
    return out;
  }
  out.c_star = std::numeric_limits<double>::infinity();
  for (const double eps : out.eps) {
    const double c = fit_c_of_eps(out.lhs, out.group1, out.group2, eps);
    out.c_of_eps.push_back(c);
    const double cg1 = c > 0.0 && std::isfinite(c)
                           ? (c / eps > 700.0 ? std::numeric_limits<double>::infinity()
                                              : c * std::exp(c / eps))
                           : 0.0;
    out.group1_weight.push_back(cg1);
    out.group2_weight.push_back(std::isfinite(c) ? c * std::exp(-2.0 / eps) : 0.0);
    if (c < out.c_star) {
      out.c_star = c;
      out.c_star_eps = eps;
    }
  }
  out.tradeoff_ok = true;
  for (std::size_t i = 0; i + 1 < out.eps.size(); ++i) {
    if (out.group1_weight[i + 1] > out.group1_weight[i] * (1.0 + 1e-9) + 1e-300) {
      out.tradeoff_ok = false;
    }
    if (out.group2_weight[i + 1] < out.group2_weight[i] * (1.0 - 1e-9) - 1e-300) {
      out.tradeoff_ok = false;
    }
  }
  out.pass = std::isfinite(out.c_star) && out.tradeoff_ok;
  return out;
}

ImEstimateRow check_imaginary_part_estimate(const ResolventSolveRecord& record,
                                            const ProblemConfig& config) {
  const Grid& grid = record.solution.grid;
  const double vol = grid.cell_volume();
  const double alpha = static_cast<double>(record.rhs.alpha);
  const Complex lambda = record.lambda;
  const double abs_im = std::abs(lambda.imag());
  const double abs_re = std::abs(lambda.real());

  double damp_y = 0.0, damp_z = 0.0;
  Complex coupling(0.0, 0.0);
  VectorC src_y(grid.num_interior()), src_z(grid.num_interior());
  for (Eigen::Index i = 0; i < grid.num_interior(); ++i) {
    const double d = config.d.values[i];
    const double c = config.c.values[i];
    damp_y += d * std::norm(record.solution.y[i]);
    damp_z += d * std::norm(record.solution.z[i]);
    coupling += c * (record.solution.z[i] * std::conj(record.solution.y[i]) +
                     record.solution.y[i] * std::conj(record.solution.z[i]));
    src_y[i] = (lambda + alpha * d) * record.rhs.y[i] + record.rhs.u[i];
    src_z[i] = (lambda + (1.0 - alpha) * d) * record.rhs.z[i] + record.rhs.v[i];
  }
  const double y_l2 = std::sqrt(vol) * record.solution.y.norm();
  const double z_l2 = std::sqrt(vol) * record.solution.z.norm();

  ImEstimateRow row;
  row.lambda = lambda;
  row.lhs = 2.0 * abs_im * vol * (alpha * damp_y + (1.0 - alpha) * damp_z);
  row.rhs_terms = {std::sqrt(vol) * src_y.norm() * y_l2, abs_im * abs_re * y_l2 * y_l2,
                   std::sqrt(vol) * src_z.norm() * z_l2, abs_im * abs_re * z_l2 * z_l2};
  const double denom =
      row.rhs_terms[0] + row.rhs_terms[1] + row.rhs_terms[2] + row.rhs_terms[3];
  row.vacuous = row.lhs == 0.0;
  row.c_min = denom > 0.0 ? row.lhs / denom : 0.0;
  row.coupling_im = (vol * coupling).imag();
  return row;
}

std::string InequalityReport::to_csv() const {
  std::string out = "mu,lambda,seed,lhs";
  for (const auto& label : rhs_labels) out += "," + label;
  out += ",c_emp,pass\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.16e", row.mu);
    out += buf;
    std::snprintf(buf, sizeof(buf), ",%.16e", row.lambda);
    out += buf;
    std::snprintf(buf, sizeof(buf), ",%llu", static_cast<unsigned long long>(row.seed));
    out += buf;
    std::snprintf(buf, sizeof(buf), ",%.16e", row.lhs);
    out += buf;
    for (const double term : row.rhs_terms) {
      std::snprintf(buf, sizeof(buf), ",%.16e", term);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.16e,%d\n", row.c_emp, row.pass ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace wpl
