#include "wpl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace wpl {

double smoothstep01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

Box Box::interval(double a, double b) {
  Box box;
  box.dimension = 1;
  box.lo = {a, 0.0};
  box.hi = {b, 0.0};
  return box;
}

Box Box::rectangle(double ax, double bx, double ay, double by) {
  Box box;
  box.dimension = 2;
  box.lo = {ax, ay};
  box.hi = {bx, by};
  return box;
}

bool Box::empty() const {
  for (int a = 0; a < dimension; ++a) {
    if (!(lo[a] < hi[a])) return true;
  }
  return false;
}

bool Box::contains(const std::array<double, 2>& x) const {
  for (int a = 0; a < dimension; ++a) {
    if (!(x[a] > lo[a] && x[a] < hi[a])) return false;
  }
  return true;
}

bool Box::nested_in(const Box& outer, double margin) const {
  if (dimension != outer.dimension) return false;
  for (int a = 0; a < dimension; ++a) {
    if (lo[a] - outer.lo[a] < margin) return false;
    if (outer.hi[a] - hi[a] < margin) return false;
  }
  return true;
}

Box Box::intersect(const Box& other) const {
  Box out = *this;
  for (int a = 0; a < dimension; ++a) {
    out.lo[a] = std::max(lo[a], other.lo[a]);
    out.hi[a] = std::min(hi[a], other.hi[a]);
  }
  return out;
}

Box Box::shrink(double margin) const {
  Box out = *this;
  for (int a = 0; a < dimension; ++a) {
    out.lo[a] += margin;
    out.hi[a] -= margin;
  }
  return out;
}

std::array<double, 2> Box::center() const {
  return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
}

Grid::Grid(int dimension, std::array<double, 2> extent, std::array<int, 2> count)
    : dim_(dimension), extent_(extent), count_(count) {
  if (dimension != 1 && dimension != 2) {
    throw std::invalid_argument("Grid: dimension must be 1 or 2");
  }
  if (dimension == 1) {
    extent_[1] = 1.0;
    count_[1] = 1;
  }
  for (int a = 0; a < dim_; ++a) {
    if (count_[a] < 3) throw std::invalid_argument("Grid: need at least 3 interior points per axis");
    if (!(extent_[a] > 0.0)) throw std::invalid_argument("Grid: extents must be positive");
  }
  spacing_ = {extent_[0] / (count_[0] + 1), dim_ == 2 ? extent_[1] / (count_[1] + 1) : 1.0};

  const int m0 = count_[0] + 2;
  const int m1 = dim_ == 2 ? count_[1] + 2 : 1;
  boundary_mask_.assign(static_cast<std::size_t>(m0) * m1, 0);
  for (int j = 0; j < m1; ++j) {
    for (int i = 0; i < m0; ++i) {
      const bool on_gamma =
          i == 0 || i == m0 - 1 || (dim_ == 2 && (j == 0 || j == m1 - 1));
      boundary_mask_[static_cast<std::size_t>(j) * m0 + i] = on_gamma ? 1 : 0;
    }
  }
}

Grid Grid::line(double length, int n) { return Grid(1, {length, 1.0}, {n, 1}); }

Grid Grid::rectangle(double lx, double ly, int nx, int ny) {
  return Grid(2, {lx, ly}, {nx, ny});
}

Eigen::Index Grid::num_interior() const {
  return static_cast<Eigen::Index>(count_[0]) * (dim_ == 2 ? count_[1] : 1);
}

double Grid::cell_volume() const {
  return dim_ == 2 ? spacing_[0] * spacing_[1] : spacing_[0];
}

Eigen::Index Grid::flat(int i, int j) const {
  return static_cast<Eigen::Index>(j) * count_[0] + i;
}

std::array<int, 2> Grid::unflatten(Eigen::Index k) const {
  const int i = static_cast<int>(k % count_[0]);
  const int j = static_cast<int>(k / count_[0]);
  return {i, j};
}

std::array<double, 2> Grid::point(Eigen::Index k) const {
  const auto ij = unflatten(k);
  return {coord(0, ij[0]), dim_ == 2 ? coord(1, ij[1]) : 0.0};
}

bool Grid::same_layout(const Grid& other) const {
  return dim_ == other.dim_ && extent_ == other.extent_ && count_ == other.count_;
}

Box Grid::domain_box() const {
  return dim_ == 2 ? Box::rectangle(0.0, extent_[0], 0.0, extent_[1])
                   : Box::interval(0.0, extent_[0]);
}

Grid build_grid(int dimension, const std::vector<double>& extents,
                const std::vector<int>& counts) {
  if (static_cast<int>(extents.size()) < dimension ||
      static_cast<int>(counts.size()) < dimension) {
    throw std::invalid_argument("build_grid: need one extent and count per axis");
  }
  std::array<double, 2> e{extents[0], dimension == 2 ? extents[1] : 1.0};
  std::array<int, 2> c{counts[0], dimension == 2 ? counts[1] : 1};
  return Grid(dimension, e, c);
}

void validate_chain(const Grid& grid, const SubdomainChain& chain) {
  if (chain.omegas.size() != 5) throw std::invalid_argument("chain: expected 5 boxes");
  const double margin = 2.0 * std::max(grid.spacing(0),
                                       grid.dimension() == 2 ? grid.spacing(1) : 0.0);
  const Box cap = chain.omega_c.intersect(chain.omega_d);
  if (cap.empty()) throw std::invalid_argument("chain: ω_c ∩ ω_d is empty");
  for (int a = 0; a < grid.dimension(); ++a) {
    if (std::abs(cap.lo[a] - chain.omegas[4].lo[a]) > 1e-12 ||
        std::abs(cap.hi[a] - chain.omegas[4].hi[a]) > 1e-12) {
      throw std::invalid_argument("chain: ω4 must equal ω_c ∩ ω_d");
    }
  }
  for (int j = 0; j + 1 < 5; ++j) {
    if (chain.omegas[j].empty()) throw std::invalid_argument("chain: empty box");
    if (!chain.omegas[j].nested_in(chain.omegas[j + 1], margin)) {
      throw std::invalid_argument("chain: nesting margin below 2h");
    }
  }
  if (!chain.omegas[4].nested_in(grid.domain_box(), margin)) {
    throw std::invalid_argument("chain: ω4 needs a 2h margin to Γ");
  }
}

SubdomainChain make_chain(const Grid& grid, const Box& omega_c, const Box& omega_d,
                          std::vector<Box> inner) {
  SubdomainChain chain;
  chain.omega_c = omega_c;
  chain.omega_d = omega_d;
  chain.omegas = std::move(inner);
  chain.omegas.push_back(omega_c.intersect(omega_d));
  validate_chain(grid, chain);
  return chain;
}

SubdomainChain make_chain_auto(const Grid& grid, const Box& omega_c, const Box& omega_d) {
  const Box cap = omega_c.intersect(omega_d);
  if (cap.empty()) throw std::invalid_argument("make_chain_auto: ω_c ∩ ω_d is empty");
  double min_width = cap.width(0);
  if (grid.dimension() == 2) min_width = std::min(min_width, cap.width(1));
  const double gap = min_width / 12.0;
  const double two_h = 2.0 * std::max(grid.spacing(0),
                                      grid.dimension() == 2 ? grid.spacing(1) : 0.0);
  if (gap < two_h) {
    throw std::invalid_argument("make_chain_auto: grid too coarse for nested chain");
  }
  std::vector<Box> inner;
  for (int j = 0; j < 4; ++j) inner.push_back(cap.shrink((4 - j) * gap));
  return make_chain(grid, omega_c, omega_d, std::move(inner));
}

namespace {

// 1 on [plo,phi], smooth ramp to 0 at [slo,plo] and [phi,shi].
double plateau_ramp(double x, double slo, double plo, double phi, double shi) {
  if (x <= slo || x >= shi) return 0.0;
  if (x >= plo && x <= phi) return 1.0;
  if (x < plo) return smoothstep01((x - slo) / (plo - slo));
  return smoothstep01((shi - x) / (shi - phi));
}

RealField sample_plateau(const Grid& grid, const Box& plateau, const Box& support) {
  RealField field(grid);
  for (Eigen::Index k = 0; k < grid.num_interior(); ++k) {
    const auto x = grid.point(k);
    double v = 1.0;
    for (int a = 0; a < grid.dimension(); ++a) {
      v *= plateau_ramp(x[a], support.lo[a], plateau.lo[a], plateau.hi[a], support.hi[a]);
    }
    field.values[k] = v;
  }
  return field;
}

}  // namespace

WeightBase build_weight_base(const Grid& grid, double x_star, double p, double q,
                             const Box& omega0) {
  if (grid.dimension() != 1) {
    throw std::invalid_argument("build_weight_base: 1D only");
  }
  if (p < 1.0 || q < 1.0) throw std::invalid_argument("build_weight_base: need p,q >= 1");
  WeightBase base;
  base.grid = grid;
  base.p = p;
  base.q = q;
  base.length = grid.extent(0);
  base.critical_point = p * base.length / (p + q);
  if (std::abs(base.critical_point - x_star) > 1e-9 * base.length) {
    throw std::invalid_argument("build_weight_base: pL/(p+q) does not match x*");
  }
  if (!omega0.contains1d(base.critical_point)) {
    throw std::invalid_argument("build_weight_base: critical point outside ω0");
  }
  base.sup_norm = base.value(base.critical_point);
  base.samples = RealField(grid);
  for (int i = 0; i < grid.count(0); ++i) base.samples.values[i] = base.value(grid.coord(0, i));
  return base;
}

double WeightBase::value(double x) const {
  return std::pow(x, p) * std::pow(length - x, q);
}

double WeightBase::dx(double x) const {
  return std::pow(x, p - 1.0) * std::pow(length - x, q - 1.0) * (p * length - (p + q) * x);
}

double WeightBase::dxx(double x) const {
  double acc = -(p + q) * std::pow(x, p - 1.0) * std::pow(length - x, q - 1.0);
  if (p > 1.0) {
    acc += (p - 1.0) * std::pow(x, p - 2.0) * std::pow(length - x, q - 1.0) *
           (p * length - (p + q) * x);
  }
  if (q > 1.0) {
    acc -= (q - 1.0) * std::pow(x, p - 1.0) * std::pow(length - x, q - 2.0) *
           (p * length - (p + q) * x);
  }
  return acc;
}

RealField build_coefficient(const Grid& grid, const Box& support, double floor_value,
                            CoefficientProfile profile) {
  if (floor_value < 0.0) throw std::invalid_argument("build_coefficient: negative floor");
  if (profile == CoefficientProfile::ConstantOnDomain) {
    RealField field(grid);
    field.values.setConstant(floor_value);
    return field;
  }
  const double skirt0 = 2.0 * grid.spacing(0);
  const double skirt1 = grid.dimension() == 2 ? 2.0 * grid.spacing(1) : 0.0;
  Box outer = support;
  outer.lo[0] -= skirt0;
  outer.hi[0] += skirt0;
  if (grid.dimension() == 2) {
    outer.lo[1] -= skirt1;
    outer.hi[1] += skirt1;
  }
  RealField field = sample_plateau(grid, support, outer);
  field.values *= floor_value;
  return field;
}

CutoffSet build_cutoffs(const Grid& grid, const SubdomainChain& chain, double b, double b0) {
  validate_chain(grid, chain);
  if (!(1.0 < b0 && b0 < b && b <= 2.0)) {
    throw std::invalid_argument("build_cutoffs: need 1 < b0 < b <= 2");
  }
  CutoffSet set;
  set.b = b;
  set.b0 = b0;
  set.eta.reserve(5);
  for (int j = 0; j < 4; ++j) {
    set.eta.push_back(sample_plateau(grid, chain.omega(j), chain.omega(j + 1)));
  }
  // η5 plateaus on ω4 and ramps to zero one cell inside Γ.
  Box support = grid.domain_box();
  support.lo[0] += grid.spacing(0);
  support.hi[0] -= grid.spacing(0);
  if (grid.dimension() == 2) {
    support.lo[1] += grid.spacing(1);
    support.hi[1] -= grid.spacing(1);
  }
  set.eta.push_back(sample_plateau(grid, chain.omega(4), support));
  return set;
}

double CutoffSet::temporal(double s) const {
  const double a = std::abs(s);
  if (a <= b0) return 1.0;
  const double ramp_end = b0 + 0.9 * (b - b0);
  if (a >= ramp_end) return 0.0;
  return smoothstep01((ramp_end - a) / (ramp_end - b0));
}

namespace {

void csv_value(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  out += buf;
}

}  // namespace

std::string field_to_csv(const RealField& field) {
  std::string out = field.grid.dimension() == 2 ? "x,y,value\n" : "x,value\n";
  for (Eigen::Index k = 0; k < field.grid.num_interior(); ++k) {
    const auto x = field.grid.point(k);
    csv_value(out, x[0]);
    if (field.grid.dimension() == 2) {
      out += ',';
      csv_value(out, x[1]);
    }
    out += ',';
    csv_value(out, field.values[k]);
    out += '\n';
  }
  return out;
}

std::string field_to_csv(const ComplexField& field) {
  std::string out = field.grid.dimension() == 2 ? "x,y,re,im\n" : "x,re,im\n";
  for (Eigen::Index k = 0; k < field.grid.num_interior(); ++k) {
    const auto x = field.grid.point(k);
    csv_value(out, x[0]);
    if (field.grid.dimension() == 2) {
      out += ',';
      csv_value(out, x[1]);
    }
    out += ',';
    csv_value(out, field.values[k].real());
    out += ',';
    csv_value(out, field.values[k].imag());
    out += '\n';
  }
  return out;
}

}  // namespace wpl
