// Grids, subdomain chains, coefficient fields and cut-off functions for the
// coupled wave-plate lab. Domains are intervals (1D) or axis-aligned
// rectangles (2D); all fields are sampled on interior tensor-product points
// with homogeneous Dirichlet data implied on the boundary.
#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

namespace wpl {

using Complex = std::complex<double>;

// Quintic smooth step on [0,1]; C^2 junctions at both ends.
double smoothstep01(double t);

// Axis-aligned open box. Only the first `dimension` axes are meaningful.
struct Box {
  int dimension = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};

  static Box interval(double a, double b);
  static Box rectangle(double ax, double bx, double ay, double by);

  double width(int axis) const { return hi[axis] - lo[axis]; }
  bool empty() const;
  bool contains(const std::array<double, 2>& x) const;
  bool contains1d(double x) const { return contains({x, 0.0}); }
  // this ⊂ outer with at least `margin` slack on every axis and side.
  bool nested_in(const Box& outer, double margin) const;
  Box intersect(const Box& other) const;
  Box shrink(double margin) const;
  std::array<double, 2> center() const;
};

// Tensor-product discretization of Ω = (0,L1) [ × (0,L2) ]. Stores interior
// point counts; spacing h = L/(n+1). The boundary mask lives on the closed
// grid of (n+2) nodes per axis and marks exactly the nodes on Γ.
class Grid {
 public:
  Grid() = default;
  Grid(int dimension, std::array<double, 2> extent, std::array<int, 2> count);

  static Grid line(double length, int n);
  static Grid rectangle(double lx, double ly, int nx, int ny);

  int dimension() const { return dim_; }
  double extent(int axis) const { return extent_[axis]; }
  int count(int axis) const { return count_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  Eigen::Index num_interior() const;
  double cell_volume() const;

  // Interior coordinate x_i = (i+1)h, i in [0, count).
  double coord(int axis, int i) const { return (i + 1) * spacing_[axis]; }
  // Row-major flatten, axis 0 fastest.
  Eigen::Index flat(int i, int j = 0) const;
  std::array<int, 2> unflatten(Eigen::Index k) const;
  std::array<double, 2> point(Eigen::Index k) const;
  bool same_layout(const Grid& other) const;

  // Mask over the closed grid, axis 0 fastest, (n0+2)*(n1+2) entries.
  const std::vector<std::uint8_t>& boundary_mask() const { return boundary_mask_; }
  Box domain_box() const;

 private:
  int dim_ = 1;
  std::array<double, 2> extent_{1.0, 1.0};
  std::array<int, 2> count_{3, 1};
  std::array<double, 2> spacing_{0.25, 0.5};
  std::vector<std::uint8_t> boundary_mask_;
};

// Grid-sampled scalar function over interior points.
template <typename Scalar>
struct BasicField {
  Grid grid;
  Eigen::Vector<Scalar, Eigen::Dynamic> values;

  BasicField() = default;
  BasicField(const Grid& g)
      : grid(g), values(Eigen::Vector<Scalar, Eigen::Dynamic>::Zero(g.num_interior())) {}
  BasicField(const Grid& g, Eigen::Vector<Scalar, Eigen::Dynamic> v)
      : grid(g), values(std::move(v)) {}
};

using RealField = BasicField<double>;
using ComplexField = BasicField<Complex>;

// Nested observation subdomains ω0 ⊂ ω1 ⊂ ω2 ⊂ ω3 ⊂ ω4 = ω_c ∩ ω_d.
struct SubdomainChain {
  std::vector<Box> omegas;  // size 5, omegas[4] = ω_c ∩ ω_d
  Box omega_c;
  Box omega_d;

  const Box& omega(int j) const { return omegas.at(static_cast<std::size_t>(j)); }
};

// Strict-nesting validation against a grid (margins >= 2h per axis; the
// outermost box also needs a 2h margin to Γ so its cut-off can ramp inside Ω).
void validate_chain(const Grid& grid, const SubdomainChain& chain);

SubdomainChain make_chain(const Grid& grid, const Box& omega_c, const Box& omega_d,
                          std::vector<Box> inner);
// Equal-margin chain synthesized inside ω_c ∩ ω_d.
SubdomainChain make_chain_auto(const Grid& grid, const Box& omega_c, const Box& omega_d);

// Spatial cut-offs η_{j+1} (plateau ω_j, support in ω_{j+1}; the last one
// ramps to zero inside Ω) plus the temporal profile φ_s.
struct CutoffSet {
  std::vector<RealField> eta;  // eta[j] = η_{j+1}, j = 0..4
  double b = 0.0;
  double b0 = 0.0;

  // φ_s(s): 1 on |s| <= b0, smooth ramp, 0 on the outer tenth of (b0, b).
  double temporal(double s) const;
};

Grid build_grid(int dimension, const std::vector<double>& extents,
                const std::vector<int>& counts);

// Carleman base ψ̂(x) = x^p (L-x)^q on a 1D grid, with closed-form
// derivatives and sup norm. Positive inside, vanishing at 0 and L; its only
// critical point pL/(p+q) must lie in ω0.
struct WeightBase {
  Grid grid;
  double p = 1.0;
  double q = 1.0;
  double length = 0.0;
  double critical_point = 0.0;
  double sup_norm = 0.0;  // ψ̂(critical_point), exact
  RealField samples;

  double value(double x) const;
  double dx(double x) const;
  double dxx(double x) const;
};

WeightBase build_weight_base(const Grid& grid, double x_star, double p, double q,
                             const Box& omega0);

enum class CoefficientProfile { PlateauWithSkirt, ConstantOnDomain };

// Nonnegative bounded coefficient with value >= floor on `support`; the
// plateau profile ramps to zero over a 2h skirt outside the box.
RealField build_coefficient(const Grid& grid, const Box& support, double floor_value,
                            CoefficientProfile profile);

CutoffSet build_cutoffs(const Grid& grid, const SubdomainChain& chain, double b, double b0);

// CSV export: coordinate columns then value (17 significant digits).
std::string field_to_csv(const RealField& field);
std::string field_to_csv(const ComplexField& field);

}  // namespace wpl
