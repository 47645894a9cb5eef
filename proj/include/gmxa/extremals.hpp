#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gmxa/grid.hpp"
#include "gmxa/grassmann.hpp"

namespace gmxa::extremals {

/// f(x) = |x|^{-1} 1_{1 <= |x| <= rho} sampled on a planar grid with
/// rho = 0.75 * box_halfwidth; the box must contain B(2N).
GridFunction radial_log_example(int n_param, double box_halfwidth, int samples_per_axis);
double radial_log_outer_radius(int n_param, double box_halfwidth);

struct Tube {
  Eigen::Vector2d center;
  double angle = 0.0;   // direction, radians from +x
  double length = 1.0;
  double width = 0.0;   // full width

  bool contains(const Eigen::Vector2d& p) const;
  /// Intersection of the tube with the line {x + t u : t in R}; returns
  /// [t0, t1] (empty when t0 > t1).
  void line_range(const Eigen::Vector2d& x, const Eigen::Vector2d& u, double& t0, double& t1) const;
};

struct TubeFamily {
  std::vector<Tube> tubes;
  double delta = 0.0;     // tube width = direction net mesh
  double arc_lo = 0.0, arc_hi = 0.0;

  int size() const { return static_cast<int>(tubes.size()); }
  bool contains(const Eigen::Vector2d& p) const;

  /// Union area by a 1D interval sweep over `lines` horizontal cuts.
  double union_area(int lines = 8192) const;

  /// Exact average of the union indicator over the segment of half-length s
  /// through x in direction `angle` (interval arithmetic, no grid).
  double line_average(const Eigen::Vector2d& x, double angle, double s) const;

  /// Same centers and directions, lengths scaled by `factor` (e.g. T*).
  TubeFamily dilated_length(double factor) const;
  TubeFamily rotated(double phi) const;

  void bounding_box(Eigen::Vector2d& lo, Eigen::Vector2d& hi) const;
  std::string to_json() const;
};

/// Perron-tree bisection family: 2^k tubes of width delta = 2^-k and length 1
/// whose directions form the uniform delta-net of the arc, translated so the
/// union area decays like 1/k. Requires (arc length) / 2^k in [delta, 2delta].
TubeFamily perron_kakeya(double delta, double arc_lo, double arc_hi);

/// Indicator of the tube union sampled on a grid.
GridFunction rasterize_tubes(const TubeFamily& family, const Eigen::Vector2d& lo,
                             const Eigen::Vector2d& hi, double h);

/// The C_M construction: omega in Gr(d-1,n), a c/M-mesh net E_M on the unit
/// sphere of omega^perp (implicit ring net), Sigma_M = {span(omega, v)}, and
/// membership predicates for C_M and U_M.
struct CMConstruction {
  int d = 0, n = 0;
  double m_scale = 0.0;   // M
  double mesh = 0.0;      // net mesh, kCmMeshNumerator / M
  bool mesh_warning = false;
  grassmann::Subspace omega;
  Eigen::MatrixXd e_basis;  // n x (n-d+1), orthonormal basis of omega^perp

  std::uint64_t ring_seed_ = 0;

  std::int64_t net_count() const;
  /// Nearest net member to the direction of x - P_omega x (unit, in R^n).
  Eigen::VectorXd nearest_net_direction(const Eigen::VectorXd& x) const;
  grassmann::Subspace sigma_of(const Eigen::VectorXd& v) const;

  bool in_cm(const Eigen::VectorXd& x) const;
  bool in_um(const Eigen::VectorXd& x) const;
  double cm_volume() const;  // exact cylinder volume

  /// Thin average of 1_{C_M} over x + (M B_n with sigma), by jittered
  /// stratified sampling of the d-disc.
  double thin_average_cm(const grassmann::Subspace& sigma, const Eigen::VectorXd& x,
                         std::int64_t strata_per_axis, Rng& rng) const;

  /// d-dimensional measure of [x + T_0^M(sigma)] cap C_M (slab lemma check).
  double slab_measure(const grassmann::Subspace& sigma, const Eigen::VectorXd& x,
                      std::int64_t strata_per_axis, Rng& rng) const;

  /// Max of thin averages over net directions within `window` of the radial
  /// direction of x, sampled at `window_mesh` spacing. Directions tilted
  /// further than the window cannot reach the unit cylinder from x.
  double windowed_max_average(const Eigen::VectorXd& x, double window, double window_mesh,
                              std::int64_t strata_per_axis, Rng& rng) const;

  std::string manifest_json() const;
};

constexpr double kCmMeshNumerator = 0.00390625;  // 2^-8, the slab-lemma tilt tolerance
constexpr double kCmRhoLo = 0.00390625;          // 2^-8 (times M)
constexpr double kCmRhoHi = 0.0078125;           // 2^-7 (times M)
constexpr double kCmSlabConstant = 0.0009765625; // 2^-10

CMConstruction cm_construction(int d, int n, double m_scale, std::uint64_t seed);

/// f(x) = f2(x1, x2) * 1_{[-1/2,1/2]^{n-2}}(x3..xn) on a product grid.
GridFunction tensor_extend(const GridFunction& f2, int n);

}  // namespace gmxa::extremals
