#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "gmxa/common.hpp"
#include "gmxa/grassmann.hpp"

namespace gmxa::plates {

/// A translated, scaled, thickened subspace neighborhood:
/// center + scale * T_delta(sigma), long-closed / short-open.
struct Plate {
  grassmann::Subspace subspace;
  Eigen::VectorXd center;
  double scale = 1.0;      // long-direction radius
  double thickness = 0.0;  // delta; short-direction radius is scale * delta

  Plate(grassmann::Subspace s, Eigen::VectorXd c, double scale_, double delta);

  int ambient_dim() const { return subspace.ambient_dim(); }
  int dim() const { return subspace.dim(); }

  bool contains(const Eigen::VectorXd& x) const;

  /// Exact Lebesgue volume: w_d s^d * w_{n-d} (s delta)^{n-d}.
  double volume() const;

  /// Radius of the circumscribed ball around the center.
  double circumradius() const { return scale * std::sqrt(1.0 + thickness * thickness); }

  /// Uniform sample from the plate's own circumscribed (rotated) box
  /// [-s, s]^d x [-s delta, s delta]^(n-d) in the plate frame.
  Eigen::VectorXd sample_frame_box(Rng& rng) const;

  /// Volume of that box.
  double frame_box_volume() const;

  /// Uniform sample from the plate itself (product of balls).
  Eigen::VectorXd sample_inside(Rng& rng) const;

  /// Full orthonormal frame: first d columns span sigma, rest its complement.
  const Eigen::MatrixXd& frame() const { return frame_; }

 private:
  Eigen::MatrixXd frame_;
};

/// Paper-style intersection volume bound (no implicit constant):
/// s^n * delta^(n-m) * prod_{j>m} max(delta, theta_j)^{-1}.
double intersection_volume_bound(const Plate& p, const Plate& q);

struct McVolume {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::int64_t samples = 0;
  std::int64_t hits = 0;
};

/// Hit-or-miss Monte Carlo volume of p's frame box against p and q; block
/// parallel with per-block seeds, deterministic given (seed, samples).
McVolume mc_intersection_volume(const Plate& p, const Plate& q, std::int64_t samples,
                                std::uint64_t seed);

/// The dilate T_delta^{+tau}(sigma) anchored at a base plate. The default
/// dilation constant is 5: the triangle-inequality chain for arbitrary
/// intersecting translates needs |x.z_j| <= 2 sin(theta_j) + 3 delta, which
/// the constant-3 box does not cover when delta <= theta_j < 3 delta.
struct CoveringDilate {
  Plate base;
  grassmann::PrincipalDecomposition angles;  // of (sigma, tau)
  double dilation = 5.0;

  bool contains(const Eigen::VectorXd& x) const;
  /// Volume of the dilate box (product of side lengths).
  double box_volume() const;
};

CoveringDilate covering_dilate(const Plate& p, const grassmann::Subspace& tau,
                               double dilation = 5.0);

constexpr double kMaxShearTilt = 0.19634954084936207;  // pi/16

/// Sheared codimension-1 plate P(I, K, v): the union over t in K of the
/// graph slices p(I, t, v). I is a d-cube in e_n^perp (optionally rotated
/// by i_basis), K an interval, v a unit vector near e_n.
struct ShearedPlate {
  int n = 0;
  Eigen::VectorXd i_center;  // in e_n^perp coordinates (size n-1)
  double i_side = 0.0;
  Eigen::MatrixXd i_basis;   // (n-1)x(n-1) orthonormal cube axes
  double k_lo = 0.0, k_hi = 0.0;
  Eigen::VectorXd v;         // unit, v_n > 0

  int base_dim() const { return n - 1; }
  double k_len() const { return k_hi - k_lo; }
  double volume() const { return std::pow(i_side, n - 1) * k_len(); }

  /// Shear coordinate: y lies on slice p(I, t, v) iff shear_coord(y) == t.
  double shear_coord(const Eigen::VectorXd& y) const;
  bool base_contains(const Eigen::VectorXd& w) const;  // w in e_n^perp coords
  bool contains(const Eigen::VectorXd& y) const;

  Eigen::VectorXd center() const;  // (c_I, c_K) as a point of R^n

  /// Tangential dilation about the center: scales I (and K if with_k).
  ShearedPlate dilated_base(double factor) const;
  ShearedPlate dilated(double factor) const;  // scales both I and K
};

/// Validated constructor; rejects directions tilted more than pi/16 off e_n.
ShearedPlate make_sheared_plate(const Eigen::VectorXd& i_center, double i_side, double k_lo,
                                double k_hi, const Eigen::VectorXd& v);

/// Measure-preserving shear taking `frame` to the vertical plate
/// P(I, K, e_n); `other` is mapped to the sheared plate with the same base.
ShearedPlate shear_to_vertical(const ShearedPlate& frame, const ShearedPlate& other);
ShearedPlate sheared_vertical_image(const ShearedPlate& frame);

/// Measure of hat_q cut by the slice I_{hat_r} x {a}; `hat_r` must be
/// vertical (v = e_n). Midpoint quadrature over I_{hat_r}.
double sheared_slice_measure(const ShearedPlate& hat_q, const ShearedPlate& hat_r, double a,
                             int quad_per_axis = 256);

}  // namespace gmxa::plates
