#include "gmxa/plates.hpp"

#include <cmath>

namespace gmxa::plates {

Plate::Plate(grassmann::Subspace s, Eigen::VectorXd c, double scale_, double delta)
    : subspace(std::move(s)), center(std::move(c)), scale(scale_), thickness(delta) {
  require(center.size() == subspace.ambient_dim(), "Plate: center dimension mismatch");
  require(scale > 0, "Plate: scale must be positive");
  require(thickness >= 0, "Plate: thickness must be nonnegative");
  const int n = subspace.ambient_dim();
  const int d = subspace.dim();
  frame_.resize(n, n);
  frame_.leftCols(d) = subspace.basis();
  if (d < n) frame_.rightCols(n - d) = subspace.orthogonal_complement().basis();
}

bool Plate::contains(const Eigen::VectorXd& x) const {
  require(x.size() == center.size(), "Plate::contains: dimension mismatch");
  Eigen::VectorXd u = x - center;
  double along = subspace.projection_norm(u);
  if (along > scale) return false;
  double across = std::sqrt(std::max(0.0, u.squaredNorm() - along * along));
  return across < scale * thickness;
}

double Plate::volume() const {
  const int n = ambient_dim(), d = dim();
  return unit_ball_volume(d) * std::pow(scale, d) * unit_ball_volume(n - d) *
         std::pow(scale * thickness, n - d);
}

Eigen::VectorXd Plate::sample_frame_box(Rng& rng) const {
  const int n = ambient_dim(), d = dim();
  Eigen::VectorXd u(n);
  for (int j = 0; j < d; ++j) u(j) = rng.uniform(-scale, scale);
  for (int j = d; j < n; ++j) u(j) = rng.uniform(-scale * thickness, scale * thickness);
  return center + frame_ * u;
}

double Plate::frame_box_volume() const {
  const int n = ambient_dim(), d = dim();
  return std::pow(2.0 * scale, d) * std::pow(2.0 * scale * thickness, n - d);
}

Eigen::VectorXd Plate::sample_inside(Rng& rng) const {
  const int n = ambient_dim(), d = dim();
  auto ball = [&rng](int k, double radius) {
    Eigen::VectorXd p(k);
    while (true) {
      for (int i = 0; i < k; ++i) p(i) = rng.uniform(-1.0, 1.0);
      if (p.squaredNorm() <= 1.0) break;
    }
    return Eigen::VectorXd(radius * p);
  };
  Eigen::VectorXd u(n);
  u.head(d) = ball(d, scale);
  u.tail(n - d) = ball(n - d, scale * thickness);
  return center + frame_ * u;
}

double intersection_volume_bound(const Plate& p, const Plate& q) {
  require(p.ambient_dim() == q.ambient_dim() && p.dim() == q.dim(),
          "intersection_volume_bound: shape mismatch");
  require(std::abs(p.thickness - q.thickness) <= 1e-12 * std::max(1.0, p.thickness),
          "intersection_volume_bound: thickness mismatch");
  require(std::abs(p.scale - q.scale) <= 1e-12 * p.scale,
          "intersection_volume_bound: scale mismatch");
  const int n = p.ambient_dim(), d = p.dim();
  const double delta = p.thickness;
  auto pd = grassmann::principal_angles(p.subspace, q.subspace);
  const int m = pd.intersection_dim;
  double bound = std::pow(delta, n - m);
  for (int j = m; j < d; ++j) bound /= std::max(delta, pd.angles(j));
  return bound * std::pow(p.scale, n);
}

McVolume mc_intersection_volume(const Plate& p, const Plate& q, std::int64_t samples,
                                std::uint64_t seed) {
  require(samples >= 1000, "mc_intersection_volume: need at least 1e3 samples");
  McVolume out;
  out.samples = samples;
  // fast path: disjoint circumscribed balls
  if ((p.center - q.center).norm() > p.circumradius() + q.circumradius()) return out;

  const std::int64_t block = 16384;
  const std::int64_t blocks = (samples + block - 1) / block;
  std::vector<std::int64_t> hits(blocks, 0);
  Rng master(seed);
  parallel_for(blocks, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t b = lo; b < hi; ++b) {
      Rng rng = master.derive(static_cast<std::uint64_t>(b));
      std::int64_t count = std::min(block, samples - b * block);
      std::int64_t h = 0;
      for (std::int64_t i = 0; i < count; ++i) {
        Eigen::VectorXd x = p.sample_frame_box(rng);
        if (p.contains(x) && q.contains(x)) ++h;
      }
      hits[b] = h;
    }
  });
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  out.hits = total;
  const double vol = p.frame_box_volume();
  const double phat = static_cast<double>(total) / static_cast<double>(samples);
  out.estimate = vol * phat;
  out.stderr_ = vol * std::sqrt(std::max(0.0, phat * (1.0 - phat) / static_cast<double>(samples)));
  return out;
}

bool CoveringDilate::contains(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = (x - base.center) / base.scale;
  const int d = base.dim();
  const int m = angles.intersection_dim;
  const double delta = base.thickness;
  for (int j = 0; j < d; ++j)
    if (std::abs(angles.basis_s.col(j).dot(y)) >= dilation) return false;
  for (int j = m; j < d; ++j) {
    const Eigen::VectorXd z = angles.basis_z.col(d + j - m);
    if (std::abs(z.dot(y)) >= dilation * std::max(delta, angles.angles(j))) return false;
  }
  // complement of zeta = span{sigma, tau}
  Eigen::VectorXd res = y - angles.basis_z * (angles.basis_z.transpose() * y);
  return res.norm() < dilation * delta;
}

double CoveringDilate::box_volume() const {
  // Product of side lengths, the complement of span{sigma, tau} counted as
  // a box of half-width dilation * delta per axis.
  const int n = base.ambient_dim(), d = base.dim();
  const int m = angles.intersection_dim;
  const double delta = base.thickness;
  double vol = std::pow(2.0 * dilation * base.scale, n);
  for (int j = m; j < d; ++j) vol *= std::max(delta, angles.angles(j));
  for (int j = 0; j < n - (2 * d - m); ++j) vol *= delta;
  return vol;
}

CoveringDilate covering_dilate(const Plate& p, const grassmann::Subspace& tau, double dilation) {
  require(tau.ambient_dim() == p.ambient_dim() && tau.dim() == p.dim(),
          "covering_dilate: shape mismatch");
  CoveringDilate out{p, grassmann::principal_angles(p.subspace, tau), dilation};
  return out;
}

// --- sheared plates --------------------------------------------------------

double ShearedPlate::shear_coord(const Eigen::VectorXd& y) const {
  // t with y in v^perp + (c_I, t):  (y - (c_I, t)) . v = 0
  double num = y.dot(v) - i_center.dot(v.head(n - 1));
  return num / v(n - 1);
}

bool ShearedPlate::base_contains(const Eigen::VectorXd& w) const {
  Eigen::VectorXd local = i_basis.transpose() * (w - i_center);
  return local.cwiseAbs().maxCoeff() <= 0.5 * i_side;
}

bool ShearedPlate::contains(const Eigen::VectorXd& y) const {
  require(y.size() == n, "ShearedPlate::contains: dimension mismatch");
  if (!base_contains(y.head(n - 1))) return false;
  double t = shear_coord(y);
  return t >= k_lo && t <= k_hi;
}

Eigen::VectorXd ShearedPlate::center() const {
  Eigen::VectorXd c(n);
  c.head(n - 1) = i_center;
  c(n - 1) = 0.5 * (k_lo + k_hi);
  return c;
}

ShearedPlate ShearedPlate::dilated_base(double factor) const {
  ShearedPlate out = *this;
  out.i_side = i_side * factor;
  return out;
}

ShearedPlate ShearedPlate::dilated(double factor) const {
  ShearedPlate out = dilated_base(factor);
  double mid = 0.5 * (k_lo + k_hi), half = 0.5 * factor * k_len();
  out.k_lo = mid - half;
  out.k_hi = mid + half;
  return out;
}

ShearedPlate make_sheared_plate(const Eigen::VectorXd& i_center, double i_side, double k_lo,
                                double k_hi, const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  require(n >= 2, "make_sheared_plate: need n >= 2");
  require(i_center.size() == n - 1, "make_sheared_plate: cube center dimension mismatch");
  require(i_side > 0 && k_hi > k_lo, "make_sheared_plate: degenerate extents");
  require(k_hi - k_lo <= i_side * (1 + 1e-12), "make_sheared_plate: |K| must not exceed l_I");
  Eigen::VectorXd unit = v / v.norm();
  if (unit(n - 1) < 0) unit = -unit;
  double tilt = std::acos(std::min(1.0, unit(n - 1)));
  require(tilt <= kMaxShearTilt,
          "make_sheared_plate: direction tilted more than pi/16 off e_n; split the input");
  ShearedPlate out;
  out.n = n;
  out.i_center = i_center;
  out.i_side = i_side;
  out.i_basis = Eigen::MatrixXd::Identity(n - 1, n - 1);
  out.k_lo = k_lo;
  out.k_hi = k_hi;
  out.v = unit;
  return out;
}

ShearedPlate shear_to_vertical(const ShearedPlate& frame, const ShearedPlate& other) {
  require(frame.n == other.n, "shear_to_vertical: dimension mismatch");
  const int n = frame.n;
  const Eigen::VectorXd sf = frame.v.head(n - 1) / frame.v(n - 1);
  const Eigen::VectorXd so = other.v.head(n - 1) / other.v(n - 1);
  Eigen::VectorXd slope = so - sf;  // slope vector of the image direction

  ShearedPlate out = other;
  Eigen::VectorXd dir(n);
  dir.head(n - 1) = slope;
  dir(n - 1) = 1.0;
  out.v = dir / dir.norm();
  // Constant offset between the shear coordinates:
  // g_other(y) = g_img(z) + c_frame . sf - c_other . so + c_other . slope
  double shift = frame.i_center.dot(sf) - other.i_center.dot(so) + other.i_center.dot(slope);
  out.k_lo = other.k_lo - shift;
  out.k_hi = other.k_hi - shift;
  return out;
}

ShearedPlate sheared_vertical_image(const ShearedPlate& frame) {
  return shear_to_vertical(frame, frame);
}

double sheared_slice_measure(const ShearedPlate& hat_q, const ShearedPlate& hat_r, double a,
                             int quad_per_axis) {
  require(hat_q.n == hat_r.n, "sheared_slice_measure: dimension mismatch");
  const int n = hat_r.n;
  require((hat_r.v - Eigen::VectorXd::Unit(n, n - 1)).norm() <= 1e-9,
          "sheared_slice_measure: hat_r must be vertical (shear first)");
  const int d = n - 1;
  const double step = hat_r.i_side / quad_per_axis;
  std::int64_t cells = 1;
  for (int j = 0; j < d; ++j) cells *= quad_per_axis;

  double measure = parallel_sum(cells, [&](std::int64_t idx) {
    Eigen::VectorXd local(d);
    std::int64_t rem = idx;
    for (int j = 0; j < d; ++j) {
      local(j) = (-0.5 * hat_r.i_side) + (rem % quad_per_axis + 0.5) * step;
      rem /= quad_per_axis;
    }
    Eigen::VectorXd w = hat_r.i_center + hat_r.i_basis * local;
    Eigen::VectorXd y(n);
    y.head(d) = w;
    y(d) = a;
    return hat_q.contains(y) ? 1.0 : 0.0;
  });
  return measure * std::pow(step, d);
}

}  // namespace gmxa::plates
