#include "gmxa/extremals.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

namespace gmxa::extremals {

GridFunction radial_log_example(int n_param, double box_halfwidth, int samples_per_axis) {
  require(n_param >= 1, "radial_log_example: N >= 1");
  require(box_halfwidth >= 2.0 * n_param - 1e-9,
          "radial_log_example: grid box must contain B(2N)");
  const double rho = radial_log_outer_radius(n_param, box_halfwidth);
  const double h = 2.0 * box_halfwidth / (samples_per_axis - 1);
  Eigen::VectorXd origin(2);
  origin << -box_halfwidth, -box_halfwidth;
  return GridFunction::from_function(
      {samples_per_axis, samples_per_axis}, origin, h, [rho](const Eigen::VectorXd& x) {
        double r = x.norm();
        return (r >= 1.0 && r <= rho) ? 1.0 / r : 0.0;
      });
}

double radial_log_outer_radius(int n_param, double box_halfwidth) {
  (void)n_param;
  return 0.75 * box_halfwidth;
}

// --- tubes -------------------------------------------------------------------

namespace {

// x-interval of {x : lo <= coef * x + off <= hi}; empty -> (1, 0)
inline void slab_interval(double coef, double off, double lo, double hi, double& a, double& b) {
  if (std::abs(coef) < 1e-15) {
    if (off >= lo && off <= hi) {
      a = -1e300;
      b = 1e300;
    } else {
      a = 1.0;
      b = 0.0;
    }
    return;
  }
  a = (lo - off) / coef;
  b = (hi - off) / coef;
  if (a > b) std::swap(a, b);
}

double interval_union_length(std::vector<std::pair<double, double>>& iv) {
  if (iv.empty()) return 0.0;
  std::sort(iv.begin(), iv.end());
  double total = 0.0, lo = iv[0].first, hi = iv[0].second;
  for (std::size_t i = 1; i < iv.size(); ++i) {
    if (iv[i].first > hi) {
      total += hi - lo;
      lo = iv[i].first;
      hi = iv[i].second;
    } else {
      hi = std::max(hi, iv[i].second);
    }
  }
  return total + (hi - lo);
}

}  // namespace

bool Tube::contains(const Eigen::Vector2d& p) const {
  Eigen::Vector2d u(std::cos(angle), std::sin(angle));
  Eigen::Vector2d rel = p - center;
  double along = rel.dot(u);
  double across = -rel.x() * u.y() + rel.y() * u.x();
  return std::abs(along) <= 0.5 * length && std::abs(across) <= 0.5 * width;
}

void Tube::line_range(const Eigen::Vector2d& x, const Eigen::Vector2d& u, double& t0,
                      double& t1) const {
  Eigen::Vector2d a(std::cos(angle), std::sin(angle));
  Eigen::Vector2d perp(-a.y(), a.x());
  Eigen::Vector2d rel = x - center;
  double a0, a1, b0, b1;
  slab_interval(u.dot(a), rel.dot(a), -0.5 * length, 0.5 * length, a0, a1);
  slab_interval(u.dot(perp), rel.dot(perp), -0.5 * width, 0.5 * width, b0, b1);
  t0 = std::max(a0, b0);
  t1 = std::min(a1, b1);
}

bool TubeFamily::contains(const Eigen::Vector2d& p) const {
  for (const auto& t : tubes)
    if (t.contains(p)) return true;
  return false;
}

void TubeFamily::bounding_box(Eigen::Vector2d& lo, Eigen::Vector2d& hi) const {
  lo.setConstant(1e300);
  hi.setConstant(-1e300);
  for (const auto& t : tubes) {
    double r = 0.5 * std::hypot(t.length, t.width);
    lo = lo.cwiseMin(t.center.array().matrix() - Eigen::Vector2d::Constant(r));
    hi = hi.cwiseMax(t.center.array().matrix() + Eigen::Vector2d::Constant(r));
  }
}

double TubeFamily::union_area(int lines) const {
  Eigen::Vector2d lo, hi;
  bounding_box(lo, hi);
  const double dy = (hi.y() - lo.y()) / lines;
  const Eigen::Vector2d ex(1.0, 0.0);
  return parallel_sum(lines, [&](std::int64_t i) {
           double y = lo.y() + (i + 0.5) * dy;
           std::vector<std::pair<double, double>> iv;
           iv.reserve(tubes.size());
           for (const auto& t : tubes) {
             double t0, t1;
             t.line_range(Eigen::Vector2d(0.0, y), ex, t0, t1);
             if (t0 <= t1) iv.emplace_back(t0, t1);
           }
           return interval_union_length(iv);
         }) * dy;
}

double TubeFamily::line_average(const Eigen::Vector2d& x, double angle, double s) const {
  Eigen::Vector2d u(std::cos(angle), std::sin(angle));
  std::vector<std::pair<double, double>> iv;
  for (const auto& t : tubes) {
    double t0, t1;
    t.line_range(x, u, t0, t1);
    t0 = std::max(t0, -s);
    t1 = std::min(t1, s);
    if (t0 <= t1) iv.emplace_back(t0, t1);
  }
  return interval_union_length(iv) / (2.0 * s);
}

TubeFamily TubeFamily::dilated_length(double factor) const {
  TubeFamily out = *this;
  for (auto& t : out.tubes) t.length *= factor;
  return out;
}

TubeFamily TubeFamily::rotated(double phi) const {
  TubeFamily out = *this;
  Eigen::Rotation2D<double> rot(phi);
  for (auto& t : out.tubes) {
    t.center = rot * t.center;
    t.angle += phi;
  }
  out.arc_lo += phi;
  out.arc_hi += phi;
  return out;
}

std::string TubeFamily::to_json() const {
  nlohmann::json j;
  j["delta"] = delta;
  j["arc"] = {arc_lo, arc_hi};
  auto arr = nlohmann::json::array();
  for (const auto& t : tubes)
    arr.push_back({{"center", {t.center.x(), t.center.y()}},
                   {"angle", t.angle},
                   {"length", t.length},
                   {"width", t.width}});
  j["tubes"] = arr;
  return j.dump();
}

namespace {

// merge parameter at tree level l (1 = leaf pairs) of a depth-k tree
double perron_alpha(int level, int depth) {
  (void)depth;
  return static_cast<double>(level + 1) / (level + 2);
}

struct HeartSpan {
  double left, width;
};

// Recursively translate leaf blocks; hearts shrink by alpha per level.
HeartSpan perron_merge(std::vector<double>& offsets, const std::vector<double>& base, int lo,
                       int hi, int level, int depth) {
  if (hi - lo == 1) return {base[lo], base[lo + 1] - base[lo]};
  int mid = (lo + hi) / 2;
  HeartSpan h1 = perron_merge(offsets, base, lo, mid, level - 1, depth);
  HeartSpan h2 = perron_merge(offsets, base, mid, hi, level - 1, depth);
  double alpha = perron_alpha(level, depth);
  double target_right = h1.left + alpha * (h1.width + h2.width);
  double shift = target_right - (h2.left + h2.width);
  for (int j = mid; j < hi; ++j) offsets[j] += shift;
  return {h1.left, alpha * (h1.width + h2.width)};
}

}  // namespace

TubeFamily perron_kakeya(double delta, double arc_lo, double arc_hi) {
  int k = static_cast<int>(std::lround(-std::log2(delta)));
  require(k >= 2 && std::abs(std::ldexp(1.0, -k) - delta) <= 1e-12 * delta,
          "perron_kakeya: delta must be 2^-k with k >= 2");
  require(arc_hi > arc_lo, "perron_kakeya: empty arc");
  const int leaves = 1 << k;
  const double arc = arc_hi - arc_lo;
  const double gap = arc / leaves;
  require(gap >= delta - 1e-12 && gap <= 2 * delta + 1e-12,
          "perron_kakeya: need (arc length)/2^k within [delta, 2 delta]");

  // construction frame: apexes on y = 0, base line y = 2, angles from +y.
  // Height-2 triangles keep their width above delta on the upper half, so a
  // unit tube inscribed along the axis of the upper half stays inside.
  const double height = 2.0;
  std::vector<double> base(leaves + 1);
  for (int j = 0; j <= leaves; ++j) base[j] = height * std::tan(-0.5 * arc + j * gap);
  std::vector<double> offsets(leaves, 0.0);
  perron_merge(offsets, base, 0, leaves, k, k);

  TubeFamily fam;
  fam.delta = delta;
  fam.arc_lo = arc_lo;
  fam.arc_hi = arc_hi;
  fam.tubes.reserve(leaves);
  for (int j = 0; j < leaves; ++j) {
    double alpha_dir = -0.5 * arc + (j + 0.5) * gap;  // exact uniform net, from +y
    Eigen::Vector2d u(std::sin(alpha_dir), std::cos(alpha_dir));
    double reach = height / std::cos(alpha_dir);  // apex-to-base distance along axis
    Tube t;
    t.center = Eigen::Vector2d(offsets[j], 0.0) + (reach - 0.5) * u;
    t.angle = 0.5 * kPi - alpha_dir;
    t.length = 1.0;
    t.width = delta;
    fam.tubes.push_back(t);
  }
  // rotate so tube directions sit on the requested arc
  double current_center = 0.5 * kPi;  // mean of pi/2 - alpha over symmetric alphas
  double target_center = 0.5 * (arc_lo + arc_hi);
  return fam.rotated(target_center - current_center);
}

GridFunction rasterize_tubes(const TubeFamily& family, const Eigen::Vector2d& lo,
                             const Eigen::Vector2d& hi, double h) {
  int nx = static_cast<int>(std::floor((hi.x() - lo.x()) / h)) + 1;
  int ny = static_cast<int>(std::floor((hi.y() - lo.y()) / h)) + 1;
  Eigen::VectorXd origin(2);
  origin << lo.x(), lo.y();
  GridFunction g({nx, ny}, origin, h);
  parallel_for(g.size(), [&](std::int64_t lo_i, std::int64_t hi_i) {
    for (std::int64_t i = lo_i; i < hi_i; ++i) {
      Eigen::VectorXd p = g.point_of(i);
      g.values[i] = family.contains(Eigen::Vector2d(p(0), p(1))) ? 1.0 : 0.0;
    }
  });
  return g;
}

// --- C_M construction --------------------------------------------------------

namespace {

// ring nets on the unit sphere of dimension sphere_dim (1 = circle, 2 = S^2),
// restricted to a projective fundamental domain
struct RingNet {
  int sphere_dim = 1;
  double mesh = 0.0;
  double offset = 0.0;

  std::int64_t count() const {
    if (sphere_dim == 1) return static_cast<std::int64_t>(std::ceil(kPi / mesh));
    std::int64_t total = 0;
    std::int64_t rings = static_cast<std::int64_t>(std::ceil(0.5 * kPi / mesh));
    for (std::int64_t i = 0; i < rings; ++i) {
      double theta = (i + 0.5) * (0.5 * kPi / rings);
      total += std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                             std::ceil(2.0 * kPi * std::sin(theta) / mesh)));
    }
    return total;
  }

  // nearest net point to unit vector eta (in sphere coordinates), up to sign
  Eigen::VectorXd nearest(const Eigen::VectorXd& eta) const {
    if (sphere_dim == 1) {
      double phi = std::atan2(eta(1), eta(0)) - offset;
      std::int64_t m = count();
      double step = kPi / m;
      double snapped = std::round((phi - 0.5 * step) / step) * step + 0.5 * step + offset;
      Eigen::VectorXd v(2);
      v << std::cos(snapped), std::sin(snapped);
      return v;
    }
    Eigen::VectorXd e = eta;
    if (e(2) < 0) e = -e;  // projective: upper hemisphere
    std::int64_t rings = static_cast<std::int64_t>(std::ceil(0.5 * kPi / mesh));
    double ring_step = 0.5 * kPi / rings;
    double theta = std::acos(std::min(1.0, std::max(-1.0, e(2))));
    std::int64_t i0 = static_cast<std::int64_t>(std::floor(theta / ring_step));
    double best = 1e300;
    Eigen::VectorXd best_v(3);
    for (std::int64_t i = std::max<std::int64_t>(0, i0 - 1);
         i <= std::min(rings - 1, i0 + 1); ++i) {
      double th = (i + 0.5) * ring_step;
      std::int64_t m = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::ceil(2.0 * kPi * std::sin(th) / mesh)));
      double phi = std::atan2(e(1), e(0)) - offset;
      double step = 2.0 * kPi / m;
      double snapped = std::round((phi - 0.5 * step) / step) * step + 0.5 * step + offset;
      Eigen::VectorXd v(3);
      v << std::sin(th) * std::cos(snapped), std::sin(th) * std::sin(snapped), std::cos(th);
      double dist = std::min((v - e).norm(), (v + e).norm());
      if (dist < best) {
        best = dist;
        best_v = v;
      }
    }
    return best_v;
  }
};

RingNet make_ring_net(int sphere_dim, double mesh, std::uint64_t seed) {
  RingNet net;
  net.sphere_dim = sphere_dim;
  net.mesh = mesh;
  Rng rng(seed * 77 + 5);
  net.offset = rng.uniform(0.0, mesh);
  return net;
}

}  // namespace

CMConstruction cm_construction(int d, int n, double m_scale, std::uint64_t seed) {
  require(d > 1 && d < n, "cm_construction: need 1 < d < n");
  require(n - d + 1 <= 3, "cm_construction: sphere dimension above S^2 not supported");
  require(m_scale > 1, "cm_construction: M must exceed 1");
  CMConstruction out{d,
                     n,
                     m_scale,
                     kCmMeshNumerator / m_scale,
                     m_scale < 256.0,
                     grassmann::Subspace::coordinate(n, d - 1),
                     Eigen::MatrixXd::Identity(n, n).rightCols(n - d + 1),
                     seed};
  return out;
}

std::int64_t CMConstruction::net_count() const {
  return make_ring_net(n - d, mesh, ring_seed_).count();
}

Eigen::VectorXd CMConstruction::nearest_net_direction(const Eigen::VectorXd& x) const {
  Eigen::VectorXd perp = x - omega.project(x);
  double rho = perp.norm();
  require(rho > 0, "nearest_net_direction: x on omega");
  Eigen::VectorXd eta = e_basis.transpose() * (perp / rho);
  Eigen::VectorXd v = make_ring_net(n - d, mesh, ring_seed_).nearest(eta);
  return e_basis * v;
}

grassmann::Subspace CMConstruction::sigma_of(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd b(n, d);
  b.leftCols(d - 1) = omega.basis();
  b.col(d - 1) = v / v.norm();
  return grassmann::Subspace::from_span(b);
}

bool CMConstruction::in_cm(const Eigen::VectorXd& x) const {
  Eigen::VectorXd xo = omega.project(x);
  return xo.norm() <= m_scale && (x - xo).norm() <= 1.0;
}

bool CMConstruction::in_um(const Eigen::VectorXd& x) const {
  Eigen::VectorXd xo = omega.project(x);
  double rho = (x - xo).norm();
  return xo.norm() <= 0.5 * m_scale && rho >= kCmRhoLo * m_scale && rho <= kCmRhoHi * m_scale;
}

double CMConstruction::cm_volume() const {
  return unit_ball_volume(d - 1) * std::pow(m_scale, d - 1) * unit_ball_volume(n - d + 1);
}

double CMConstruction::thin_average_cm(const grassmann::Subspace& sigma, const Eigen::VectorXd& x,
                                       std::int64_t strata_per_axis, Rng& rng) const {
  require(sigma.dim() == d, "thin_average_cm: sigma must have dimension d");
  const double step = 2.0 * m_scale / strata_per_axis;
  std::int64_t cells = strata_per_axis * strata_per_axis;
  require(d == 2, "thin_average_cm: d = 2 sampling only");
  double hits = 0, inside = 0;
  for (std::int64_t c = 0; c < cells; ++c) {
    double t0 = -m_scale + (c % strata_per_axis + rng.uniform()) * step;
    double t1 = -m_scale + (c / strata_per_axis + rng.uniform()) * step;
    if (t0 * t0 + t1 * t1 > m_scale * m_scale) continue;
    inside += 1.0;
    Eigen::VectorXd y = x + t0 * sigma.basis().col(0) + t1 * sigma.basis().col(1);
    if (in_cm(y)) hits += 1.0;
  }
  return inside > 0 ? hits / inside : 0.0;
}

double CMConstruction::slab_measure(const grassmann::Subspace& sigma, const Eigen::VectorXd& x,
                                    std::int64_t strata_per_axis, Rng& rng) const {
  double frac = thin_average_cm(sigma, x, strata_per_axis, rng);
  return frac * unit_ball_volume(d) * std::pow(m_scale, d);
}

double CMConstruction::windowed_max_average(const Eigen::VectorXd& x, double window,
                                            double window_mesh, std::int64_t strata_per_axis,
                                            Rng& rng) const {
  Eigen::VectorXd perp = x - omega.project(x);
  double rho = perp.norm();
  if (rho <= 0) return 0.0;
  Eigen::VectorXd eta = perp / rho;
  RingNet net = make_ring_net(n - d, mesh, ring_seed_);

  double best = 0.0;
  auto probe = [&](const Eigen::VectorXd& dir_sphere) {
    Eigen::VectorXd v = e_basis * net.nearest(dir_sphere);
    best = std::max(best, thin_average_cm(sigma_of(v), x, strata_per_axis, rng));
  };

  Eigen::VectorXd eta_s = e_basis.transpose() * eta;
  if (n - d == 1) {
    double phi0 = std::atan2(eta_s(1), eta_s(0));
    int steps = std::max(1, static_cast<int>(std::ceil(window / window_mesh)));
    for (int i = -steps; i <= steps; ++i) {
      Eigen::VectorXd dir(2);
      dir << std::cos(phi0 + i * window_mesh), std::sin(phi0 + i * window_mesh);
      probe(dir);
    }
  } else {
    // local tangent grid around eta on S^2
    Eigen::Vector3d e3 = eta_s.head<3>();
    Eigen::Vector3d a = std::abs(e3.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    Eigen::Vector3d t1 = e3.cross(a).normalized();
    Eigen::Vector3d t2 = e3.cross(t1);
    int steps = std::max(1, static_cast<int>(std::ceil(window / window_mesh)));
    for (int i = -steps; i <= steps; ++i)
      for (int j = -steps; j <= steps; ++j) {
        Eigen::Vector3d dir =
            (e3 + i * window_mesh * t1 + j * window_mesh * t2).normalized();
        probe(dir);
      }
  }
  return best;
}

std::string CMConstruction::manifest_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["n"] = n;
  j["M"] = m_scale;
  j["mesh"] = mesh;
  j["mesh_warning"] = mesh_warning;
  j["net_count"] = net_count();
  auto basis = nlohmann::json::array();
  for (int c = 0; c < omega.dim(); ++c)
    for (int r = 0; r < n; ++r) basis.push_back(omega.basis()(r, c));
  j["omega_basis"] = basis;
  j["cm_volume"] = cm_volume();
  return j.dump(2);
}

GridFunction tensor_extend(const GridFunction& f2, int n) {
  require(f2.n == 2, "tensor_extend: planar input expected");
  require(n >= 3, "tensor_extend: need n >= 3");
  const int per_axis = 2 * static_cast<int>(std::floor(0.5 / f2.h)) + 1;
  std::vector<int> shape = f2.shape;
  Eigen::VectorXd origin(n);
  origin.head(2) = f2.origin;
  std::int64_t total = f2.size();
  for (int a = 2; a < n; ++a) {
    shape.push_back(per_axis);
    origin(a) = -0.5 * f2.h * (per_axis - 1);
    total *= per_axis;
  }
  require(total <= (std::int64_t{1} << 28), "tensor_extend: refusing more than 2^28 samples");
  GridFunction g(shape, origin, f2.h);
  const std::int64_t tail = total / f2.size();
  parallel_for(f2.size(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double v = f2.values[i];
      std::fill(g.values.begin() + i * tail, g.values.begin() + (i + 1) * tail, v);
    }
  });
  return g;
}

}  // namespace gmxa::extremals
