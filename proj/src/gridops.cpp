#include "gmxa/gridops.hpp"

#include <algorithm>
#include <cmath>

#include "gmxa/plates.hpp"

namespace gmxa::gridops {

namespace {

void check_grid_subspace(const GridFunction& f, const Subspace& sigma) {
  require(f.n == sigma.ambient_dim(), "gridops: grid/subspace dimension mismatch");
  require(sigma.dim() < sigma.ambient_dim(),
          "gridops: d = n is the Hardy-Littlewood case, not a thin average");
}

}  // namespace

double subspace_average(const GridFunction& f, const Subspace& sigma, double s,
                        const Eigen::VectorXd& x, int density) {
  check_grid_subspace(f, sigma);
  require(s > 0, "subspace_average: scale must be positive");
  require(density >= 2, "subspace_average: need density >= 2");
  const int d = sigma.dim();
  const double step = f.h / density;
  const std::int64_t m = static_cast<std::int64_t>(std::ceil(s / step));

  double acc = 0.0, wsum = 0.0;
  if (d == 1) {
    const Eigen::VectorXd b = sigma.basis().col(0);
    for (std::int64_t k = -m; k < m; ++k) {
      double y = (k + 0.5) * step;
      double w = std::min(s, y + 0.5 * step) - std::max(-s, y - 0.5 * step);
      if (w <= 0) continue;
      acc += w * f.value_at(x - y * b);
      wsum += w;
    }
  } else {
    // center-inclusion midpoint rule on the d-disc
    std::vector<std::int64_t> idx(d, -m);
    const std::int64_t side = 2 * m;
    std::int64_t cells = 1;
    for (int j = 0; j < d; ++j) cells *= side;
    for (std::int64_t c = 0; c < cells; ++c) {
      std::int64_t rem = c;
      Eigen::VectorXd y = Eigen::VectorXd::Zero(f.n);
      double r2 = 0.0;
      for (int j = 0; j < d; ++j) {
        double t = (static_cast<double>(rem % side) - m + 0.5) * step;
        rem /= side;
        r2 += t * t;
        y += t * sigma.basis().col(j);
      }
      if (r2 > s * s) continue;
      acc += f.value_at(x - y);
      wsum += 1.0;
    }
    (void)idx;
  }
  require(wsum > 0, "subspace_average: empty quadrature");
  return acc / wsum;
}

GridFunction maximal_subspace_average(const GridFunction& f, const DirectionSet& sigma_set,
                                      const std::vector<double>& scales, int density) {
  require(sigma_set.size() > 0, "maximal_subspace_average: empty direction set");
  require(!scales.empty(), "maximal_subspace_average: empty scale list");
  GridFunction absf = f;
  for (auto& v : absf.values) v = std::abs(v);
  GridFunction out(f.shape, f.origin, f.h);
  parallel_for(f.size(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      Eigen::VectorXd x = f.point_of(i);
      double best = 0.0;
      for (const auto& sigma : sigma_set.elements)
        for (double s : scales)
          best = std::max(best, subspace_average(absf, sigma, s, x, density));
      out.values[i] = best;
    }
  });
  return out;
}

double plate_average(const GridFunction& f, const Subspace& sigma, const Eigen::VectorXd& center,
                     double scale, double delta, int density) {
  check_grid_subspace(f, sigma);
  require(scale > 0 && delta > 0, "plate_average: degenerate plate");
  const int n = f.n, d = sigma.dim();
  plates::Plate plate(sigma, center, scale, delta);
  const double step_along = f.h / density;
  const std::int64_t ma = static_cast<std::int64_t>(std::ceil(scale / step_along));
  const std::int64_t mc =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(scale * delta / step_along)));
  const double step_across = scale * delta / static_cast<double>(mc);

  std::int64_t cells = 1;
  for (int j = 0; j < d; ++j) cells *= 2 * ma;
  for (int j = d; j < n; ++j) cells *= 2 * mc;

  double acc = 0.0, count = 0.0;
  for (std::int64_t c = 0; c < cells; ++c) {
    std::int64_t rem = c;
    double r2a = 0.0, r2c = 0.0;
    Eigen::VectorXd u(n);
    for (int j = 0; j < d; ++j) {
      double t = (static_cast<double>(rem % (2 * ma)) - ma + 0.5) * step_along;
      rem /= 2 * ma;
      r2a += t * t;
      u(j) = t;
    }
    for (int j = d; j < n; ++j) {
      double t = (static_cast<double>(rem % (2 * mc)) - mc + 0.5) * step_across;
      rem /= 2 * mc;
      r2c += t * t;
      u(j) = t;
    }
    if (r2a > scale * scale) continue;
    if (r2c >= sqr(scale * delta)) continue;
    acc += f.value_at(center + plate.frame() * u);
    count += 1.0;
  }
  require(count > 0, "plate_average: empty quadrature");
  return acc / count;
}

GridFunction nikodym_maximal(const GridFunction& f, double delta, const DirectionSet& net,
                             int density) {
  require(delta > 0 && delta <= 0.5, "nikodym_maximal: delta outside (0, 1/2]");
  require(net.size() > 0, "nikodym_maximal: empty net");
  if (net.separation)
    require(*net.separation <= delta / 4 + 1e-12,
            "nikodym_maximal: net mesh must be at most delta/4");
  GridFunction absf = f;
  for (auto& v : absf.values) v = std::abs(v);
  GridFunction out(f.shape, f.origin, f.h);
  parallel_for(f.size(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      Eigen::VectorXd x = f.point_of(i);
      double best = 0.0;
      for (const auto& sigma : net.elements)
        best = std::max(best, plate_average(absf, sigma, x, 1.0, delta, density));
      out.values[i] = best;
    }
  });
  return out;
}

std::vector<double> kakeya_maximal(const GridFunction& f, double delta, const DirectionSet& net,
                                   const std::vector<Eigen::VectorXd>& centers, int density) {
  require(!centers.empty(), "kakeya_maximal: empty center grid");
  require(net.size() > 0, "kakeya_maximal: empty net");
  GridFunction absf = f;
  for (auto& v : absf.values) v = std::abs(v);
  std::vector<double> out(net.size(), 0.0);
  parallel_for(net.size(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double best = 0.0;
      for (const auto& c : centers)
        best = std::max(best, plate_average(absf, net.elements[i], c, 1.0, delta, density));
      out[i] = best;
    }
  });
  return out;
}

NormEstimate norm_estimate(const GridFunction& g, const GridFunction& f, NormKind kind, double p,
                           const std::string& test_function_id) {
  require(p >= 1, "norm_estimate: need p >= 1");
  const double fnorm = f.lp_norm(p);
  require(fnorm > 0, "norm_estimate: input function has zero norm");
  NormEstimate out;
  out.kind = kind;
  out.p = p;
  out.test_function_id = test_function_id;
  if (kind == NormKind::kStrong) {
    out.value = g.lp_norm(p) / fnorm;
    return out;
  }
  // weak: sup over levels v of v * |{g >= v}|^(1/p), exact over the value set
  std::vector<double> vals;
  vals.reserve(g.values.size());
  for (double v : g.values)
    if (v > 0) vals.push_back(v);
  std::sort(vals.begin(), vals.end(), std::greater<double>());
  const double cell = g.cell_volume();
  double best = 0.0, best_level = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i + 1 < vals.size() && vals[i + 1] == vals[i]) continue;  // group end only
    double cand = vals[i] * std::pow(cell * static_cast<double>(i + 1), 1.0 / p);
    if (cand > best) {
      best = cand;
      best_level = vals[i];
    }
  }
  out.value = best / fnorm;
  out.levels = {best_level};
  return out;
}

// --- planar shear machinery -------------------------------------------------

namespace {

struct ShearPlan {
  int march = 0;        // axis we step along
  int other = 1;
  double slope = 0.0;   // d(other)/d(march) along the line, |slope| <= 1
  double ref = 0.0;     // march coordinate of zero shear
  int cols = 0;         // output columns = f.shape[march]
  int width = 0;        // supersampled columns
  double dcol = 0.0;    // supersampled column step
  int rows = 0;         // f.shape[other]
  int pad = 0;
  int rows_padded = 0;
  double arc_step = 0.0;  // arc length between neighbouring samples
};

ShearPlan make_plan(const GridFunction& f, double angle, int density) {
  ShearPlan pl;
  double c = std::cos(angle), s = std::sin(angle);
  if (std::abs(c) >= std::abs(s)) {
    pl.march = 0;
    pl.other = 1;
    pl.slope = s / c;
  } else {
    pl.march = 1;
    pl.other = 0;
    pl.slope = c / s;
  }
  pl.cols = f.shape[pl.march];
  pl.width = (pl.cols - 1) * density + 1;
  pl.dcol = f.h / density;
  pl.rows = f.shape[pl.other];
  pl.ref = f.origin(pl.march) + 0.5 * f.h * (pl.cols - 1);
  double max_shear = 0.5 * f.h * (pl.cols - 1) * std::abs(pl.slope);
  pl.pad = static_cast<int>(std::ceil(max_shear / f.h)) + 2;
  pl.rows_padded = pl.rows + 2 * pl.pad;
  pl.arc_step = pl.dcol * std::sqrt(1.0 + pl.slope * pl.slope);
  return pl;
}

// Bilinear read of |f| with zero extension, specialized to n = 2.
inline double read_abs_2d(const GridFunction& f, int ax0, double x0, int ax1, double x1) {
  // coordinates given per axis index
  double u0 = (x0 - f.origin(ax0)) / f.h;
  double u1 = (x1 - f.origin(ax1)) / f.h;
  double fl0 = std::floor(u0), fl1 = std::floor(u1);
  int i0 = static_cast<int>(fl0), i1 = static_cast<int>(fl1);
  double a = u0 - fl0, b = u1 - fl1;
  const int n0 = f.shape[ax0], n1 = f.shape[ax1];
  auto get = [&](int j0, int j1) -> double {
    if (j0 < 0 || j0 >= n0 || j1 < 0 || j1 >= n1) return 0.0;
    std::int64_t flat = ax0 == 0 ? static_cast<std::int64_t>(j0) * f.shape[1] + j1
                                 : static_cast<std::int64_t>(j1) * f.shape[1] + j0;
    return std::abs(f.values[flat]);
  };
  return (1 - a) * ((1 - b) * get(i0, i1) + b * get(i0, i1 + 1)) +
         a * ((1 - b) * get(i0 + 1, i1) + b * get(i0 + 1, i1 + 1));
}

/// For one direction: fills `sheared_out[jp * cols + i]` with the requested
/// per-scale reduction of windowed line averages, then un-shears into `out`
/// (taking a running pointwise max with the existing content).
void direction_max_pass(const GridFunction& f, double angle, const std::vector<double>& scales,
                        int density, bool max_over_scales, std::vector<double>& sheared_out,
                        GridFunction& out) {
  const ShearPlan pl = make_plan(f, angle, density);
  sheared_out.assign(static_cast<std::size_t>(pl.rows_padded) * pl.cols, 0.0);

  std::vector<std::int64_t> half(scales.size());
  for (std::size_t si = 0; si < scales.size(); ++si)
    half[si] = static_cast<std::int64_t>(std::floor(scales[si] / pl.arc_step));

  parallel_for(pl.rows_padded, [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> row(pl.width);
    std::vector<double> prefix(pl.width + 1);
    for (std::int64_t jp = lo; jp < hi; ++jp) {
      double xo_base = f.origin(pl.other) + (jp - pl.pad) * f.h;
      for (int k = 0; k < pl.width; ++k) {
        double xm = f.origin(pl.march) + k * pl.dcol;
        double xo = xo_base + (xm - pl.ref) * pl.slope;
        row[k] = read_abs_2d(f, pl.march, xm, pl.other, xo);
      }
      prefix[0] = 0.0;
      for (int k = 0; k < pl.width; ++k) prefix[k + 1] = prefix[k] + row[k];

      double* dst = sheared_out.data() + static_cast<std::size_t>(jp) * pl.cols;
      for (int i = 0; i < pl.cols; ++i) {
        const std::int64_t kc = static_cast<std::int64_t>(i) * density;
        double best = 0.0;
        for (std::size_t si = 0; si < scales.size(); ++si) {
          std::int64_t m = half[si];
          std::int64_t a = std::max<std::int64_t>(0, kc - m);
          std::int64_t b = std::min<std::int64_t>(pl.width - 1, kc + m);
          double val = (prefix[b + 1] - prefix[a]) / static_cast<double>(2 * m + 1);
          if (max_over_scales)
            best = std::max(best, val);
          else
            best = val;  // single scale expected
        }
        dst[i] = best;
      }
    }
  });

  // un-shear: out(i, j) from column i at fractional padded row
  parallel_for(pl.cols, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double xm = f.origin(pl.march) + i * f.h;
      double shear = (xm - pl.ref) * pl.slope / f.h;
      for (int j = 0; j < pl.rows; ++j) {
        double rp = static_cast<double>(j) + pl.pad - shear;
        double fl = std::floor(rp);
        int r0 = static_cast<int>(fl);
        double fr = rp - fl;
        double v = 0.0;
        if (r0 >= 0 && r0 < pl.rows_padded)
          v += (1 - fr) * sheared_out[static_cast<std::size_t>(r0) * pl.cols + i];
        if (r0 + 1 >= 0 && r0 + 1 < pl.rows_padded)
          v += fr * sheared_out[static_cast<std::size_t>(r0 + 1) * pl.cols + i];
        std::int64_t flat = pl.march == 0 ? i * out.shape[1] + j : static_cast<std::int64_t>(j) * out.shape[1] + i;
        out.values[flat] = std::max(out.values[flat], v);
      }
    }
  });
}

}  // namespace

GridFunction thin_max_average_2d(const GridFunction& f, const std::vector<double>& angles,
                                 const std::vector<double>& scales, int density) {
  require(f.n == 2, "thin_max_average_2d: planar grids only");
  require(!angles.empty() && !scales.empty(), "thin_max_average_2d: empty sweep");
  GridFunction out(f.shape, f.origin, f.h);
  std::vector<double> workspace;
  for (double angle : angles) direction_max_pass(f, angle, scales, density, true, workspace, out);
  return out;
}

GridFunction thin_average_field_2d(const GridFunction& f, double angle, double s, int density) {
  require(f.n == 2, "thin_average_field_2d: planar grids only");
  GridFunction out(f.shape, f.origin, f.h);
  std::vector<double> workspace;
  direction_max_pass(f, angle, {s}, density, false, workspace, out);
  return out;
}

GridFunction plate_max_average_2d(const GridFunction& f, const std::vector<double>& angles,
                                  double delta, int density) {
  require(f.n == 2, "plate_max_average_2d: planar grids only");
  require(delta > 0, "plate_max_average_2d: delta must be positive");
  GridFunction out(f.shape, f.origin, f.h);
  std::vector<double> workspace;
  for (double angle : angles) {
    GridFunction along(f.shape, f.origin, f.h);
    direction_max_pass(f, angle, {1.0}, density, false, workspace, along);
    direction_max_pass(along, angle + 0.5 * kPi, {delta}, std::max(density, 2), false, workspace,
                       out);
  }
  return out;
}

}  // namespace gmxa::gridops
