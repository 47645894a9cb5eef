#include "gmxa/fourierops.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <mutex>

#include "gmxa/gridops.hpp"

namespace gmxa::fourierops {

namespace {

std::mutex g_fftw_mutex;  // FFTW planning and execution are serialized

void run_fft(const std::vector<int>& shape, std::vector<std::complex<double>>& data, int sign) {
  std::lock_guard<std::mutex> lock(g_fftw_mutex);
  fftw_complex* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), ptr, ptr, sign,
                                 FFTW_ESTIMATE);
  require(plan != nullptr, "fftw: planning failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

}  // namespace

Eigen::VectorXd SpectralField::frequency_of(std::int64_t flat) const {
  const int n = static_cast<int>(shape.size());
  Eigen::VectorXd xi(n);
  for (int a = n - 1; a >= 0; --a) {
    std::int64_t k = flat % shape[a];
    flat /= shape[a];
    std::int64_t signed_k = k <= shape[a] / 2 ? k : k - shape[a];
    xi(a) = 2.0 * kPi * static_cast<double>(signed_k) / (shape[a] * h);
  }
  return xi;
}

SpectralField forward(const GridFunction& f) {
  SpectralField out;
  out.shape = f.shape;
  out.origin = f.origin;
  out.h = f.h;
  out.values.resize(f.size());
  for (std::int64_t i = 0; i < f.size(); ++i) out.values[i] = f.values[i];
  run_fft(out.shape, out.values, FFTW_FORWARD);
  return out;
}

GridFunction inverse_real(const SpectralField& field, double imag_rel_tol) {
  std::vector<std::complex<double>> data = field.values;
  run_fft(field.shape, data, FFTW_BACKWARD);
  GridFunction out(field.shape, field.origin, field.h);
  const double scale = 1.0 / static_cast<double>(out.size());
  double real2 = 0.0, imag2 = 0.0;
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out.values[i] = data[i].real() * scale;
    real2 += sqr(data[i].real() * scale);
    imag2 += sqr(data[i].imag() * scale);
  }
  if (real2 > 0)
    require(std::sqrt(imag2) <= imag_rel_tol * std::sqrt(real2) + 1e-300,
            "inverse_real: imaginary residue exceeds tolerance (odd multiplier?)");
  return out;
}

GridFunction apply_multiplier(const GridFunction& f,
                              const std::function<double(const Eigen::VectorXd&)>& multiplier,
                              double imag_rel_tol) {
  SpectralField field = forward(f);
  parallel_for(field.size(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) field.values[i] *= multiplier(field.frequency_of(i));
  });
  return inverse_real(field, imag_rel_tol);
}

// --- bump profiles ----------------------------------------------------------

namespace {

double raw_bump(double u) {  // exp(-1/(1-u^2)) on |u| < 1
  double u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - u2));
}

// integral of raw_bump over the unit ball in R^d, by radial quadrature
double unit_bump_integral(int d) {
  const int steps = 40000;
  double acc = 0.0;
  for (int i = 0; i < steps; ++i) {
    double r = (i + 0.5) / steps;
    acc += raw_bump(r) * std::pow(r, d - 1);
  }
  acc /= steps;
  double sphere_area = d * unit_ball_volume(d);  // surface of S^{d-1}
  return acc * sphere_area;
}

double bump_norm_constant(int d) {
  static double cache[9] = {0};
  require(d >= 1 && d <= 8, "bump: dimension out of range");
  if (cache[d] == 0) {
    double integral =
        unit_bump_integral(d) * std::pow(kBumpSupportRadius, d);  // integral over support
    cache[d] = 1.0 / integral;
  }
  return cache[d];
}

}  // namespace

double bump_value(int d, double r) {
  double u = std::abs(r) / kBumpSupportRadius;
  if (u >= 1.0) return 0.0;
  return bump_norm_constant(d) * raw_bump(u);
}

double bump_sup(int d) { return bump_value(d, 0.0); }

double radial_cutoff(double r) {
  r = std::abs(r);
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  double up = std::exp(-1.0 / (2.0 - r));
  double down = std::exp(-1.0 / (r - 1.0));
  return up / (up + down);
}

// --- operators --------------------------------------------------------------

namespace {

void check_alias(const GridFunction& f, double support_radius, const char* what) {
  double nyquist = kPi / f.h;
  require(support_radius <= 0.45 * nyquist,
          std::string(what) + ": multiplier support exceeds 0.45x Nyquist (grid too coarse)");
}

}  // namespace

GridFunction fourier_average(const GridFunction& f, const Subspace& sigma, double s) {
  require(f.n == sigma.ambient_dim(), "fourier_average: dimension mismatch");
  require(s > 0, "fourier_average: scale must be positive");
  const int d = sigma.dim();
  check_alias(f, kBumpSupportRadius / s, "fourier_average");
  const Eigen::MatrixXd bt = sigma.basis().transpose();
  return apply_multiplier(f, [&, s, d](const Eigen::VectorXd& xi) {
    return bump_value(d, s * (bt * xi).norm());
  });
}

LowHighSplit low_high_split(const GridFunction& f, const Subspace& sigma, double s, double delta) {
  require(delta > 0, "low_high_split: delta must be positive");
  check_alias(f, kBumpSupportRadius / s, "low_high_split");
  check_alias(f, 0.5 / (s * delta), "low_high_split");
  const int d = sigma.dim();
  const Eigen::MatrixXd bt = sigma.basis().transpose();
  auto avg = [&, s, d](const Eigen::VectorXd& xi) {
    return bump_value(d, s * (bt * xi).norm());
  };
  LowHighSplit out{
      apply_multiplier(f, [&](const Eigen::VectorXd& xi) {
        return avg(xi) * radial_cutoff(4.0 * s * delta * xi.norm());
      }),
      apply_multiplier(f, [&](const Eigen::VectorXd& xi) {
        return avg(xi) * (1.0 - radial_cutoff(4.0 * s * delta * xi.norm()));
      })};
  return out;
}

GridFunction cone_cutoff(const GridFunction& f, const Subspace& sigma, double delta,
                         double constant) {
  require(f.n == sigma.ambient_dim(), "cone_cutoff: dimension mismatch");
  const Eigen::MatrixXd bt = sigma.basis().transpose();
  return apply_multiplier(f, [&, delta, constant](const Eigen::VectorXd& xi) {
    double norm = xi.norm();
    if (norm == 0.0) return 0.0;
    return (bt * xi).norm() < constant * delta * norm ? 1.0 : 0.0;
  });
}

SwitchDefect switch_defect(const GridFunction& f, const Subspace& sigma, const Subspace& tau,
                           double s, double delta) {
  SwitchDefect out;
  out.distance = grassmann::metric_distance(sigma, tau);
  require(out.distance <= delta + 1e-12, "switch_defect: need d(sigma, tau) <= delta");
  require(delta <= 1.0, "switch_defect: need delta <= 1");
  GridFunction hs = low_high_split(f, sigma, s, delta).high;
  GridFunction ht = low_high_split(f, tau, s, delta).high;
  for (std::int64_t i = 0; i < hs.size(); ++i) hs.values[i] -= ht.values[i];
  out.diff_norm = hs.lp_norm(2);

  // tailed plate-average majorant sum_k 2^{-kn} <|f|>_{2^k s T_delta(tau)}
  GridFunction majorant(f.shape, f.origin, f.h);
  double box_radius = 0.0;
  for (int a = 0; a < f.n; ++a) box_radius = std::max(box_radius, 0.5 * f.h * (f.shape[a] - 1));
  const int kmax = std::max(0, static_cast<int>(std::ceil(std::log2(box_radius / s)))) + 1;
  if (f.n == 2) {
    double angle = std::atan2(tau.basis()(1, 0), tau.basis()(0, 0));
    for (int k = 0; k <= kmax; ++k) {
      double sk = s * std::pow(2.0, k);
      GridFunction along = gridops::thin_average_field_2d(f, angle, sk, 2);
      GridFunction pk = gridops::thin_average_field_2d(along, angle + 0.5 * kPi, sk * delta, 2);
      double w = std::pow(2.0, -static_cast<double>(k) * f.n);
      for (std::int64_t i = 0; i < majorant.size(); ++i) majorant.values[i] += w * pk.values[i];
    }
  } else {
    GridFunction absf = f;
    for (auto& v : absf.values) v = std::abs(v);
    parallel_for(f.size(), [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        Eigen::VectorXd x = f.point_of(i);
        double acc = 0.0;
        for (int k = 0; k <= kmax; ++k) {
          double sk = s * std::pow(2.0, k);
          acc += std::pow(2.0, -static_cast<double>(k) * f.n) *
                 gridops::plate_average(absf, tau, x, sk, delta, 2);
        }
        majorant.values[i] = acc;
      }
    });
  }
  out.majorant_norm = majorant.lp_norm(2);
  require(out.majorant_norm > 0, "switch_defect: zero majorant (zero input?)");
  out.defect = out.diff_norm / out.majorant_norm;
  return out;
}

double sector_overlap_audit(const GridFunction& f, const DirectionSet& net, double delta) {
  require(net.size() > 0, "sector_overlap_audit: empty net");
  const int n = net.ambient_dim(), d = net.dim();
  require(f.n == n, "sector_overlap_audit: dimension mismatch");
  // verify delta-separation
  for (int i = 0; i < net.size(); ++i)
    for (int j = i + 1; j < net.size(); ++j)
      require(grassmann::metric_distance(net.elements[i], net.elements[j]) >= delta - 1e-12,
              "sector_overlap_audit: net is not delta-separated");

  std::vector<Eigen::MatrixXd> bts;
  bts.reserve(net.size());
  for (const auto& tau : net.elements) bts.push_back(tau.basis().transpose());

  SpectralField field = forward(f);
  const std::int64_t m = field.size();
  double total_l2 = 0.0;
  for (std::int64_t i = 0; i < m; ++i) total_l2 += std::norm(field.values[i]);
  require(total_l2 > 0, "sector_overlap_audit: zero input");

  double weighted = parallel_sum(m, [&](std::int64_t i) {
    Eigen::VectorXd xi = field.frequency_of(i);
    double norm = xi.norm();
    if (norm == 0.0) return 0.0;
    double dn = delta * norm;
    if (dn <= kAnnPlusLo || dn >= kAnnPlusHi) return 0.0;
    int count = 0;
    for (const auto& bt : bts)
      if ((bt * xi).norm() <= 2.0 * delta * norm) ++count;
    return std::norm(field.values[i]) * count;
  });
  const double exponent = static_cast<double>(d) * (n - d - 1);
  return (weighted / total_l2) * std::pow(delta, exponent);
}

GridFunction smooth_max_average_2d(const GridFunction& f, const std::vector<double>& angles,
                                   const std::vector<double>& scales) {
  require(f.n == 2, "smooth_max_average_2d: planar grids only");
  GridFunction out(f.shape, f.origin, f.h);
  for (double a : angles) {
    Eigen::VectorXd dir(2);
    dir << std::cos(a), std::sin(a);
    Subspace sigma = Subspace::line(dir);
    for (double s : scales) {
      GridFunction g = fourier_average(f, sigma, s);
      for (std::int64_t i = 0; i < out.size(); ++i)
        out.values[i] = std::max(out.values[i], std::abs(g.values[i]));
    }
  }
  return out;
}

std::string Ao2dReport::to_json() const {
  nlohmann::json j;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["ratio"] = ratio;
  j["c_used"] = c_used;
  j["c_min"] = c_min;
  j["u_norm"] = u_norm;
  j["max_vj_norm"] = max_vj_norm;
  j["gamma_orthogonality"] = gamma_orthogonality;
  j["vj_norms"] = vj_norms;
  return j.dump(2);
}

Ao2dReport ao2d_experiment(const GridFunction& f, const std::vector<double>& u_angles,
                           const std::vector<std::vector<double>>& vj_angles,
                           const std::vector<double>& scales, double c) {
  require(f.n == 2, "ao2d_experiment: planar grids only");
  require(u_angles.size() >= 2, "ao2d_experiment: need at least two boundary directions");
  require(vj_angles.size() + 1 == u_angles.size(), "ao2d_experiment: gap count mismatch");
  for (std::size_t j = 0; j + 1 < u_angles.size(); ++j) {
    require(u_angles[j] < u_angles[j + 1], "ao2d_experiment: boundary directions not ordered");
    for (double v : vj_angles[j])
      require(v >= u_angles[j] && v <= u_angles[j + 1],
              "ao2d_experiment: V_j direction outside its cone");
  }
  require(u_angles.back() - u_angles.front() < kPi, "ao2d_experiment: total spread must be < pi");

  Ao2dReport rep;
  rep.c_used = c;
  std::vector<double> all_v;
  for (const auto& vj : vj_angles) all_v.insert(all_v.end(), vj.begin(), vj.end());
  if (all_v.empty()) {
    rep.lhs = 0.0;
    rep.u_norm = smooth_max_average_2d(f, u_angles, scales).lp_norm(2);
    rep.rhs = c * rep.u_norm;
    rep.ratio = 0.0;
    return rep;
  }

  rep.lhs = smooth_max_average_2d(f, all_v, scales).lp_norm(2);
  rep.u_norm = smooth_max_average_2d(f, u_angles, scales).lp_norm(2);
  for (const auto& vj : vj_angles) {
    if (vj.empty()) {
      rep.vj_norms.push_back(0.0);
      continue;
    }
    rep.vj_norms.push_back(smooth_max_average_2d(f, vj, scales).lp_norm(2));
  }
  rep.max_vj_norm = *std::max_element(rep.vj_norms.begin(), rep.vj_norms.end());
  rep.rhs = c * rep.u_norm + rep.max_vj_norm;
  rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : 0.0;
  rep.c_min = rep.u_norm > 0 ? std::max(0.0, (rep.lhs - rep.max_vj_norm) / rep.u_norm) : 0.0;

  // Gamma_j orthogonality: cones bordered by the perpendiculars of u_j, u_{j+1}
  SpectralField field = forward(f);
  double total = 0.0;
  for (auto& v : field.values) total += std::norm(v);
  double overlap = parallel_sum(field.size(), [&](std::int64_t i) {
    Eigen::VectorXd xi = field.frequency_of(i);
    if (xi.norm() == 0.0) return 0.0;
    int count = 0;
    for (std::size_t j = 0; j + 1 < u_angles.size(); ++j) {
      double pj = xi(0) * std::cos(u_angles[j]) + xi(1) * std::sin(u_angles[j]);
      double pj1 = xi(0) * std::cos(u_angles[j + 1]) + xi(1) * std::sin(u_angles[j + 1]);
      if (pj * pj1 < 0) ++count;
    }
    return std::norm(field.values[i]) * count;
  });
  rep.gamma_orthogonality = total > 0 ? overlap / total : 0.0;
  return rep;
}

}  // namespace gmxa::fourierops
