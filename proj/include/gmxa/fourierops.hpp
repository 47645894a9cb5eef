#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "gmxa/grid.hpp"
#include "gmxa/grassmann.hpp"

namespace gmxa::fourierops {

using grassmann::DirectionSet;
using grassmann::Subspace;

/// Frequency-domain samples matching a GridFunction's lattice (unnormalized
/// DFT; frequencies are the usual 2*pi*k/(N*h) signed lattice).
struct SpectralField {
  std::vector<int> shape;
  Eigen::VectorXd origin;
  double h = 1.0;
  std::vector<std::complex<double>> values;

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  Eigen::VectorXd frequency_of(std::int64_t flat) const;
};

SpectralField forward(const GridFunction& f);

/// Inverse transform; enforces realness within rel_tol * ||f||_2.
GridFunction inverse_real(const SpectralField& field, double imag_rel_tol = 1e-8);

/// Applies a real multiplier in frequency. The multiplier must be an even
/// function of xi for the output to be real.
GridFunction apply_multiplier(const GridFunction& f,
                              const std::function<double(const Eigen::VectorXd&)>& multiplier,
                              double imag_rel_tol = 1e-8);

// --- bump profiles ----------------------------------------------------------

/// phi_d at radius r: c_d * exp(-1/(1 - (256 r)^2)) on r < 2^-8, zero outside;
/// normalized to unit integral over R^d.
double bump_value(int d, double r);
double bump_sup(int d);  // phi_d(0)

/// Radial profile Phi with 1_{B} <= Phi <= 1_{2B}: 1 for r <= 1, 0 for r >= 2,
/// smooth exponential bridge between.
double radial_cutoff(double r);

constexpr double kBumpSupportRadius = 0.00390625;  // 2^-8

// --- operators --------------------------------------------------------------

/// Smooth subspace average: multiplier phi_d(s * |P_sigma xi|).
GridFunction fourier_average(const GridFunction& f, const Subspace& sigma, double s);

struct LowHighSplit {
  GridFunction high;  // A^{>delta}: multiplier x Phi(4 s delta xi)
  GridFunction low;   // A - high
};

LowHighSplit low_high_split(const GridFunction& f, const Subspace& sigma, double s, double delta);

/// Sharp restriction to the two-sheeted cone |P_sigma xi| < constant*delta*|xi|
/// (mean removed).
GridFunction cone_cutoff(const GridFunction& f, const Subspace& sigma, double delta,
                         double constant = grassmann::kSplitConeConstant);

struct SwitchDefect {
  double defect = 0.0;        // ||high_sigma - high_tau||_2 / majorant
  double distance = 0.0;      // d(sigma, tau)
  double majorant_norm = 0.0; // L2 norm of the tailed plate-average majorant
  double diff_norm = 0.0;
};

/// Eccentricity-normalized difference of high parts along nearby subspaces;
/// the experiment asserts defect <= C * d(sigma,tau)/delta.
SwitchDefect switch_defect(const GridFunction& f, const Subspace& sigma, const Subspace& tau,
                           double s, double delta);

/// Sector overlap: sum_tau ||O_{tau,delta} f||_2^2 over the net, divided by
/// delta^{-d(n-d-1)} ||f||_2^2. O is the sharp cutoff to
/// {xi in Ann+(delta): |P_tau xi| <= 2 delta |xi|}.
double sector_overlap_audit(const GridFunction& f, const DirectionSet& net, double delta);

constexpr double kAnnPlusLo = 0.03125;  // 2^-5
constexpr double kAnnPlusHi = 0.5;      // 2^-1
constexpr double kAnnLo = 0.0625;       // 2^-4
constexpr double kAnnHi = 0.25;         // 2^-2

struct Ao2dReport {
  double lhs = 0.0;               // ||A_{V,S} f||_2
  double rhs = 0.0;               // C ||A_{U,S} f||_2 + max_j ||A_{V_j,S} f||_2
  double ratio = 0.0;             // lhs / rhs
  double c_used = 0.0;
  double c_min = 0.0;             // smallest C making lhs <= rhs
  double u_norm = 0.0;
  double max_vj_norm = 0.0;
  double gamma_orthogonality = 0.0;  // sum_j ||Gamma_j f||^2 / ||f||^2
  std::vector<double> vj_norms;
  std::string to_json() const;
};

/// Planar almost-orthogonality experiment. `u_angles` ordered counterclockwise
/// (N+1 entries); `vj_angles[j]` lies inside the gap (u_j, u_{j+1}).
Ao2dReport ao2d_experiment(const GridFunction& f, const std::vector<double>& u_angles,
                           const std::vector<std::vector<double>>& vj_angles,
                           const std::vector<double>& scales, double c);

/// Pointwise max over angles x scales of |A_{v,s} f| for planar f.
GridFunction smooth_max_average_2d(const GridFunction& f, const std::vector<double>& angles,
                                   const std::vector<double>& scales);

}  // namespace gmxa::fourierops
