#pragma once

#include <map>
#include <string>
#include <vector>

#include "gmxa/config.hpp"
#include "gmxa/grassmann.hpp"

namespace gmxa::experiments {

struct FitResult {
  std::string model;  // power | log | sqrtlog
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares in transformed coordinates: power fits log y ~ log x,
/// log fits y ~ log x, sqrtlog fits y^2 ~ log x.
FitResult fit_scaling(const std::vector<std::pair<double, double>>& points,
                      const std::string& model);

struct SweepPoint {
  double parameter = 0.0;
  double value = 0.0;
  double runtime_seconds = 0.0;
  bool budget_exceeded = false;
  bool skipped = false;
  std::map<std::string, double> extra;
};

struct ScalingReport {
  std::string kind;
  std::map<std::string, std::string> params;
  std::vector<SweepPoint> points;
  FitResult fit;
  double comparison_exponent = 0.0;
  std::string comparison_law;     // the asymptotic law the sweep is checked against
  std::string exponent_source;    // theory | oracle | exact
  std::string notes;

  std::string to_json() const;
  static ScalingReport from_json(const std::string& text);
};

/// Dispatches on config key `kind`; deterministic under `seed`.
ScalingReport run_experiment(const Config& cfg);

/// Writes report.json, series.csv and plot.dat under out_dir; byte-stable
/// for a fixed config and seed.
void emit_report(const ScalingReport& report, const std::string& out_dir);

// individual pipelines (all driven through run_experiment as well)
ScalingReport net_cardinality_experiment(const Config&);
ScalingReport principal_angles_oracle_experiment(const Config&);
ScalingReport intersection_bound_experiment(const Config&);
ScalingReport maxavg_logn_experiment(const Config&);
ScalingReport nikodym_weak22_experiment(const Config&);
ScalingReport kakeya_l2_experiment(const Config&);
ScalingReport cluster_contract_experiment(const Config&);
ScalingReport fourier_identities_experiment(const Config&);
ScalingReport sector_overlap_experiment(const Config&);
ScalingReport perron_area_experiment(const Config&);
ScalingReport cm_lower_bound_experiment(const Config&);
ScalingReport codim1_embedding_experiment(const Config&);
ScalingReport codim1_decay_experiment(const Config&);

/// Brute-force principal angles for Gr(2,n) pairs: spherical mesh search for
/// the first angle, exact reduction for the second. Independent of the SVD
/// route; the comparison oracle for the angles experiment.
Eigen::Vector2d principal_angles_bruteforce(const grassmann::Subspace& a,
                                            const grassmann::Subspace& b, double mesh);

/// Codimension-1 adversarial quotient from a Kakeya tube block at n = 3,
/// computed on the planar section (the e2 factor is exact by tensoring).
struct AdversarialQuotient {
  double quotient = 0.0;
  double mass = 0.0;
  double balayage_l2 = 0.0;
  double tube_union = 0.0;
  int directions = 0;
};

AdversarialQuotient codim1_adversarial_quotient(int v_count, std::uint64_t seed);

}  // namespace gmxa::experiments
