#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gmxa/grid.hpp"
#include "gmxa/plates.hpp"

namespace gmxa::carleson {

using plates::ShearedPlate;

struct LatticeOptions {
  int depth = 2;                 // dyadic base scales 2^0 .. 2^-depth
  double base_scale = 1.0;       // largest cube side
  double box_halfwidth = 1.1;    // plates kept inside [-b, b]^n
  bool base_shifts = false;      // include the 1/3-shifted base grids
  int k_shift_grids = 3;         // shifted interval grids on the last axis
  bool proportional_thickness = false;  // |K| = delta * l_I instead of delta
};

/// Dyadic sheared-plate lattice D_{V,delta} within a working box.
struct PlateLattice {
  double delta = 0.0;
  std::vector<Eigen::VectorXd> directions;  // unit, near e_n
  LatticeOptions options;
  std::vector<ShearedPlate> plates;
  std::vector<int> direction_of;  // per plate
  std::vector<int> level_of;      // dyadic level of l_I

  int size() const { return static_cast<int>(plates.size()); }
  int direction_count() const { return static_cast<int>(directions.size()); }

  /// Partial order: Q <= R iff Q and R intersect and I_Q subset I_R.
  bool leq(int q, int r) const;

  std::string to_json_summary() const;
};

PlateLattice build_lattice(const std::vector<Eigen::VectorXd>& directions, double delta,
                           const LatticeOptions& options);

/// Hat enlargement per the remark: when v_Q != v_R, the smallest cube in the
/// basis aligned with lin(af_Q, af_R) containing I_Q; Q itself otherwise.
ShearedPlate hat_plate(const ShearedPlate& q, const ShearedPlate& r);

struct CarlesonSequence {
  std::vector<double> mass;  // per lattice plate
  double total() const;
  std::string to_json() const;
};

/// Evaluation grid for shadows and balayages.
struct MeasureGrid {
  Eigen::VectorXd lo;
  double h = 0.0;
  std::vector<int> shape;
};

MeasureGrid make_measure_grid(int n, double halfwidth, double h);

/// a_Q = |F_Q cap E| with caller-supplied selection regions; disjointness is
/// certified by Monte Carlo collision sampling (throws naming the offending
/// pair of plates).
CarlesonSequence adjoint_sequence(
    const PlateLattice& lattice,
    const std::vector<std::function<bool(const Eigen::VectorXd&)>>& selections,
    const std::function<bool(const Eigen::VectorXd&)>& e_set, const MeasureGrid& grid,
    std::int64_t collision_samples = 100000, std::uint64_t seed = 1);

/// Selection built by assigning every grid cell to one containing plate
/// (seeded hash priority); disjoint by construction. a_Q = |F_Q cap E|.
CarlesonSequence random_adjoint_sequence(const PlateLattice& lattice,
                                         const std::function<bool(const Eigen::VectorXd&)>& e_set,
                                         const MeasureGrid& grid, std::uint64_t seed);

/// Rasterized balayage sum a_Q 1_Q / |Q| over plates passing `subset`.
GridFunction balayage(const PlateLattice& lattice, const CarlesonSequence& seq,
                      const std::function<bool(int)>& subset, const MeasureGrid& grid);

/// Shadow measure |union of plates| on the grid.
double shadow_measure(const PlateLattice& lattice, const std::vector<int>& plate_ids,
                      const MeasureGrid& grid);

struct EmbeddingReport {
  double balayage_l2 = 0.0;
  double mass = 0.0;
  int direction_count = 0;
  double quotient = 0.0;  // ||T(a)||_2 / (sqrt(log #V) sqrt(mass))
  std::string to_json() const;
};

EmbeddingReport embedding_audit(const PlateLattice& lattice, const CarlesonSequence& seq,
                                const MeasureGrid& grid);

struct DecayReport {
  std::vector<int> k_values;
  std::vector<double> shadows;       // |sh(Q_{v,k})|
  std::vector<double> mass_bounds;   // 2^-k * mass
  double slope = 0.0;                // LS slope of log(shadow) against k
  int populated = 0;
  std::string to_json() const;
};

/// B_R = avg over hat R of sum_{Q <= R} a_Q 1_{hat Q}/|hat Q| for plates R in
/// direction v; level sets {B_R > c_n mu k} and their shadow decay.
DecayReport decay_audit(const PlateLattice& lattice, const CarlesonSequence& seq, int v_index,
                        int k_min, int k_max, double mu, const MeasureGrid& grid,
                        double c_n = 1.0, std::int64_t mc_samples = 600, std::uint64_t seed = 9);

/// Subordination audit: for sampled single-direction families T, the mass of
/// all lattice plates contained in sh(T) must not exceed |sh(T)|.
struct SubordinationReport {
  int families = 0;
  int failures = 0;
  double worst_ratio = 0.0;
};

SubordinationReport subordination_audit(const PlateLattice& lattice, const CarlesonSequence& seq,
                                        const MeasureGrid& grid, int families, std::uint64_t seed);

}  // namespace gmxa::carleson
