#pragma once

#include <map>
#include <string>
#include <vector>

#include "gmxa/grid.hpp"
#include "gmxa/grassmann.hpp"

namespace gmxa::gridops {

using grassmann::DirectionSet;
using grassmann::Subspace;

/// Thin d-dimensional average of f over x + (s B_n with sigma), normalized
/// so the average of 1 is 1. Midpoint quadrature at step h/density along the
/// subspace directions, multilinear interpolation of f.
double subspace_average(const GridFunction& f, const Subspace& sigma, double s,
                        const Eigen::VectorXd& x, int density);

/// Pointwise sup of thin averages of |f| over Sigma x S, on f's own lattice.
GridFunction maximal_subspace_average(const GridFunction& f, const DirectionSet& sigma_set,
                                      const std::vector<double>& scales, int density);

/// Full n-dimensional average over the plate center + scale*T_delta(sigma).
double plate_average(const GridFunction& f, const Subspace& sigma, const Eigen::VectorXd& center,
                     double scale, double delta, int density);

/// (d,n)-Nikodym maximal function: at each grid point the sup over the net
/// of unit-plate averages of |f|.
GridFunction nikodym_maximal(const GridFunction& f, double delta, const DirectionSet& net,
                             int density);

/// (d,n)-Kakeya maximal function: for each net element the sup over centers
/// of the plate average; a function on the net.
std::vector<double> kakeya_maximal(const GridFunction& f, double delta, const DirectionSet& net,
                                   const std::vector<Eigen::VectorXd>& centers, int density);

enum class NormKind { kStrong, kWeak };

struct NormEstimate {
  NormKind kind = NormKind::kStrong;
  double p = 2.0;
  double value = 0.0;
  std::string test_function_id;
  std::vector<double> levels;  // weak case: the levels achieving the sup last
};

/// Empirical operator-norm quotient of g = T f against f. Weak norm takes
/// the exact sup over the finite value set of g (levels evaluated as
/// lambda * |{g >= lambda}|^(1/p), the upper limit of the level function).
NormEstimate norm_estimate(const GridFunction& g, const GridFunction& f, NormKind kind, double p,
                           const std::string& test_function_id = "");

// --- fast planar evaluators -------------------------------------------------
//
// Shear-resampled evaluators for n = 2, used by the scaling experiments.
// They realize the same quadrature (midpoint along lines, multilinear reads
// of f) with per-direction prefix sums; `density` supersamples the columns.

/// sup over angles x scales of thin segment averages of |f|.
GridFunction thin_max_average_2d(const GridFunction& f, const std::vector<double>& angles,
                                 const std::vector<double>& scales, int density = 1);

/// sup over angles of unit-plate (2 x 2*delta rectangle) averages of |f|;
/// the planar Nikodym evaluator.
GridFunction plate_max_average_2d(const GridFunction& f, const std::vector<double>& angles,
                                  double delta, int density = 1);

/// Single-direction thin segment average field (shear path), for testing.
GridFunction thin_average_field_2d(const GridFunction& f, double angle, double s, int density = 1);

}  // namespace gmxa::gridops
