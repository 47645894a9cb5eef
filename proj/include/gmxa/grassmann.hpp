#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gmxa/common.hpp"

namespace gmxa::grassmann {

/// An element of Gr(d, n), stored as an n x d matrix with orthonormal
/// columns. Equality of subspaces is always tested through projector
/// distance, never through the (non-unique) basis.
class Subspace {
 public:
  Subspace(int n, int d, const Eigen::MatrixXd& orthonormal_basis);

  /// Orthonormalizes the columns of a full-rank spanning matrix.
  static Subspace from_span(const Eigen::MatrixXd& spanning);

  /// Haar-distributed subspace: orthonormalized iid Gaussian matrix.
  static Subspace random(int n, int d, Rng& rng);

  /// span{e_1, ..., e_d} in R^n.
  static Subspace coordinate(int n, int d);

  static Subspace line(const Eigen::VectorXd& direction);

  int ambient_dim() const { return n_; }
  int dim() const { return d_; }
  const Eigen::MatrixXd& basis() const { return basis_; }

  Eigen::MatrixXd projector() const { return basis_ * basis_.transpose(); }
  Eigen::VectorXd project(const Eigen::VectorXd& x) const { return basis_ * (basis_.transpose() * x); }
  double projection_norm(const Eigen::VectorXd& x) const { return (basis_.transpose() * x).norm(); }
  Eigen::VectorXd project_complement(const Eigen::VectorXd& x) const { return x - project(x); }
  double complement_norm(const Eigen::VectorXd& x) const;

  Subspace orthogonal_complement() const;

  /// True when every basis vector of w lies in this subspace (within tol).
  bool contains(const Subspace& w, double tol = 1e-10) const;

 private:
  int n_, d_;
  Eigen::MatrixXd basis_;
};

/// Operator-norm distance ||P_a - P_b||. For equal dimensions this is
/// sin(theta_d), the sine of the largest principal angle.
double metric_distance(const Subspace& a, const Subspace& b);

/// Canonical (principal) angles and bases of a pair of subspaces.
struct PrincipalDecomposition {
  Eigen::VectorXd angles;   // ascending, in [0, pi/2]
  Eigen::MatrixXd basis_s;  // n x d, canonical basis of the first subspace
  Eigen::MatrixXd basis_t;  // n x d, canonical basis of the second
  Eigen::MatrixXd basis_z;  // n x (2d - m), orthonormal basis of span{a, b}
  int intersection_dim = 0; // m = #{angles <= tol}
};

PrincipalDecomposition principal_angles(const Subspace& a, const Subspace& b, double tol = 1e-9);

enum class Provenance { kNet, kRandom, kExplicit };

struct DirectionSet {
  std::vector<Subspace> elements;
  std::optional<double> separation;
  Provenance provenance = Provenance::kExplicit;

  int size() const { return static_cast<int>(elements.size()); }
  int ambient_dim() const { return elements.empty() ? 0 : elements.front().ambient_dim(); }
  int dim() const { return elements.empty() ? 0 : elements.front().dim(); }

  std::string to_json() const;
  static DirectionSet from_json(const std::string& text);
  void save(const std::string& path) const;
  static DirectionSet load(const std::string& path);
};

/// Greedy maximal delta-net by rejection sampling. Stops after `stop_after`
/// consecutive rejected candidates (default 200 * current cardinality).
/// Candidate testing is block-parallel with a deterministic admission order.
DirectionSet greedy_net(int d, int n, double delta, std::uint64_t seed, std::int64_t stop_after = -1);

struct NearOrthogonalSubset {
  std::vector<int> indices;            // members with |P_sigma xi| < delta/4
  std::vector<Subspace> replacements;  // a_sigma with P_{a_sigma} xi = 0
  bool xi_was_normalized = false;
};

/// Lemma-style selection of subspaces nearly orthogonal to xi, each paired
/// with an exactly-orthogonal replacement within distance delta/3.
NearOrthogonalSubset near_orthogonal_subset(const DirectionSet& sigma_set,
                                            Eigen::VectorXd xi, double delta);

/// Two-sheeted cone test: |P_sigma eta| < constant * delta * |eta|.
bool cone_membership(const Subspace& sigma, double delta, const Eigen::VectorXd& eta,
                     double constant = 0.25);

struct CandidatePolicy {
  double mesh_factor = 0.25;     // sphere net mesh = mesh_factor * delta
  int random_per_element = 32;   // random unit vectors per input subspace
  bool pair_minimizers = true;   // per-pair joint projection minimizers
  std::uint64_t seed = 1;
};

/// Finite pool of candidate "bad" directions for the cluster search.
std::vector<Eigen::VectorXd> bad_xi_candidates(const DirectionSet& sigma_set, double delta,
                                               const CandidatePolicy& policy);

struct Cluster {
  DirectionSet members;
  Eigen::VectorXd top;  // the xi certifying the cluster
};

struct ClusterDecomposition {
  DirectionSet sigma0;
  std::vector<Cluster> clusters;
  double threshold = 0;  // overlap bound ceil(N^((n-d-1)/(n-d)))
  int steps = 0;
};

/// Greedy cluster extraction: repeatedly removes {sigma : xi in cone(sigma)}
/// for candidate xi exceeding the overlap threshold. The cone constant is
/// 2^-4 (the cluster-variant cone).
ClusterDecomposition cluster_decompose(const DirectionSet& sigma_set, double delta,
                                       const CandidatePolicy& policy);

/// Max over the pool of the cone-overlap count of `set`; the e:ovclust-style
/// audit quantity used to certify sigma0.
int max_cone_overlap(const DirectionSet& set, double delta,
                     const std::vector<Eigen::VectorXd>& pool);

constexpr double kClusterConeConstant = 0.0625;  // 2^-4
constexpr double kSplitConeConstant = 0.25;      // 2^-2

}  // namespace gmxa::grassmann
