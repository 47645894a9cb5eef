#include "gmxa/grassmann.hpp"
#include <unordered_map>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>

namespace gmxa::grassmann {

namespace {

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  // Fix column signs so the map span -> basis is continuous in the generic case.
  Eigen::MatrixXd r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
  for (int j = 0; j < m.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

Subspace::Subspace(int n, int d, const Eigen::MatrixXd& orthonormal_basis)
    : n_(n), d_(d), basis_(orthonormal_basis) {
  require(d >= 1 && d <= n, "Subspace: need 1 <= d <= n");
  require(basis_.rows() == n && basis_.cols() == d, "Subspace: basis shape mismatch");
  Eigen::MatrixXd gram = basis_.transpose() * basis_;
  double err = (gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
  require(err <= 1e-10, "Subspace: basis not orthonormal (gram error " + std::to_string(err) + ")");
}

Subspace Subspace::from_span(const Eigen::MatrixXd& spanning) {
  const int n = static_cast<int>(spanning.rows());
  const int d = static_cast<int>(spanning.cols());
  require(d >= 1 && d <= n, "from_span: need 1 <= d <= n");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(spanning, Eigen::ComputeThinU);
  require(svd.singularValues()(d - 1) > 1e-12 * svd.singularValues()(0),
          "from_span: spanning matrix is rank deficient");
  return Subspace(n, d, orthonormalize(spanning));
}

Subspace Subspace::random(int n, int d, Rng& rng) {
  Eigen::MatrixXd g(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  return Subspace(n, d, orthonormalize(g));
}

Subspace Subspace::coordinate(int n, int d) {
  return Subspace(n, d, Eigen::MatrixXd::Identity(n, n).leftCols(d));
}

Subspace Subspace::line(const Eigen::VectorXd& direction) {
  require(direction.norm() > 0, "line: zero direction");
  Eigen::MatrixXd b = direction / direction.norm();
  return Subspace(static_cast<int>(direction.size()), 1, b);
}

double Subspace::complement_norm(const Eigen::VectorXd& x) const {
  return project_complement(x).norm();
}

Subspace Subspace::orthogonal_complement() const {
  require(d_ < n_, "orthogonal_complement: full subspace");
  // Full QR of the basis; the trailing n-d columns of Q span the complement.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis_);
  Eigen::MatrixXd q = qr.householderQ();
  return Subspace(n_, n_ - d_, q.rightCols(n_ - d_));
}

bool Subspace::contains(const Subspace& w, double tol) const {
  if (w.ambient_dim() != n_ || w.dim() > d_) return false;
  return ((w.basis() - basis_ * (basis_.transpose() * w.basis())).cwiseAbs().maxCoeff() <= tol);
}

double metric_distance(const Subspace& a, const Subspace& b) {
  require(a.ambient_dim() == b.ambient_dim(), "metric_distance: ambient dimension mismatch");
  require(a.dim() == b.dim(), "metric_distance: subspace dimension mismatch");
  Eigen::MatrixXd diff = a.projector() - b.projector();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

PrincipalDecomposition principal_angles(const Subspace& a, const Subspace& b, double tol) {
  require(a.ambient_dim() == b.ambient_dim(), "principal_angles: ambient dimension mismatch");
  require(a.dim() == b.dim(), "principal_angles: subspace dimension mismatch");
  require(tol > 0, "principal_angles: tol must be positive");
  const int d = a.dim();

  // Cosines: singular values of B_a^T B_b (descending -> angles ascending).
  Eigen::MatrixXd cross = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd cosv = svd.singularValues();

  // Sines from the complementary factor; accurate for small angles.
  Eigen::MatrixXd resid = b.basis() - a.basis() * cross;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_sin(resid);
  Eigen::VectorXd sin_desc = svd_sin.singularValues();

  PrincipalDecomposition out;
  out.angles.resize(d);
  for (int j = 0; j < d; ++j) {
    double c = std::min(1.0, std::max(-1.0, cosv(j)));
    double s = std::min(1.0, std::max(0.0, sin_desc(d - 1 - j)));  // ascending sines
    out.angles(j) = std::atan2(s, c);
  }
  out.basis_s = a.basis() * svd.matrixU();
  out.basis_t = b.basis() * svd.matrixV();

  int m = 0;
  while (m < d && out.angles(m) <= tol) ++m;
  out.intersection_dim = m;

  out.basis_z.resize(a.ambient_dim(), 2 * d - m);
  out.basis_z.leftCols(d) = out.basis_s;
  for (int j = m; j < d; ++j) {
    Eigen::VectorXd z = out.basis_t.col(j) - std::cos(out.angles(j)) * out.basis_s.col(j);
    double nz = z.norm();
    require(nz > 0, "principal_angles: degenerate z vector");
    out.basis_z.col(d + j - m) = z / nz;
  }
  return out;
}

// --- DirectionSet JSON ---------------------------------------------------

std::string DirectionSet::to_json() const {
  nlohmann::json j;
  j["n"] = ambient_dim();
  j["d"] = dim();
  if (separation)
    j["delta"] = *separation;
  else
    j["delta"] = nullptr;
  auto arr = nlohmann::json::array();
  for (const auto& s : elements) {
    auto basis = nlohmann::json::array();
    // column-major entries
    for (int c = 0; c < s.dim(); ++c)
      for (int r = 0; r < s.ambient_dim(); ++r) basis.push_back(s.basis()(r, c));
    arr.push_back(basis);
  }
  j["elements"] = arr;
  return j.dump();
}

DirectionSet DirectionSet::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  DirectionSet out;
  int n = j.at("n").get<int>();
  int d = j.at("d").get<int>();
  if (!j.at("delta").is_null()) out.separation = j.at("delta").get<double>();
  for (const auto& basis : j.at("elements")) {
    require(static_cast<int>(basis.size()) == n * d, "DirectionSet: element size mismatch");
    Eigen::MatrixXd b(n, d);
    int k = 0;
    for (int c = 0; c < d; ++c)
      for (int r = 0; r < n; ++r) b(r, c) = basis[k++].get<double>();
    out.elements.emplace_back(n, d, b);
  }
  return out;
}

void DirectionSet::save(const std::string& path) const {
  std::ofstream os(path);
  require(static_cast<bool>(os), "DirectionSet::save: cannot open " + path);
  os << to_json();
}

DirectionSet DirectionSet::load(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "DirectionSet::load: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return from_json(text);
}

// --- greedy net ----------------------------------------------------------

namespace {

// Subspaces in net generation are stored as flat "tags": d = 1 keeps the
// direction, d = n-1 keeps the normal (the complement map is an isometry),
// otherwise the full basis.
double small_svd_distance(const Eigen::MatrixXd& ba, const Eigen::MatrixXd& bb) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ba.transpose() * bb);
  double c = std::min(1.0, svd.singularValues().minCoeff());
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

}  // namespace

DirectionSet greedy_net(int d, int n, double delta, std::uint64_t seed, std::int64_t stop_after) {
  require(d >= 1 && d < n, "greedy_net: need 1 <= d < n");
  require(delta > 0, "greedy_net: delta must be positive");

  const bool line_mode = (d == 1 || d == n - 1);
  const int tag_dim = line_mode ? 1 : d;

  auto draw_tag = [&](Rng& r) {
    Eigen::MatrixXd g(n, tag_dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < tag_dim; ++j) g(i, j) = r.normal();
    if (tag_dim == 1) return Eigen::MatrixXd(g / g.norm());
    return orthonormalize(g);
  };

  // Flat tag storage (stride n * tag_dim); the rejection loop is the hot path.
  std::vector<double> accepted;
  const int stride = n * tag_dim;
  auto count = [&]() { return static_cast<std::int64_t>(accepted.size()) / stride; };

  // squared cosine threshold for the line test: dist >= delta  <=>  (u.v)^2 <= 1 - delta^2
  const double cos2_max = 1.0 - delta * delta;

  // Dense grid over the cube [-1,1]^n with cell size 2*delta. Conflicting
  // lines have chord distance < sqrt(2) delta from one of the two sign
  // representatives of the candidate, so a radius-1 cell scan suffices.
  const double cell = 2.0 * std::min(1.0, delta);
  const int grid_dim = static_cast<int>(std::ceil(2.0 / cell)) + 3;
  std::int64_t grid_total = 1;
  for (int j = 0; j < n; ++j) grid_total *= grid_dim;
  std::vector<std::vector<std::int32_t>> grid_cells(line_mode ? grid_total : 0);
  std::vector<std::uint8_t> cell_nonempty(line_mode ? grid_total : 0, 0);
  auto cell_index = [&](const double* u, double flip, const int* shift) -> std::int64_t {
    std::int64_t idx = 0;
    for (int j = 0; j < n; ++j) {
      int q = static_cast<int>(std::floor((flip * u[j] + 1.0) / cell)) + 1 + shift[j];
      if (q < 0 || q >= grid_dim) return -1;
      idx = idx * grid_dim + q;
    }
    return idx;
  };
  auto insert_tag = [&](std::int64_t index) {
    const double* u = accepted.data() + index * stride;
    int zero[8] = {0};
    std::int64_t idx = cell_index(u, 1.0, zero);
    grid_cells[idx].push_back(static_cast<std::int32_t>(index));
    cell_nonempty[idx] = 1;
  };
  auto line_conflicts_bucketed = [&](const double* tag, std::int64_t upto) {
    int shift[8] = {0};
    std::int64_t combos = 1;
    for (int j = 0; j < n; ++j) combos *= 3;
    for (double flip : {1.0, -1.0}) {
      for (std::int64_t c = 0; c < combos; ++c) {
        std::int64_t rem = c;
        for (int j = 0; j < n; ++j) {
          shift[j] = static_cast<int>(rem % 3) - 1;
          rem /= 3;
        }
        std::int64_t idx = cell_index(tag, flip, shift);
        if (idx < 0 || !cell_nonempty[idx]) continue;
        for (std::int32_t k : grid_cells[idx]) {
          if (k >= upto) continue;
          const double* a = accepted.data() + k * stride;
          double dot = 0.0;
          for (int j = 0; j < n; ++j) dot += tag[j] * a[j];
          if (dot * dot > cos2_max) return true;
        }
      }
    }
    return false;
  };
  auto conflicts = [&](const double* tag, std::int64_t upto) {
    if (line_mode) return line_conflicts_bucketed(tag, upto);
    Eigen::Map<const Eigen::MatrixXd> tm(tag, n, tag_dim);
    for (std::int64_t k = 0; k < upto; ++k) {
      Eigen::Map<const Eigen::MatrixXd> am(accepted.data() + k * stride, n, tag_dim);
      if (small_svd_distance(tm, am) < delta) return true;
    }
    return false;
  };

  Rng rng(seed);
  std::int64_t reject_streak = 0;
  std::uint64_t candidate_index = 0;
  const int block = 256;

  auto budget = [&]() {
    return stop_after > 0 ? stop_after : 200 * std::max<std::int64_t>(1, count());
  };

  std::vector<double> cand(static_cast<std::size_t>(block) * stride);
  std::vector<char> clear(block);
  while (reject_streak < budget()) {
    for (int i = 0; i < block; ++i) {
      Rng child = rng.derive(candidate_index + i);
      Eigen::MatrixXd tag = draw_tag(child);
      std::copy(tag.data(), tag.data() + stride, cand.begin() + i * stride);
    }
    candidate_index += block;

    // Parallel test against the accepted set as of the block start.
    const std::int64_t snapshot = count();
    std::fill(clear.begin(), clear.end(), 1);
    parallel_for(block, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i)
        if (conflicts(cand.data() + i * stride, snapshot)) clear[i] = 0;
    });

    // Serial admission in candidate order; only intra-block admissions need a
    // re-test, so the result is independent of the worker count.
    for (int i = 0; i < block; ++i) {
      if (reject_streak >= budget()) break;
      bool ok = clear[i] != 0;
      if (ok && count() > snapshot) {
        const double* tag = cand.data() + i * stride;
        if (line_mode) {
          for (std::int64_t k = snapshot; ok && k < count(); ++k) {
            const double* a = accepted.data() + k * stride;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += tag[j] * a[j];
            if (dot * dot > cos2_max) ok = false;
          }
        } else {
          Eigen::Map<const Eigen::MatrixXd> tm(tag, n, tag_dim);
          for (std::int64_t k = snapshot; ok && k < count(); ++k) {
            Eigen::Map<const Eigen::MatrixXd> am(accepted.data() + k * stride, n, tag_dim);
            if (small_svd_distance(tm, am) < delta) ok = false;
          }
        }
      }
      if (ok) {
        accepted.insert(accepted.end(), cand.begin() + i * stride,
                        cand.begin() + (i + 1) * stride);
        if (line_mode) insert_tag(count() - 1);
        reject_streak = 0;
      } else {
        ++reject_streak;
      }
    }
  }

  DirectionSet out;
  out.separation = delta;
  out.provenance = Provenance::kNet;
  const std::int64_t total = count();
  out.elements.reserve(total);
  for (std::int64_t k = 0; k < total; ++k) {
    Eigen::Map<const Eigen::MatrixXd> tag(accepted.data() + k * stride, n, tag_dim);
    if (!line_mode) {
      out.elements.emplace_back(n, d, Eigen::MatrixXd(tag));
    } else if (d == 1) {
      out.elements.emplace_back(n, 1, Eigen::MatrixXd(tag));
    } else {
      out.elements.push_back(Subspace(n, 1, Eigen::MatrixXd(tag)).orthogonal_complement());
    }
  }
  return out;
}

// --- near-orthogonal subsets and cones ------------------------------------

NearOrthogonalSubset near_orthogonal_subset(const DirectionSet& sigma_set, Eigen::VectorXd xi,
                                            double delta) {
  require(sigma_set.size() > 0, "near_orthogonal_subset: empty set");
  require(xi.size() == sigma_set.ambient_dim(), "near_orthogonal_subset: xi dimension mismatch");
  NearOrthogonalSubset out;
  double norm = xi.norm();
  require(norm > 0, "near_orthogonal_subset: xi must be nonzero");
  if (std::abs(norm - 1.0) > 1e-12) {
    xi /= norm;
    out.xi_was_normalized = true;
  }

  for (int idx = 0; idx < sigma_set.size(); ++idx) {
    const Subspace& sigma = sigma_set.elements[idx];
    double u = sigma.projection_norm(xi);
    if (u >= delta / 4) continue;
    out.indices.push_back(idx);
    if (u == 0) {
      out.replacements.push_back(sigma);
      continue;
    }
    // Replacement construction: b_1 = P_sigma(xi)/|P_sigma(xi)|, complete to a
    // basis of sigma orthogonal to b_1, then tilt b_1 off xi.
    const int n = sigma.ambient_dim();
    const int d = sigma.dim();
    Eigen::VectorXd b1 = sigma.project(xi) / u;
    Eigen::MatrixXd rest(n, d);
    rest.col(0) = b1;
    // project b_1 out of the original basis columns and re-orthonormalize
    Eigen::MatrixXd tail = sigma.basis() - b1 * (b1.transpose() * sigma.basis());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(tail, Eigen::ComputeThinU);
    for (int j = 0; j + 1 < d; ++j) rest.col(j + 1) = svd.matrixU().col(j);
    Eigen::VectorXd c1 = b1 - u * xi;
    c1 /= c1.norm();
    Eigen::MatrixXd basis = rest;
    basis.col(0) = c1;
    out.replacements.emplace_back(n, d, orthonormalize(basis));
  }
  return out;
}

bool cone_membership(const Subspace& sigma, double delta, const Eigen::VectorXd& eta,
                     double constant) {
  require(eta.size() == sigma.ambient_dim(), "cone_membership: eta dimension mismatch");
  double norm = eta.norm();
  require(norm > 0, "cone_membership: eta must be nonzero");
  return sigma.projection_norm(eta) < constant * delta * norm;
}

// --- cluster machinery -----------------------------------------------------

std::vector<Eigen::VectorXd> bad_xi_candidates(const DirectionSet& sigma_set, double delta,
                                               const CandidatePolicy& policy) {
  const int n = sigma_set.ambient_dim();
  std::vector<Eigen::VectorXd> pool;

  // (i) mesh net on the (projective) sphere
  DirectionSet mesh = greedy_net(1, n, std::max(1e-3, policy.mesh_factor * delta),
                                 policy.seed * 7919 + 13);
  for (const auto& e : mesh.elements) pool.push_back(e.basis().col(0));

  // (ii) random unit vectors
  Rng rng(policy.seed * 104729 + 17);
  const int rand_count = policy.random_per_element * sigma_set.size();
  for (int i = 0; i < rand_count; ++i) {
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v(j) = rng.normal();
    pool.push_back(v / v.norm());
  }

  // (iii) per-pair joint projection minimizers
  if (policy.pair_minimizers) {
    for (int a = 0; a < sigma_set.size(); ++a) {
      for (int b = a + 1; b < sigma_set.size(); ++b) {
        const Subspace& sa = sigma_set.elements[a];
        const Subspace& sb = sigma_set.elements[b];
        Eigen::MatrixXd sum = sa.projector() + sb.projector();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sum);
        Eigen::VectorXd xi = es.eigenvectors().col(0);  // smallest eigenvalue
        xi /= xi.norm();
        // a few subgradient steps on max(|P_a xi|, |P_b xi|)
        for (int it = 0; it < 8; ++it) {
          double pa = sa.projection_norm(xi), pb = sb.projection_norm(xi);
          const Subspace& worst = pa >= pb ? sa : sb;
          Eigen::VectorXd g = worst.project(xi);
          if (g.norm() < 1e-14) break;
          xi -= (0.5 / (it + 1)) * g;
          xi /= xi.norm();
        }
        pool.push_back(xi);
      }
    }
  }
  return pool;
}

int max_cone_overlap(const DirectionSet& set, double delta,
                     const std::vector<Eigen::VectorXd>& pool) {
  if (pool.empty() || set.size() == 0) return 0;
  std::vector<int> counts(pool.size(), 0);
  parallel_for(static_cast<std::int64_t>(pool.size()), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      int c = 0;
      for (const auto& sigma : set.elements)
        if (cone_membership(sigma, delta, pool[i], kClusterConeConstant)) ++c;
      counts[i] = c;
    }
  });
  return *std::max_element(counts.begin(), counts.end());
}

ClusterDecomposition cluster_decompose(const DirectionSet& sigma_set, double delta,
                                       const CandidatePolicy& policy) {
  ClusterDecomposition out;
  if (sigma_set.size() == 0) return out;
  const int n = sigma_set.ambient_dim();
  const int d = sigma_set.dim();
  const double num = static_cast<double>(sigma_set.size());
  out.threshold = std::ceil(std::pow(num, static_cast<double>(n - d - 1) / (n - d)));

  std::vector<Eigen::VectorXd> pool = bad_xi_candidates(sigma_set, delta, policy);
  std::vector<int> live(sigma_set.size());
  for (std::size_t i = 0; i < live.size(); ++i) live[i] = static_cast<int>(i);

  const std::int64_t step_cap =
      static_cast<std::int64_t>(std::pow(num, static_cast<double>(d)));

  while (!live.empty() && out.steps < std::max<std::int64_t>(1, step_cap)) {
    // count cone memberships of the residual set over the pool
    std::vector<int> counts(pool.size(), 0);
    parallel_for(static_cast<std::int64_t>(pool.size()), [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        int c = 0;
        for (int idx : live)
          if (cone_membership(sigma_set.elements[idx], delta, pool[i], kClusterConeConstant)) ++c;
        counts[i] = c;
      }
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (counts[i] > counts[best]) best = i;
    if (counts[best] <= out.threshold) break;

    Cluster cluster;
    cluster.top = pool[best];
    std::vector<int> rest;
    for (int idx : live) {
      if (cone_membership(sigma_set.elements[idx], delta, pool[best], kClusterConeConstant))
        cluster.members.elements.push_back(sigma_set.elements[idx]);
      else
        rest.push_back(idx);
    }
    cluster.members.provenance = sigma_set.provenance;
    out.clusters.push_back(std::move(cluster));
    live.swap(rest);
    ++out.steps;
  }

  out.sigma0.provenance = sigma_set.provenance;
  out.sigma0.separation = sigma_set.separation;
  for (int idx : live) out.sigma0.elements.push_back(sigma_set.elements[idx]);
  return out;
}

}  // namespace gmxa::grassmann
