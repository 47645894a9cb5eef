#include "gmxa/carleson.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

namespace gmxa::carleson {

namespace {

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ull + b;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// conservative axis-aligned bounds of a sheared plate
void plate_bounds(const ShearedPlate& p, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  const int n = p.n, d = n - 1;
  lo.resize(n);
  hi.resize(n);
  double r = 0.5 * p.i_side * std::sqrt(static_cast<double>(d));
  for (int a = 0; a < d; ++a) {
    lo(a) = p.i_center(a) - r;
    hi(a) = p.i_center(a) + r;
  }
  // last-axis extent: y_n = t - (w - c_I).slope with t in K, w in I
  Eigen::VectorXd slope = p.v.head(d) / p.v(d);
  double swing = (p.i_basis.transpose() * slope).cwiseAbs().sum() * 0.5 * p.i_side;
  lo(d) = p.k_lo - swing - 1e-12;
  hi(d) = p.k_hi + swing + 1e-12;
}

Eigen::VectorXd grid_point(const MeasureGrid& g, std::int64_t flat) {
  const int n = static_cast<int>(g.shape.size());
  Eigen::VectorXd x(n);
  for (int a = n - 1; a >= 0; --a) {
    x(a) = g.lo(a) + (static_cast<double>(flat % g.shape[a]) + 0.5) * g.h;
    flat /= g.shape[a];
  }
  return x;
}

std::int64_t grid_size(const MeasureGrid& g) {
  std::int64_t total = 1;
  for (int s : g.shape) total *= s;
  return total;
}

// iterate grid cells whose centers lie in the plate: walk the base bounding
// box and visit only the K-range rows of each base column
template <typename Fn>
void for_cells_in_plate(const MeasureGrid& g, const ShearedPlate& p, Fn&& fn) {
  const int n = static_cast<int>(g.shape.size());
  const int d = n - 1;
  Eigen::VectorXd lo, hi;
  plate_bounds(p, lo, hi);
  std::vector<int> a0(n), a1(n);
  for (int a = 0; a < n; ++a) {
    a0[a] = std::max(0, static_cast<int>(std::floor((lo(a) - g.lo(a)) / g.h)));
    a1[a] = std::min(g.shape[a] - 1, static_cast<int>(std::ceil((hi(a) - g.lo(a)) / g.h)));
    if (a0[a] > a1[a]) return;
  }
  Eigen::VectorXd slope = p.v.head(d) / p.v(d);
  std::vector<int> idx(a0.begin(), a0.begin() + d);
  Eigen::VectorXd w(d);
  Eigen::VectorXd x(n);
  while (true) {
    for (int a = 0; a < d; ++a) w(a) = g.lo(a) + (idx[a] + 0.5) * g.h;
    if (p.base_contains(w)) {
      // y_n in [k_lo - (w-c).slope, k_hi - (w-c).slope]
      double shear = (w - p.i_center).dot(slope);
      int r0 = std::max(a0[d], static_cast<int>(std::floor((p.k_lo - shear - g.lo(d)) / g.h)));
      int r1 = std::min(a1[d], static_cast<int>(std::ceil((p.k_hi - shear - g.lo(d)) / g.h)));
      std::int64_t base_flat = 0;
      for (int a = 0; a < d; ++a) base_flat = base_flat * g.shape[a] + idx[a];
      base_flat *= g.shape[d];
      x.head(d) = w;
      for (int r = r0; r <= r1; ++r) {
        x(d) = g.lo(d) + (r + 0.5) * g.h;
        if (p.contains(x)) fn(base_flat + r, x);
      }
    }
    int a = d - 1;
    while (a >= 0 && ++idx[a] > a1[a]) {
      idx[a] = a0[a];
      --a;
    }
    if (a < 0) break;
  }
}

}  // namespace

bool PlateLattice::leq(int q, int r) const {
  const ShearedPlate& pq = plates[q];
  const ShearedPlate& pr = plates[r];
  // I_Q subset I_R (axis-aligned lattice cubes)
  for (int a = 0; a < pq.n - 1; ++a) {
    if (pq.i_center(a) - 0.5 * pq.i_side < pr.i_center(a) - 0.5 * pr.i_side - 1e-12) return false;
    if (pq.i_center(a) + 0.5 * pq.i_side > pr.i_center(a) + 0.5 * pr.i_side + 1e-12) return false;
  }
  // nonempty intersection: scan the overlap of the bases for a common point
  // (coarse deterministic probe at the finer base resolution)
  const int probes = 6;
  const int d = pq.n - 1;
  Eigen::VectorXd slope_q = pq.v.head(d) / pq.v(d);
  Eigen::VectorXd slope_r = pr.v.head(d) / pr.v(d);
  std::vector<int> idx(d, 0);
  while (true) {
    Eigen::VectorXd w(d);
    for (int a = 0; a < d; ++a)
      w(a) = pq.i_center(a) + (static_cast<double>(idx[a]) / (probes - 1) - 0.5) * pq.i_side;
    // y_n ranges available to each plate at base point w
    double qlo = pq.k_lo - (w - pq.i_center).dot(slope_q);
    double qhi = pq.k_hi - (w - pq.i_center).dot(slope_q);
    double rlo = pr.k_lo - (w - pr.i_center).dot(slope_r);
    double rhi = pr.k_hi - (w - pr.i_center).dot(slope_r);
    if (std::max(qlo, rlo) <= std::min(qhi, rhi)) return true;
    int a = d - 1;
    while (a >= 0 && ++idx[a] >= probes) {
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return false;
}

std::string PlateLattice::to_json_summary() const {
  nlohmann::json j;
  j["delta"] = delta;
  j["directions"] = direction_count();
  j["plates"] = size();
  j["depth"] = options.depth;
  j["box_halfwidth"] = options.box_halfwidth;
  return j.dump();
}

PlateLattice build_lattice(const std::vector<Eigen::VectorXd>& directions, double delta,
                           const LatticeOptions& options) {
  require(!directions.empty(), "build_lattice: need at least one direction");
  require(delta > 0, "build_lattice: delta must be positive");
  PlateLattice lat;
  lat.delta = delta;
  lat.options = options;
  const int n = static_cast<int>(directions.front().size());
  const int d = n - 1;
  for (const auto& v : directions) {
    Eigen::VectorXd unit = v / v.norm();
    if (unit(n - 1) < 0) unit = -unit;
    double tilt = std::acos(std::min(1.0, unit(n - 1)));
    require(tilt <= plates::kMaxShearTilt,
            "build_lattice: direction tilted more than pi/16 off e_n");
    lat.directions.push_back(unit);
  }

  const double b = options.box_halfwidth;
  std::vector<double> base_offsets = {0.0};
  if (options.base_shifts) base_offsets = {0.0, 1.0 / 3.0, 2.0 / 3.0};

  for (int level = 0; level <= options.depth; ++level) {
    const double side = options.base_scale * std::ldexp(1.0, -level);
    const double thick = options.proportional_thickness ? delta * side : delta;
    for (double shift : base_offsets) {
      // base cubes with corners on the shifted dyadic grid, inside the box
      int lo_idx = static_cast<int>(std::floor((-b) / side - shift));
      int hi_idx = static_cast<int>(std::ceil(b / side - shift));
      std::vector<double> starts;
      for (int i = lo_idx; i <= hi_idx; ++i) {
        double s = (i + shift) * side;
        if (s >= -b - 1e-12 && s + side <= b + 1e-12) starts.push_back(s);
      }
      if (starts.empty()) continue;
      // K grids: shifted by thirds of the thickness
      std::vector<double> k_starts;
      for (int kg = 0; kg < options.k_shift_grids; ++kg) {
        double off = thick * kg / options.k_shift_grids;
        int klo = static_cast<int>(std::floor((-b - off) / thick));
        int khi = static_cast<int>(std::ceil((b - off) / thick));
        for (int i = klo; i <= khi; ++i) {
          double s = off + i * thick;
          if (s >= -b - 1e-12 && s + thick <= b + 1e-12) k_starts.push_back(s);
        }
      }
      // enumerate base positions as a d-fold product
      std::int64_t combos = 1;
      for (int a = 0; a < d; ++a) combos *= static_cast<std::int64_t>(starts.size());
      for (std::int64_t c = 0; c < combos; ++c) {
        Eigen::VectorXd center(d);
        std::int64_t rem = c;
        for (int a = 0; a < d; ++a) {
          center(a) = starts[rem % starts.size()] + 0.5 * side;
          rem /= static_cast<std::int64_t>(starts.size());
        }
        for (double ks : k_starts) {
          for (int vi = 0; vi < lat.direction_count(); ++vi) {
            ShearedPlate p;
            p.n = n;
            p.i_center = center;
            p.i_side = side;
            p.i_basis = Eigen::MatrixXd::Identity(d, d);
            p.k_lo = ks;
            p.k_hi = ks + thick;
            p.v = lat.directions[vi];
            lat.plates.push_back(std::move(p));
            lat.direction_of.push_back(vi);
            lat.level_of.push_back(level);
          }
        }
      }
    }
  }
  return lat;
}

ShearedPlate hat_plate(const ShearedPlate& q, const ShearedPlate& r) {
  require(q.n == r.n, "hat_plate: dimension mismatch");
  const int n = q.n, d = n - 1;
  if ((q.v - r.v).norm() <= 1e-14) return q;  // same orientation: hat Q = Q
  require(d >= 2, "hat_plate: rotated hats need d >= 2");

  // lin(Q,R): direction space of af_Q cap af_R, projected to e_n^perp.
  // v_Q^perp cap v_R^perp has dimension n-2; its e_n^perp projection is the
  // orthogonal complement of span(slope_q - slope_r) within e_n^perp.
  Eigen::VectorXd slope_q = q.v.head(d) / q.v(d);
  Eigen::VectorXd slope_r = r.v.head(d) / r.v(d);
  Eigen::VectorXd diff = slope_q - slope_r;
  require(diff.norm() > 0, "hat_plate: parallel planes with distinct directions");
  // g_d = normalized diff; g_1..g_{d-1} span its complement in R^d
  Eigen::MatrixXd basis(d, d);
  basis.col(d - 1) = diff / diff.norm();
  Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(basis.col(d - 1));
  Eigen::MatrixXd qfull = qr.matrixQ();
  for (int c = 1; c < d; ++c) basis.col(c - 1) = qfull.col(c);

  // smallest basis-aligned cube containing I_Q (about its center);
  // half-extent along each new axis: sum over old axes of |cos| * half-side
  double side = 0.0;
  for (int c = 0; c < d; ++c) {
    double e = 0.0;
    for (int axis = 0; axis < d; ++axis) e += std::abs(basis(axis, c)) * 0.5 * q.i_side;
    side = std::max(side, 2.0 * e);
  }
  ShearedPlate out = q;
  out.i_basis = basis;
  out.i_side = side;
  return out;
}

double CarlesonSequence::total() const {
  double t = 0.0;
  for (double m : mass) t += m;
  return t;
}

std::string CarlesonSequence::to_json() const {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < mass.size(); ++i)
    if (mass[i] > 0) arr.push_back({{"plate", i}, {"a", mass[i]}});
  j["entries"] = arr;
  j["total"] = total();
  return j.dump();
}

MeasureGrid make_measure_grid(int n, double halfwidth, double h) {
  MeasureGrid g;
  g.h = h;
  g.lo = Eigen::VectorXd::Constant(n, -halfwidth);
  int per_axis = static_cast<int>(std::ceil(2.0 * halfwidth / h));
  g.shape.assign(n, per_axis);
  return g;
}

CarlesonSequence adjoint_sequence(
    const PlateLattice& lattice,
    const std::vector<std::function<bool(const Eigen::VectorXd&)>>& selections,
    const std::function<bool(const Eigen::VectorXd&)>& e_set, const MeasureGrid& grid,
    std::int64_t collision_samples, std::uint64_t seed) {
  require(static_cast<int>(selections.size()) == lattice.size(),
          "adjoint_sequence: one selection per plate required");
  // F_Q subset Q and pairwise disjointness by collision sampling
  Rng rng(seed);
  const int n = static_cast<int>(grid.shape.size());
  for (std::int64_t s = 0; s < collision_samples; ++s) {
    Eigen::VectorXd x(n);
    for (int a = 0; a < n; ++a)
      x(a) = rng.uniform(grid.lo(a), grid.lo(a) + grid.shape[a] * grid.h);
    int first = -1;
    for (int p = 0; p < lattice.size(); ++p) {
      if (!selections[p](x)) continue;
      require(lattice.plates[p].contains(x),
              "adjoint_sequence: F_Q escapes its plate (plate " + std::to_string(p) + ")");
      if (first >= 0)
        throw DomainError("adjoint_sequence: selections overlap (plates " +
                          std::to_string(first) + " and " + std::to_string(p) + ")");
      first = p;
    }
  }
  CarlesonSequence seq;
  seq.mass.assign(lattice.size(), 0.0);
  const double cell = std::pow(grid.h, n);
  parallel_for(lattice.size(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      double acc = 0.0;
      for_cells_in_plate(grid, lattice.plates[p], [&](std::int64_t, const Eigen::VectorXd& x) {
        if (selections[p](x) && e_set(x)) acc += cell;
      });
      seq.mass[p] = acc;
    }
  });
  return seq;
}

CarlesonSequence random_adjoint_sequence(const PlateLattice& lattice,
                                         const std::function<bool(const Eigen::VectorXd&)>& e_set,
                                         const MeasureGrid& grid, std::uint64_t seed) {
  // every cell goes to the containing plate with the best seeded hash; the
  // selection regions F_Q are disjoint by construction
  const std::int64_t cells = grid_size(grid);
  std::vector<std::uint64_t> best_hash(cells, 0);
  std::vector<int> winner(cells, -1);
  for (int p = 0; p < lattice.size(); ++p) {
    for_cells_in_plate(grid, lattice.plates[p], [&](std::int64_t flat, const Eigen::VectorXd&) {
      std::uint64_t hsh = mix(seed ^ static_cast<std::uint64_t>(flat), p + 1);
      if (winner[flat] < 0 || hsh > best_hash[flat]) {
        winner[flat] = p;
        best_hash[flat] = hsh;
      }
    });
  }
  CarlesonSequence seq;
  seq.mass.assign(lattice.size(), 0.0);
  const double cell = std::pow(grid.h, static_cast<int>(grid.shape.size()));
  for (std::int64_t c = 0; c < cells; ++c) {
    if (winner[c] < 0) continue;
    if (e_set(grid_point(grid, c))) seq.mass[winner[c]] += cell;
  }
  return seq;
}

GridFunction balayage(const PlateLattice& lattice, const CarlesonSequence& seq,
                      const std::function<bool(int)>& subset, const MeasureGrid& grid) {
  require(static_cast<int>(seq.mass.size()) == lattice.size(), "balayage: sequence mismatch");
  require(grid.h <= lattice.delta / 4 + 1e-12, "balayage: grid does not resolve delta (h > delta/4)");
  const int n = static_cast<int>(grid.shape.size());
  Eigen::VectorXd origin = grid.lo.array() + 0.5 * grid.h;
  GridFunction out(grid.shape, origin, grid.h);
  for (int p = 0; p < lattice.size(); ++p) {
    if (seq.mass[p] <= 0 || !subset(p)) continue;
    const double w = seq.mass[p] / lattice.plates[p].volume();
    for_cells_in_plate(grid, lattice.plates[p], [&](std::int64_t flat, const Eigen::VectorXd&) {
      out.values[flat] += w;
    });
  }
  return out;
}

double shadow_measure(const PlateLattice& lattice, const std::vector<int>& plate_ids,
                      const MeasureGrid& grid) {
  const std::int64_t cells = grid_size(grid);
  std::vector<char> hit(cells, 0);
  for (int p : plate_ids) {
    for_cells_in_plate(grid, lattice.plates[p], [&](std::int64_t flat, const Eigen::VectorXd&) {
      hit[flat] = 1;
    });
  }
  std::int64_t count = 0;
  for (char c : hit) count += c;
  return count * std::pow(grid.h, static_cast<int>(grid.shape.size()));
}

std::string EmbeddingReport::to_json() const {
  nlohmann::json j;
  j["balayage_l2"] = balayage_l2;
  j["mass"] = mass;
  j["directions"] = direction_count;
  j["quotient"] = quotient;
  return j.dump();
}

EmbeddingReport embedding_audit(const PlateLattice& lattice, const CarlesonSequence& seq,
                                const MeasureGrid& grid) {
  EmbeddingReport rep;
  rep.direction_count = lattice.direction_count();
  rep.mass = seq.total();
  GridFunction t = balayage(lattice, seq, [](int) { return true; }, grid);
  rep.balayage_l2 = t.lp_norm(2);
  double logv = std::log(std::max(2.0, static_cast<double>(rep.direction_count)));
  rep.quotient = rep.mass > 0 ? rep.balayage_l2 / std::sqrt(logv * rep.mass) : 0.0;
  return rep;
}

std::string DecayReport::to_json() const {
  nlohmann::json j;
  j["k"] = k_values;
  j["shadow"] = shadows;
  j["mass_bound"] = mass_bounds;
  j["slope"] = slope;
  j["populated"] = populated;
  return j.dump();
}

DecayReport decay_audit(const PlateLattice& lattice, const CarlesonSequence& seq, int v_index,
                        int k_min, int k_max, double mu, const MeasureGrid& grid, double c_n,
                        std::int64_t mc_samples, std::uint64_t seed) {
  require(v_index >= 0 && v_index < lattice.direction_count(), "decay_audit: bad direction index");
  std::vector<int> carriers;
  for (int p = 0; p < lattice.size(); ++p)
    if (seq.mass[p] > 0) carriers.push_back(p);

  std::vector<int> rs;
  for (int p = 0; p < lattice.size(); ++p)
    if (lattice.direction_of[p] == v_index && seq.mass[p] > 0) rs.push_back(p);

  // B_R by Monte Carlo over hat R; candidates restricted to Q <= R
  std::vector<double> b_of(rs.size(), 0.0);
  Rng master(seed);
  parallel_for(static_cast<std::int64_t>(rs.size()), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const int r = rs[i];
      ShearedPlate hat_r = hat_plate(lattice.plates[r], lattice.plates[r]).dilated_base(
          static_cast<double>(lattice.plates[r].n - 1));
      std::vector<int> q_ids;
      std::vector<ShearedPlate> hat_qs;
      std::vector<double> weight;
      for (int q : carriers) {
        if (!lattice.leq(q, r)) continue;
        ShearedPlate hq = hat_plate(lattice.plates[q], lattice.plates[r]);
        weight.push_back(seq.mass[q] / hq.volume());
        hat_qs.push_back(std::move(hq));
        q_ids.push_back(q);
      }
      if (q_ids.empty()) continue;
      Rng rng = master.derive(static_cast<std::uint64_t>(r));
      const int d = lattice.plates[r].n - 1;
      double acc = 0.0;
      for (std::int64_t s = 0; s < mc_samples; ++s) {
        // uniform point of hat_r via its shear frame
        Eigen::VectorXd local(d);
        for (int a = 0; a < d; ++a) local(a) = rng.uniform(-0.5, 0.5) * hat_r.i_side;
        Eigen::VectorXd w = hat_r.i_center + hat_r.i_basis * local;
        double t = rng.uniform(hat_r.k_lo, hat_r.k_hi);
        Eigen::VectorXd slope = hat_r.v.head(d) / hat_r.v(d);
        Eigen::VectorXd y(d + 1);
        y.head(d) = w;
        y(d) = t - (w - hat_r.i_center).dot(slope);
        for (std::size_t q = 0; q < hat_qs.size(); ++q)
          if (hat_qs[q].contains(y)) acc += weight[q];
      }
      b_of[i] = acc / static_cast<double>(mc_samples);
    }
  });

  DecayReport rep;
  const double mass = seq.total();
  std::vector<double> xs, ys;
  for (int k = k_min; k <= k_max; ++k) {
    std::vector<int> level;
    for (std::size_t i = 0; i < rs.size(); ++i)
      if (b_of[i] > c_n * mu * k) level.push_back(rs[i]);
    double sh = level.empty() ? 0.0 : shadow_measure(lattice, level, grid);
    rep.k_values.push_back(k);
    rep.shadows.push_back(sh);
    rep.mass_bounds.push_back(std::ldexp(mass, -k));
    if (sh > 0) {
      xs.push_back(k);
      ys.push_back(std::log(sh));
      ++rep.populated;
    }
  }
  if (rep.populated >= 2) {
    // least squares slope
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    double m = xs.size();
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return rep;
}

SubordinationReport subordination_audit(const PlateLattice& lattice, const CarlesonSequence& seq,
                                        const MeasureGrid& grid, int families, std::uint64_t seed) {
  SubordinationReport rep;
  Rng rng(seed);
  for (int f = 0; f < families; ++f) {
    // random single-direction family: a few top-scale plates in direction v
    int v = static_cast<int>(rng.uniform_int(lattice.direction_count()));
    std::vector<int> t_ids;
    for (int p = 0; p < lattice.size(); ++p)
      if (lattice.direction_of[p] == v && lattice.level_of[p] == 0 && rng.uniform() < 0.4)
        t_ids.push_back(p);
    if (t_ids.empty()) continue;
    ++rep.families;

    // mass of lattice plates contained in one of the T plates
    double contained_mass = 0.0;
    for (int p = 0; p < lattice.size(); ++p) {
      if (seq.mass[p] <= 0) continue;
      // containment probe: plate corners sampled in its shear frame
      const ShearedPlate& plate = lattice.plates[p];
      bool inside_some = false;
      for (int t : t_ids) {
        const ShearedPlate& tp = lattice.plates[t];
        bool all_in = true;
        Rng probe(seed ^ (p * 1315423911u) ^ t);
        const int d = plate.n - 1;
        Eigen::VectorXd slope = plate.v.head(d) / plate.v(d);
        for (int s = 0; s < 24 && all_in; ++s) {
          Eigen::VectorXd local(d);
          for (int a = 0; a < d; ++a) local(a) = probe.uniform(-0.5, 0.5) * plate.i_side;
          Eigen::VectorXd w = plate.i_center + plate.i_basis * local;
          double t_shear = probe.uniform(plate.k_lo, plate.k_hi);
          Eigen::VectorXd y(d + 1);
          y.head(d) = w;
          y(d) = t_shear - (w - plate.i_center).dot(slope);
          if (!tp.contains(y)) all_in = false;
        }
        if (all_in) {
          inside_some = true;
          break;
        }
      }
      if (inside_some) contained_mass += seq.mass[p];
    }
    double sh = shadow_measure(lattice, t_ids, grid);
    double ratio = sh > 0 ? contained_mass / sh : 0.0;
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio > 1.0 + 0.05) ++rep.failures;  // quadrature tolerance
  }
  return rep;
}

}  // namespace gmxa::carleson
