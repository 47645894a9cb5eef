#include <doctest.h>

#include <cmath>

#include "gmxa/plates.hpp"

using namespace gmxa;
using grassmann::Subspace;
using plates::Plate;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<int>(v.size()));
  int i = 0;
  for (double c : v) x(i++) = c;
  return x;
}

Subspace line2(double angle) {
  return Subspace::line(vec({std::cos(angle), std::sin(angle)}));
}

}  // namespace

TEST_SUITE("plates") {

TEST_CASE("membership") {
  Plate p(line2(0.0), vec({0, 0}), 1.0, 0.1);
  CHECK(p.contains(vec({0, 0})));
  CHECK_FALSE(p.contains(vec({2.0, 0})));  // outside the long radius
  CHECK(p.contains(vec({0.5, 0.05})));
  CHECK_FALSE(p.contains(vec({0.5, 0.15})));
  CHECK_FALSE(p.contains(vec({0.5, 0.1})));  // short direction is open
  CHECK(p.contains(vec({1.0, 0.0})));        // long direction is closed
  CHECK_THROWS_AS(p.contains(vec({0, 0, 0})), DomainError);
}

TEST_CASE("scale covariance is exact for power-of-two dilations") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    auto sigma = Subspace::random(3, 1, rng);
    Eigen::VectorXd c(3), x(3);
    for (int j = 0; j < 3; ++j) {
      c(j) = rng.uniform(-1, 1);
      x(j) = rng.uniform(-2, 2);
    }
    Plate p(sigma, c, 0.75, 0.125);
    for (double lambda : {2.0, 4.0, 0.5}) {
      Plate q(sigma, lambda * c, lambda * 0.75, 0.125);
      CHECK(p.contains(x) == q.contains(lambda * x));
    }
  }
}

TEST_CASE("intersection volume bound") {
  SUBCASE("equal subspaces: empty angle product") {
    Rng rng(2);
    auto sigma = Subspace::random(4, 2, rng);
    Plate p(sigma, Eigen::VectorXd::Zero(4), 1.0, 0.05);
    CHECK(plates::intersection_volume_bound(p, p) ==
          doctest::Approx(std::pow(0.05, 2)).epsilon(1e-10));
  }
  SUBCASE("perpendicular planar lines") {
    Plate p(line2(0.0), vec({0, 0}), 1.0, 0.01);
    Plate q(line2(kPi / 2), vec({0, 0}), 1.0, 0.01);
    CHECK(plates::intersection_volume_bound(p, q) ==
          doctest::Approx(0.0001 / (kPi / 2)).epsilon(1e-9));  // 6.366e-5
  }
}

TEST_CASE("monte carlo volume: self, disjoint, exact rhombus") {
  SUBCASE("p = q recovers the analytic plate volume") {
    Rng rng(3);
    for (auto [d, n] : {std::pair{1, 2}, {1, 3}, {2, 3}}) {
      auto sigma = Subspace::random(n, d, rng);
      Plate p(sigma, Eigen::VectorXd::Zero(n), 1.0, 0.1);
      auto mc = plates::mc_intersection_volume(p, p, 200000, 5);
      CHECK(std::abs(mc.estimate - p.volume()) <= 3 * mc.stderr_ + 1e-12);
    }
  }
  SUBCASE("disjoint translates short-circuit") {
    Plate p(line2(0.3), vec({0, 0}), 1.0, 0.05);
    Plate q(line2(0.3), vec({10, 0}), 1.0, 0.05);
    auto mc = plates::mc_intersection_volume(p, q, 5000, 1);
    CHECK(mc.estimate == 0.0);
    CHECK(mc.stderr_ == 0.0);
  }
  SUBCASE("crossing bands match the exact parallelogram area") {
    // two width-2delta bands crossing at angle theta overlap in area
    // (2 delta)^2 / sin(theta) while the crossing stays inside both lengths
    for (double theta : {kPi / 2, kPi / 3}) {
      double delta = 0.01;
      Plate p(line2(0.0), vec({0, 0}), 1.0, delta);
      Plate q(line2(theta), vec({0, 0}), 1.0, delta);
      double exact = 4 * delta * delta / std::sin(theta);
      auto mc = plates::mc_intersection_volume(p, q, 4000000, 7);
      CHECK(std::abs(mc.estimate - exact) <= 3 * mc.stderr_);
      CHECK(mc.stderr_ < 0.2 * exact);
    }
  }
}

TEST_CASE("analytic volume against monte carlo on random plates") {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    int n = 2 + static_cast<int>(rng.uniform_int(2));
    int d = 1 + static_cast<int>(rng.uniform_int(n - 1));
    auto sigma = Subspace::random(n, d, rng);
    double s = rng.uniform(0.5, 2.0);
    double delta = rng.uniform(0.05, 0.3);
    Plate p(sigma, Eigen::VectorXd::Zero(n), s, delta);
    auto mc = plates::mc_intersection_volume(p, p, 100000, 100 + i);
    CHECK(std::abs(mc.estimate - p.volume()) <= 3.5 * mc.stderr_ + 1e-12);
  }
}

TEST_CASE("intersection bound holds against monte carlo") {
  Rng rng(5);
  for (auto [d, n] : {std::pair{1, 2}, {2, 3}}) {
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
      auto sigma = Subspace::random(n, d, rng);
      auto tau = Subspace::random(n, d, rng);
      Plate p(sigma, Eigen::VectorXd::Zero(n), 1.0, 0.05);
      Plate q(tau, p.sample_inside(rng), 1.0, 0.05);
      auto mc = plates::mc_intersection_volume(p, q, 200000, 900 + i);
      worst = std::max(worst, mc.estimate / plates::intersection_volume_bound(p, q));
    }
    CHECK(worst > 0.0);
    CHECK(worst <= 32.0);  // the implicit dimensional constant, reported via experiments
  }
}

TEST_CASE("covering dilate") {
  SUBCASE("tau = sigma at dilation 3 is the triple dilate") {
    Rng rng(6);
    auto sigma = Subspace::random(3, 1, rng);
    Plate p(sigma, vec({0.2, -0.1, 0.0}), 1.0, 0.1);
    auto dil = plates::covering_dilate(p, sigma, 3.0);
    // sampled points of the 2.9-dilate are inside, 3.1-dilate corners escape
    int escapes = 0;
    for (int i = 0; i < 2000; ++i) {
      Plate inner(sigma, p.center, 2.9, 0.1);
      if (!dil.contains(inner.sample_inside(rng))) ++escapes;
    }
    CHECK(escapes == 0);
    Eigen::VectorXd far = p.center + 3.05 * p.frame().col(0);
    CHECK_FALSE(dil.contains(far));
  }
  SUBCASE("theta_d = delta pins the short width") {
    double delta = 0.1;
    auto sigma = line2(0.0);
    auto tau = line2(delta);  // angle ~ delta, sin(theta) <= delta
    Plate p(sigma, vec({0, 0}), 1.0, delta);
    auto dil = plates::covering_dilate(p, tau, 3.0);
    double theta = dil.angles.angles(0);
    CHECK(std::max(delta, theta) == doctest::Approx(delta).epsilon(0.05));
  }
  SUBCASE("intersecting pairs never escape the default dilate") {
    Rng rng(7);
    for (auto [d, n] : {std::pair{1, 2}, {1, 3}}) {
      for (int trial = 0; trial < 100; ++trial) {
        auto sigma = Subspace::random(n, d, rng);
        auto tau = Subspace::random(n, d, rng);
        double delta = rng.uniform(0.02, 0.2);
        Plate p(sigma, Eigen::VectorXd::Zero(n), 1.0, delta);
        Plate q(tau, p.sample_inside(rng), 1.0, delta);
        // the sampled anchor witnesses p cap q nonempty up to the open border;
        // points of q must stay inside the dilate
        auto dil = plates::covering_dilate(p, tau);
        for (int i = 0; i < 100; ++i) CHECK(dil.contains(q.sample_inside(rng)));
      }
    }
  }
}

TEST_CASE("sheared plates") {
  SUBCASE("construction guards") {
    CHECK_THROWS_AS(plates::make_sheared_plate(vec({0, 0}), 1.0, 0, 0.1, vec({1, 0, 0.5})),
                    DomainError);  // tilted 63 degrees off e_n
    CHECK_THROWS_AS(plates::make_sheared_plate(vec({0, 0}), 0.5, 0, 0.6, vec({0, 0, 1})),
                    DomainError);  // |K| > l_I
  }
  SUBCASE("membership and shear coordinate") {
    auto q = plates::make_sheared_plate(vec({0, 0}), 1.0, -0.05, 0.05,
                                        vec({0.05, 0.0, 1.0}));
    Eigen::VectorXd y = q.center();
    CHECK(q.contains(y));
    CHECK(q.shear_coord(y) == doctest::Approx(0.0).epsilon(1e-12));
    // volume is base^d * |K| (shears preserve measure)
    CHECK(q.volume() == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("vertical slices are constant and equal the base overlap") {
    auto q = plates::make_sheared_plate(vec({0.1, 0.0}), 0.8, -0.1, 0.1, vec({0, 0, 1}));
    auto r = plates::make_sheared_plate(vec({0, 0}), 1.0, -0.2, 0.2, vec({0, 0, 1}));
    double expected = 0.8 * 0.8;  // overlap of the two base squares
    for (double a : {-0.05, 0.0, 0.08}) {
      CHECK(plates::sheared_slice_measure(q, r, a, 512) == doctest::Approx(expected).epsilon(0.01));
    }
    CHECK(plates::sheared_slice_measure(q, r, 0.5, 128) == 0.0);  // outside the projection
  }
  SUBCASE("shear to vertical preserves membership") {
    Rng rng(8);
    auto frame = plates::make_sheared_plate(vec({0.1, -0.2}), 1.0, -0.06, 0.06,
                                            vec({0.1, -0.05, 1.0}));
    auto other = plates::make_sheared_plate(vec({0.0, 0.1}), 0.8, -0.1, 0.02,
                                            vec({-0.08, 0.02, 1.0}));
    auto v_frame = plates::sheared_vertical_image(frame);
    auto v_other = plates::shear_to_vertical(frame, other);
    CHECK((v_frame.v - Eigen::VectorXd::Unit(3, 2)).norm() <= 1e-12);
    // the map W(y) = (w, shear_coord_frame(y)) carries membership across
    for (int i = 0; i < 2000; ++i) {
      Eigen::VectorXd y(3);
      y << rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.4, 0.4);
      Eigen::VectorXd z(3);
      z << y(0), y(1), frame.shear_coord(y);
      CHECK(frame.contains(y) == v_frame.contains(z));
      CHECK(other.contains(y) == v_other.contains(z));
    }
  }
  SUBCASE("slicing comparison for tilted pairs") {
    // max_a slice <= C * mean over I x 3K, with K grown until the hypothesis
    // pi_n(hat Q) not subset of 3K holds
    Rng rng(9);
    int checked = 0;
    for (int trial = 0; trial < 200 && checked < 40; ++trial) {
      double tilt1 = rng.uniform(-0.12, 0.12), tilt2 = rng.uniform(-0.12, 0.12);
      auto q = plates::make_sheared_plate(
          vec({rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)}), rng.uniform(0.3, 0.7),
          -0.02, 0.02, vec({tilt1, tilt2, 1.0}));
      auto r = plates::make_sheared_plate(vec({0, 0}), 1.0, -0.02, 0.02, vec({0, 0, 1.0}));
      // hat of q in the pair (q, r): directions differ, so the hat rotates
      // the base; here the identity basis cube already contains it, so use q.
      double klo = r.k_lo, khi = r.k_hi;
      // grow K by factors of 3 until the projection escapes 3K
      double span_lo = 1e300, span_hi = -1e300;
      for (double sl : {-0.5, 0.5})
        for (double sw : {-0.5, 0.5}) {
          Eigen::VectorXd w = q.i_center;
          Eigen::VectorXd local(2);
          local << sl * q.i_side, sw * q.i_side;
          Eigen::VectorXd slope = q.v.head(2) / q.v(2);
          Eigen::VectorXd wl = q.i_center + q.i_basis * local;
          double base = -(wl - q.i_center).dot(slope);
          span_lo = std::min({span_lo, q.k_lo + base, q.k_hi + base});
          span_hi = std::max({span_hi, q.k_lo + base, q.k_hi + base});
          (void)w;
        }
      int grow = 0;
      while (grow < 6) {
        double mid = 0.5 * (klo + khi), half = 0.5 * (khi - klo) * 3;
        if (span_lo < mid - half || span_hi > mid + half) break;
        klo = mid - half;
        khi = mid + half;
        ++grow;
      }
      double mid = 0.5 * (klo + khi), half = 0.5 * (khi - klo) * 3;
      if (!(span_lo < mid - half || span_hi > mid + half)) continue;  // hypothesis failed
      ++checked;
      double max_slice = 0.0, mean = 0.0;
      const int agrid = 60;
      for (int i = 0; i < agrid; ++i) {  // the max scans the whole projection of q
        double a = span_lo + (i + 0.5) * (span_hi - span_lo) / agrid;
        max_slice = std::max(max_slice, plates::sheared_slice_measure(q, r, a, 160));
      }
      for (int i = 0; i < agrid; ++i) {
        double a = mid - half + (i + 0.5) * (2 * half) / agrid;
        mean += plates::sheared_slice_measure(q, r, a, 160);
      }
      mean /= agrid;
      if (mean <= 0) continue;
      CHECK(max_slice <= 16.0 * mean);
    }
    CHECK(checked >= 20);
  }
}

}  // TEST_SUITE
