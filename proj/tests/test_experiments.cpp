#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gmxa/experiments.hpp"

using namespace gmxa;
namespace fs = std::filesystem;

TEST_SUITE("experiments") {

TEST_CASE("config parsing") {
  auto dir = fs::temp_directory_path() / "gmxa_cfg";
  fs::create_directories(dir);
  {
    std::ofstream inc(dir / "base.conf");
    inc << "grid = 64\nseed = 9\n";
  }
  {
    std::ofstream os(dir / "main.conf");
    os << "# comment line\n"
       << "include base.conf\n"
       << "kind = net-cardinality   # trailing comment\n"
       << "sweep = 0.25, 0.125\n";
  }
  Config cfg = Config::load((dir / "main.conf").string());
  CHECK(cfg.get_string("kind") == "net-cardinality");
  CHECK(cfg.get_int("grid") == 64);
  CHECK(cfg.get_list("sweep").size() == 2);
  CHECK(cfg.get_double("missing", 7.5) == 7.5);
  CHECK_THROWS_AS(cfg.get_string("absent"), DomainError);
  auto violations = cfg.validate_required({"kind", "nope", "other"});
  CHECK(violations.size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("fit scaling") {
  SUBCASE("exact power law") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {1.0, 2.0, 4.0, 8.0}) pts.emplace_back(x, std::sqrt(x));
    auto fit = experiments::fit_scaling(pts, "power");
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("exact log law") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {2.0, 4.0, 8.0, 16.0}) pts.emplace_back(x, std::log(x));
    auto fit = experiments::fit_scaling(pts, "log");
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("noisy sqrt-log stays a good fit") {
    Rng rng(1);
    std::vector<std::pair<double, double>> pts;
    for (double x = 2; x <= 4096; x *= 2)
      pts.emplace_back(x, std::sqrt(std::log(x)) * (1.0 + 0.01 * rng.normal()));
    auto fit = experiments::fit_scaling(pts, "sqrtlog");
    CHECK(fit.r2 > 0.95);
  }
  SUBCASE("guards") {
    std::vector<std::pair<double, double>> pts = {{1, 1}, {2, -1}, {3, 2}};
    CHECK_THROWS_AS(experiments::fit_scaling(pts, "power"), DomainError);
    CHECK_THROWS_AS(experiments::fit_scaling(pts, "banana"), DomainError);
  }
}

TEST_CASE("report emission") {
  auto dir = fs::temp_directory_path() / "gmxa_report";
  fs::remove_all(dir);

  SUBCASE("empty sweep writes a header-only csv") {
    experiments::ScalingReport rep;
    rep.kind = "demo";
    rep.fit.model = "none";
    experiments::emit_report(rep, dir.string());
    std::ifstream is(dir / "series.csv");
    std::string header, rest;
    std::getline(is, header);
    CHECK(header.rfind("parameter,value", 0) == 0);
    CHECK_FALSE(std::getline(is, rest));
  }
  SUBCASE("json round trip") {
    experiments::ScalingReport rep;
    rep.kind = "demo";
    rep.fit = {"power", 0.5, 1.25, 0.99};
    experiments::SweepPoint p;
    p.parameter = 2.0;
    p.value = 3.5;
    p.extra["aux"] = 1.0 / 3.0;
    rep.points.push_back(p);
    rep.comparison_law = "demo law";
    rep.exponent_source = "exact";
    auto back = experiments::ScalingReport::from_json(rep.to_json());
    CHECK(back.kind == rep.kind);
    CHECK(back.points.size() == 1);
    CHECK(back.points[0].value == rep.points[0].value);
    CHECK(back.points[0].extra.at("aux") == rep.points[0].extra.at("aux"));
    CHECK(back.fit.slope == rep.fit.slope);
  }
  fs::remove_all(dir);
}

TEST_CASE("determinism across thread counts") {
  Config cfg;
  cfg.set("kind", "net-cardinality");
  cfg.set("d", "1");
  cfg.set("n", "2");
  cfg.set("sweep", "0.25,0.125,0.0625");
  cfg.set("seed", "5");
  cfg.set("stop_after", "4000");
  cfg.set("record_runtime", "false");  // wall-clock is the one nondeterministic field

  int saved = max_threads();
  set_max_threads(1);
  auto rep1 = experiments::run_experiment(cfg);
  set_max_threads(2);
  auto rep2 = experiments::run_experiment(cfg);
  set_max_threads(saved);
  CHECK(rep1.to_json() == rep2.to_json());
}

TEST_CASE("checkpoint resume skips computed points") {
  auto dir = fs::temp_directory_path() / "gmxa_resume";
  fs::remove_all(dir);
  Config cfg;
  cfg.set("kind", "net-cardinality");
  cfg.set("d", "1");
  cfg.set("n", "2");
  cfg.set("sweep", "0.25,0.125");
  cfg.set("seed", "5");
  cfg.set("stop_after", "2000");
  cfg.set("out", dir.string());

  auto rep1 = experiments::run_experiment(cfg);
  REQUIRE(fs::exists(dir / "checkpoint.json"));
  cfg.set("resume", "true");
  auto rep2 = experiments::run_experiment(cfg);
  REQUIRE(rep2.points.size() == rep1.points.size());
  for (std::size_t i = 0; i < rep1.points.size(); ++i) {
    CHECK(rep2.points[i].value == rep1.points[i].value);
    CHECK(rep2.points[i].runtime_seconds == rep1.points[i].runtime_seconds);  // loaded, not rerun
  }
  fs::remove_all(dir);
}

TEST_CASE("principal angle bruteforce oracle is self consistent") {
  // identical planes have both angles zero; orthogonal coordinate planes both pi/2
  Rng rng(2);
  auto a = grassmann::Subspace::random(4, 2, rng);
  auto same = experiments::principal_angles_bruteforce(a, a, 1e-3);
  CHECK(same(0) <= 2e-3);
  CHECK(same(1) <= 2e-3);
  Eigen::MatrixXd b1(4, 2), b2(4, 2);
  b1 << 1, 0, 0, 1, 0, 0, 0, 0;
  b2 << 0, 0, 0, 0, 1, 0, 0, 1;
  auto ortho = experiments::principal_angles_bruteforce(grassmann::Subspace(4, 2, b1),
                                                        grassmann::Subspace(4, 2, b2), 1e-3);
  CHECK(ortho(0) == doctest::Approx(kPi / 2).epsilon(1e-3));
  CHECK(ortho(1) == doctest::Approx(kPi / 2).epsilon(1e-3));
}

TEST_CASE("kakeya quotient grows as delta shrinks") {
  Config cfg;
  cfg.set("kind", "kakeya-l2");
  cfg.set("sweep", "0.2,0.1");
  cfg.set("seed", "3");
  auto rep = experiments::run_experiment(cfg);
  REQUIRE(rep.points.size() == 2);
  CHECK(rep.points[1].value > rep.points[0].value);
  // the two-point slope in 1/delta stays near +1/2
  double slope = std::log(rep.points[1].value / rep.points[0].value) / std::log(2.0);
  CHECK(slope >= 0.3);
  CHECK(slope <= 0.7);
}

TEST_CASE("codim1 decay slope") {
  Config cfg;
  cfg.set("kind", "codim1-decay");
  cfg.set("sweep", "1");
  cfg.set("v_count", "8");
  cfg.set("mu", "0.01");
  auto rep = experiments::run_experiment(cfg);
  REQUIRE(rep.points.size() == 1);
  if (rep.points[0].extra.at("populated") >= 3) CHECK(rep.points[0].value <= -0.5);
}

}  // TEST_SUITE
