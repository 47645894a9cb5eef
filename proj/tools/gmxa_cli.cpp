// gmxa: configuration-driven experiment harness for the subspace-average
// laboratory. Each subcommand reads one config file and writes one report
// directory (report.json, series.csv, plot.dat, checkpoint.json).

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <map>
#include <string>

#include "gmxa/config.hpp"
#include "gmxa/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int threads = 0;
  bool resume = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "experiment config file")->required();
  cmd->add_option("--out", opt.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opt.seed, "master seed (overrides config)");
  cmd->add_option("--threads", opt.threads, "worker thread cap");
  cmd->add_flag("--resume", opt.resume, "resume from the checkpoint in the output directory");
}

// subcommand name -> default experiment kind
const std::map<std::string, std::string> kKindOf = {
    {"net", "net-cardinality"},          {"angles", "principal-angles-oracle"},
    {"intersect", "intersection-bound"}, {"maxavg", "maxavg-2d-logn"},
    {"nikodym", "nikodym-weak22"},       {"kakeya", "kakeya-l2"},
    {"cluster", "cluster-contract"},     {"extremal", "perron-area"},
    {"carleson", "codim1-embedding"},    {"scaling", ""}};

int run(const std::string& name, const CommonOptions& opt) {
  gmxa::Config cfg;
  try {
    cfg = gmxa::Config::load(opt.config_path);
  } catch (const gmxa::DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitIo;
  }
  if (!opt.out_dir.empty()) cfg.set("out", opt.out_dir);
  if (opt.seed >= 0) cfg.set("seed", std::to_string(opt.seed));
  if (opt.resume) cfg.set("resume", "true");
  if (opt.threads > 0) gmxa::set_max_threads(opt.threads);

  const std::string implied = kKindOf.at(name);
  if (!cfg.has("kind")) {
    if (implied.empty()) {
      std::fprintf(stderr, "validation: scaling requires 'kind' in the config\n");
      return kExitValidation;
    }
    cfg.set("kind", implied);
  }

  // enumerate all validation failures before bailing
  std::vector<std::string> violations = cfg.validate_required({"kind"});
  if (cfg.has("sweep")) {
    try {
      auto sweep = cfg.get_list("sweep");
      if (!std::is_sorted(sweep.begin(), sweep.end()))
        violations.push_back("sweep values must be sorted ascending");
    } catch (const gmxa::DomainError& e) {
      violations.push_back(e.what());
    }
  }
  if (cfg.get_double("budget_seconds", 120.0) <= 0)
    violations.push_back("budget_seconds must be positive");
  if (!violations.empty()) {
    for (const auto& v : violations) std::fprintf(stderr, "validation: %s\n", v.c_str());
    return kExitValidation;
  }

  gmxa::experiments::ScalingReport report;
  try {
    report = gmxa::experiments::run_experiment(cfg);
  } catch (const gmxa::DomainError& e) {
    std::fprintf(stderr, "validation: %s\n", e.what());
    return kExitValidation;
  }

  const std::string out = cfg.get_string("out", "out-" + report.kind);
  try {
    gmxa::experiments::emit_report(report, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  }

  int usable = 0;
  for (const auto& p : report.points)
    if (!p.skipped && !p.budget_exceeded) ++usable;
  std::printf("%s: %zu points (%d within budget), fit %s slope=%.4f r2=%.4f -> %s\n",
              report.kind.c_str(), report.points.size(), usable, report.fit.model.c_str(),
              report.fit.slope, report.fit.r2, out.c_str());
  if (usable == 0) return kExitBudget;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for maximal subspace averages"};
  app.require_subcommand(1);

  std::map<std::string, CommonOptions> opts;
  for (const auto& [name, kind] : kKindOf) {
    auto* cmd = app.add_subcommand(
        name,
        kind.empty() ? "run any experiment kind from a config" : "run the " + kind + " experiment");
    add_common(cmd, opts[name]);
  }

  CLI11_PARSE(app, argc, argv);
  for (const auto& [name, kind] : kKindOf)
    if (app.got_subcommand(name)) return run(name, opts.at(name));
  return kExitValidation;
}
