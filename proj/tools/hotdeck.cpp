// Command-line front end: population generation, imputation, estimation,
// bootstrap variance and the two Monte Carlo studies.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hotdeck/bootstrap.hpp"
#include "hotdeck/errors.hpp"
#include "hotdeck/estimators.hpp"
#include "hotdeck/harness.hpp"
#include "hotdeck/imputation.hpp"
#include "hotdeck/popgen.hpp"
#include "hotdeck/survey.hpp"

namespace fs = std::filesystem;
using namespace hotdeck;

namespace {

constexpr const char* kVersion = "1.0.0";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

bool wants_json(const fs::path& path) { return path.extension() == ".json"; }

PopulationSpec resolve_spec(const std::string& spec) {
  if (spec.empty() || spec == "table1") return table1_spec();
  return load_population_spec(spec);
}

std::string flag(bool b) { return b ? "1" : "0"; }

// ---- popgen ----

struct PopgenArgs {
  std::string spec = "table1";
  fs::path out;
  fs::path spec_out;
};

int run_popgen(const PopgenArgs& a) {
  const auto spec = resolve_spec(a.spec);
  const auto pop = generate_population(spec);
  save_dataset(a.out, pop);
  if (!a.spec_out.empty()) save_population_spec(a.spec_out, spec);
  const auto params = population_parameters(spec);
  std::cerr << "population: N=" << pop.size() << " p1.=" << format_double(params.p1dot)
            << " p.1=" << format_double(params.pdot1) << " p11=" << format_double(params.p11)
            << " OR=" << format_double(params.odds_ratio) << '\n';
  return 0;
}

// ---- impute ----

struct ImputeArgs {
  std::string method;
  fs::path in;
  fs::path out;
  fs::path flags_out;
  std::uint64_t seed = 0;
};

std::string flags_csv(const SurveyDataset& completed, const ImputationOutcome& outcome) {
  std::vector<double> class_residual(outcome.class_fallback.size(), 0.0);
  for (const auto& r : outcome.residuals) {
    auto& slot = class_residual[static_cast<std::size_t>(r.cls - 1)];
    slot = std::max(slot, r.max_residual);
  }
  std::ostringstream out;
  out << "id,class,x_imputed,y_imputed,z_imputed,fallback,class_max_residual\n";
  for (const auto& u : completed.units()) {
    if (!u.imputed.x && !u.imputed.y && !u.imputed.z) continue;
    const auto g = static_cast<std::size_t>(u.cls - 1);
    out << u.id << ',' << u.cls << ',' << flag(u.imputed.x) << ',' << flag(u.imputed.y) << ','
        << flag(u.imputed.z) << ',' << to_string(outcome.class_fallback[g]) << ','
        << format_double(class_residual[g]) << '\n';
  }
  return out.str();
}

int run_impute(const ImputeArgs& a) {
  const Method method = parse_method(a.method);
  std::cerr << "seed: " << a.seed << '\n';
  const auto data = load_dataset(a.in);
  if (a.out.empty()) throw DataError("--out is required");
  const auto outcome = impute(method, data, RngStream(a.seed, 0));
  save_dataset(a.out, outcome.completed);
  if (!a.flags_out.empty()) write_text(a.flags_out, flags_csv(outcome.completed, outcome));
  std::cerr << "imputed " << outcome.records.size() << " units";
  if (method == Method::bhdi) std::cerr << ", max balancing residual " << format_double(outcome.max_residual());
  std::cerr << '\n';
  return 0;
}

// ---- estimate ----

struct EstimateArgs {
  fs::path in;
  fs::path out;
};

void table_rows(std::ostringstream& out, const std::string& name, const ProportionTable& t) {
  for (int k = 0; k < t.K(); ++k) {
    out << name << ",x=" << k << ',' << format_double(t.marginal_x(k)) << '\n';
  }
  for (int l = 0; l < t.L(); ++l) {
    out << name << ",y=" << l << ',' << format_double(t.marginal_y(l)) << '\n';
  }
  for (int k = 0; k < t.K(); ++k) {
    for (int l = 0; l < t.L(); ++l) {
      out << name << ",x=" << k << ";y=" << l << ',' << format_double(t.joint(k, l)) << '\n';
    }
  }
  if (t.K() == 2 && t.L() == 2) {
    const double den = t.joint(1, 0) * t.joint(0, 1);
    out << name << ",OR," << (den != 0.0 ? format_double(t.joint(1, 1) * t.joint(0, 0) / den) : "NaN") << '\n';
  }
}

int run_estimate(const EstimateArgs& a) {
  const auto data = load_dataset(a.in);
  const auto N = data.population_size();
  std::ostringstream out;
  out << "estimator,quantity,value\n";
  if (data.fully_observed()) {
    table_rows(out, "HT", ht_proportions(data, N));
  } else {
    table_rows(out, "CC", cc_estimators(data));
    table_rows(out, "ACC", acc_estimators(data, N));
    table_rows(out, "AC", ac_estimators(data));
    table_rows(out, "AAC", aac_estimators(data, N));
    table_rows(out, "TILDE", tilde_estimators(data, N));
  }
  if (a.out.empty()) {
    std::cout << out.str();
  } else {
    write_text(a.out, out.str());
  }
  return 0;
}

// ---- bootstrap-var ----

struct BootstrapArgs {
  fs::path in;
  fs::path out;
  int replicates = 1000;
  double alpha = 0.025;
  std::uint64_t seed = 0;
  std::int64_t n_prime = 0;
};

nlohmann::ordered_json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

int run_bootstrap(const BootstrapArgs& a) {
  std::cerr << "seed: " << a.seed << '\n';
  const auto data = load_dataset(a.in);
  BootstrapConfig cfg;
  cfg.replicates = a.replicates;
  cfg.alpha = a.alpha;
  cfg.seed = a.seed;
  if (a.n_prime > 0) cfg.n_prime = a.n_prime;
  const auto res = bootstrap_variance(data, cfg, RngStream(a.seed, 0));

  nlohmann::ordered_json j;
  j["replicates"] = cfg.replicates;
  j["alpha"] = cfg.alpha;
  j["seed"] = cfg.seed;
  j["n_prime"] = cfg.n_prime.value_or(static_cast<std::int64_t>(data.size()));
  j["dropped_replicates"] = res.dropped;
  j["or_excluded_replicates"] = res.or_excluded;
  j["unreliable"] = res.unreliable;
  j["parameters"] = nlohmann::ordered_json::array();
  for (const auto& p : res.parameters) {
    j["parameters"].push_back({{"parameter", to_string(p.parameter)},
                               {"estimate", jnum(p.estimate)},
                               {"variance", jnum(p.variance)},
                               {"ci_lower", jnum(p.interval.lower)},
                               {"ci_upper", jnum(p.interval.upper)},
                               {"replicates_used", p.replicates_used}});
  }
  if (res.unreliable) std::cerr << "warning: more than 1% of bootstrap replicates dropped\n";
  write_text(a.out, j.dump(2) + "\n");
  return 0;
}

// ---- studies ----

struct StudyArgs {
  fs::path config;
  fs::path out;
  int threads = 0;
  bool threads_set = false;
  // Developer hook: write the masked sample of one replicate and stop.
  fs::path mask_out;
  std::uint64_t mask_replicate = 0;
};

StudyConfig study_config(const StudyArgs& a) {
  auto cfg = load_study_config(a.config);
  if (a.threads_set) cfg.threads = a.threads;
  cfg.validate();
  std::cerr << "seed: " << cfg.seed << ", threads: " << cfg.resolved_threads() << '\n';
  return cfg;
}

int write_mask(const StudyConfig& cfg, const StudyArgs& a) {
  const auto population = generate_population(cfg.spec);
  RngStream rng = study_stream(cfg.seed, 0, a.mask_replicate);
  const auto sample = draw_masked_sample(population, cfg.spec, cfg.n, rng);
  save_dataset(a.mask_out, sample.observed);
  save_dataset(a.mask_out.string() + ".truth.csv", sample.unmask());
  std::cerr << "masked replicate " << a.mask_replicate << " written\n";
  return 0;
}

int run_points(const StudyArgs& a) {
  const auto cfg = study_config(a);
  if (!a.mask_out.empty()) return write_mask(cfg, a);
  const auto report = run_point_study(cfg);
  write_text(a.out, wants_json(a.out) ? point_report_json(report, cfg) : point_report_csv(report));
  if (report.failed_replicates > 0) std::cerr << "failed replicates: " << report.failed_replicates << '\n';
  return 0;
}

int run_variance(const StudyArgs& a) {
  const auto cfg = study_config(a);
  if (!a.mask_out.empty()) return write_mask(cfg, a);
  const auto report = run_variance_study(cfg);
  write_text(a.out, wants_json(a.out) ? variance_report_json(report, cfg) : variance_report_csv(report));
  if (report.failed_replicates > 0) std::cerr << "failed replicates: " << report.failed_replicates << '\n';
  return 0;
}

void add_study_options(CLI::App* cmd, StudyArgs& a) {
  cmd->add_option("--config", a.config, "study config (JSON)")->required();
  cmd->add_option("--out", a.out, "report path (.csv or .json)");
  cmd->add_option("--threads", a.threads, "worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber)
      ->each([&a](const std::string&) { a.threads_set = true; });
  cmd->add_option("--mask", a.mask_out, "write one masked point-study replicate (plus .truth.csv) and exit");
  cmd->add_option("--mask-replicate", a.mask_replicate, "replicate index used by --mask");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint hot-deck imputation for categorical survey data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PopgenArgs popgen;
  auto* c_popgen = app.add_subcommand("popgen", "generate a finite population from a spec");
  c_popgen->add_option("--spec", popgen.spec, "population spec JSON, or 'table1'");
  c_popgen->add_option("--out", popgen.out, "population CSV")->required();
  c_popgen->add_option("--spec-out", popgen.spec_out, "also write the resolved spec");

  ImputeArgs imp;
  auto* c_impute = app.add_subcommand("impute", "impute missing x/y (and z) values");
  c_impute->add_option("--method", imp.method, "rhdi | jhdi | bhdi | jhdi3")->required();
  c_impute->add_option("--in", imp.in, "masked CSV")->required();
  c_impute->add_option("--out", imp.out, "completed CSV");
  c_impute->add_option("--flags-out", imp.flags_out, "per-unit imputation flags CSV");
  c_impute->add_option("--seed", imp.seed, "random seed (default 0)");

  EstimateArgs est;
  auto* c_estimate = app.add_subcommand("estimate", "point estimates of a masked or complete dataset");
  c_estimate->add_option("--in", est.in, "dataset CSV")->required();
  c_estimate->add_option("--out", est.out, "output CSV (default: stdout)");

  BootstrapArgs boot;
  auto* c_boot = app.add_subcommand("bootstrap-var", "bootstrap variance of the balanced imputed estimators");
  c_boot->add_option("--in", boot.in, "masked CSV")->required();
  c_boot->add_option("--out", boot.out, "output JSON")->required();
  c_boot->add_option("--replicates", boot.replicates, "bootstrap replicates C");
  c_boot->add_option("--alpha", boot.alpha, "per-tail level of the percentile interval");
  c_boot->add_option("--seed", boot.seed, "random seed")->required();
  c_boot->add_option("--n-prime", boot.n_prime, "bootstrap sample size (default n)");

  StudyArgs points;
  auto* c_points = app.add_subcommand("simulate-points", "Monte Carlo study of the point estimators");
  add_study_options(c_points, points);
  StudyArgs variance;
  auto* c_variance = app.add_subcommand("simulate-variance", "Monte Carlo study of the bootstrap variance");
  add_study_options(c_variance, variance);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c_popgen) return run_popgen(popgen);
    if (*c_impute) return run_impute(imp);
    if (*c_estimate) return run_estimate(est);
    if (*c_boot) return run_bootstrap(boot);
    for (auto* cmd : {c_points, c_variance}) {
      auto& a = cmd == c_points ? points : variance;
      if (!*cmd) continue;
      if (a.out.empty() && a.mask_out.empty()) throw DataError("--out is required");
      return cmd == c_points ? run_points(a) : run_variance(a);
    }
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
