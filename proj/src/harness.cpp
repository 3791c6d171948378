#include "hotdeck/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hotdeck/errors.hpp"
#include "hotdeck/estimators.hpp"
#include "hotdeck/imputation.hpp"

namespace hotdeck {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kPointPhase = 0;
constexpr std::uint64_t kTruthPhase = 1;
constexpr std::uint64_t kVariancePhase = 2;
}  // namespace

const char* to_string(Estimator e) noexcept {
  switch (e) {
    case Estimator::cc:
      return "CC";
    case Estimator::acc:
      return "ACC";
    case Estimator::ac:
      return "AC";
    case Estimator::aac:
      return "AAC";
    case Estimator::rhdi:
      return "RHDI";
    case Estimator::jhdi:
      return "JHDI";
    case Estimator::bhdi:
      return "BHDI";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto e : kAllEstimators) {
    std::string n(to_string(e));
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == lower) return e;
  }
  throw DataError("unknown estimator '" + name + "'");
}

void StudyConfig::validate() const {
  spec.validate();
  if (replicates < 2) throw DataError("a study needs at least 2 replicates");
  if (n < 2 || n > spec.total_size()) throw DataError("sample size must lie in [2, N]");
  if (estimators.empty()) throw DataError("no estimators requested");
  if (threads < 0) throw DataError("thread count must be non-negative");
  if (truth_replicates < 2) throw DataError("truth run needs at least 2 replicates");
  bootstrap.validate();
  for (double a : alphas) {
    if (!(a > 0.0 && a < 0.5)) throw DataError("alpha must lie in (0, 0.5)");
  }
}

int StudyConfig::resolved_threads() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir) {
  StudyConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.contains("spec")) {
      const auto& s = j.at("spec");
      if (s.is_string()) {
        const auto name = s.get<std::string>();
        cfg.spec = name == "table1" ? table1_spec() : load_population_spec(base_dir / name);
      } else {
        cfg.spec = parse_population_spec(s.dump());
      }
    }
    if (j.contains("n")) cfg.n = j.at("n").get<std::int64_t>();
    if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<int>();
    if (j.contains("estimators")) {
      cfg.estimators.clear();
      for (const auto& e : j.at("estimators")) cfg.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("truth_replicates")) cfg.truth_replicates = j.at("truth_replicates").get<int>();
    if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("bootstrap")) {
      const auto& b = j.at("bootstrap");
      if (b.contains("replicates")) cfg.bootstrap.replicates = b.at("replicates").get<int>();
      if (b.contains("alpha")) cfg.bootstrap.alpha = b.at("alpha").get<double>();
      if (b.contains("n_prime") && !b.at("n_prime").is_null()) cfg.bootstrap.n_prime = b.at("n_prime").get<std::int64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed study config: ") + e.what());
  }
  // The AAC family is the efficiency baseline, so it is always computed.
  if (std::find(cfg.estimators.begin(), cfg.estimators.end(), Estimator::aac) == cfg.estimators.end()) {
    cfg.estimators.push_back(Estimator::aac);
  }
  cfg.validate();
  return cfg;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("input not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_study_config(buf.str(), path.parent_path());
}

double relative_bias(std::span<const double> estimates, double truth) {
  if (truth == 0.0) throw DataError("relative bias undefined for a zero parameter");
  if (estimates.empty()) throw DataError("relative bias needs at least one estimate");
  double mean = 0.0;
  for (double v : estimates) mean += v;
  mean /= static_cast<double>(estimates.size());
  return 100.0 * (mean - truth) / truth;
}

double relative_efficiency(double mse_baseline, double mse) {
  if (!(mse > 0.0)) throw DataError("relative efficiency undefined for a zero mean squared error");
  return 100.0 * mse_baseline / mse;
}

RngStream study_stream(std::uint64_t seed, std::uint64_t phase, std::uint64_t replicate) {
  return RngStream(seed, phase).derive(replicate);
}

MaskedSample draw_masked_sample(const SurveyDataset& population, const PopulationSpec& spec, std::int64_t n,
                                RngStream& rng) {
  RngStream sampling = rng.derive(0);
  RngStream response = rng.derive(1);
  return generate_response(srswor(population, n, sampling), spec, response);
}

namespace {

std::array<double, kNumParameters> table_statistics(const ProportionTable& t) {
  std::array<double, kNumParameters> s{t.marginal_x(1), t.marginal_y(1), t.joint(1, 1), kNaN};
  const double den = t.joint(1, 0) * t.joint(0, 1);
  if (den != 0.0 && std::isfinite(den)) s[3] = t.joint(1, 1) * t.joint(0, 0) / den;
  return s;
}

}  // namespace

std::array<double, kNumParameters> point_estimates(Estimator e, const SurveyDataset& masked, const RngStream& rng) {
  const auto N = masked.population_size();
  switch (e) {
    case Estimator::cc:
      return table_statistics(cc_estimators(masked));
    case Estimator::acc:
      return table_statistics(acc_estimators(masked, N));
    case Estimator::ac:
      return table_statistics(ac_estimators(masked));
    case Estimator::aac:
      return table_statistics(aac_estimators(masked, N));
    case Estimator::rhdi:
      return table_statistics(imputed_proportions(rhdi(masked, rng.derive(10)).completed, N));
    case Estimator::jhdi:
      return table_statistics(imputed_proportions(jhdi(masked, rng.derive(11)).completed, N));
    case Estimator::bhdi:
      return table_statistics(imputed_proportions(bhdi(masked, rng.derive(12)).completed, N));
  }
  throw DataError("unknown estimator");
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(workers, count); ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

const EstimateSummary& PointStudyReport::at(Estimator e, Parameter p) const {
  for (const auto& r : rows) {
    if (r.estimator == e && r.parameter == p) return r;
  }
  throw std::out_of_range(std::string("no summary for ") + to_string(e) + " " + to_string(p));
}

namespace {

std::array<double, kNumParameters> truth_of(const PopulationParameters& t) {
  return {t.p1dot, t.pdot1, t.p11, t.odds_ratio};
}

// Mean and MSE over the finite entries of one column, in index order.
struct Moments {
  double mean = kNaN;
  double mse = kNaN;
  std::size_t count = 0;
};

Moments moments(const std::vector<double>& values, double truth) {
  Moments m;
  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    sq += (v - truth) * (v - truth);
    ++m.count;
  }
  if (m.count > 0) {
    m.mean = sum / static_cast<double>(m.count);
    m.mse = sq / static_cast<double>(m.count);
  }
  return m;
}

}  // namespace

PointStudyReport run_point_study(const StudyConfig& config) {
  config.validate();
  const auto population = generate_population(config.spec);
  PointStudyReport report;
  report.truth = population_parameters(config.spec);
  report.replicates = config.replicates;

  const std::size_t E = config.estimators.size();
  const auto B = static_cast<std::size_t>(config.replicates);
  // values[(r * E + e) * P + p]
  std::vector<double> values(B * E * kNumParameters, kNaN);
  std::vector<std::uint8_t> failed(B, 0);

  parallel_for(B, config.resolved_threads(), [&](std::size_t r) {
    RngStream rng = study_stream(config.seed, kPointPhase, r);
    try {
      const auto sample = draw_masked_sample(population, config.spec, config.n, rng);
      const RngStream imputation = rng.derive(2);
      for (std::size_t e = 0; e < E; ++e) {
        const auto s = point_estimates(config.estimators[e], sample.observed, imputation);
        std::copy(s.begin(), s.end(), values.begin() + static_cast<std::ptrdiff_t>((r * E + e) * kNumParameters));
      }
    } catch (const DataError&) {
      failed[r] = 1;
      std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(r * E * kNumParameters), E * kNumParameters, kNaN);
    }
  });
  report.failed_replicates = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));

  const auto truth = truth_of(report.truth);
  std::vector<double> column(B);
  std::vector<std::array<Moments, kNumParameters>> m(E);
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t p = 0; p < kNumParameters; ++p) {
      for (std::size_t r = 0; r < B; ++r) column[r] = values[(r * E + e) * kNumParameters + p];
      m[e][p] = moments(column, truth[p]);
    }
  }
  const auto aac = static_cast<std::size_t>(
      std::find(config.estimators.begin(), config.estimators.end(), Estimator::aac) - config.estimators.begin());
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t p = 0; p < kNumParameters; ++p) {
      EstimateSummary s;
      s.estimator = config.estimators[e];
      s.parameter = static_cast<Parameter>(p);
      s.truth = truth[p];
      s.mean = m[e][p].mean;
      s.mse = m[e][p].mse;
      s.count = m[e][p].count;
      s.excluded = B - report.failed_replicates - s.count;
      s.rb = s.count > 0 ? 100.0 * (s.mean - s.truth) / s.truth : kNaN;
      if (aac < E && s.count > 0 && m[aac][p].count > 0 && s.mse > 0.0) {
        s.re = relative_efficiency(m[aac][p].mse, s.mse);
      } else {
        s.re = kNaN;
      }
      report.rows.push_back(s);
    }
  }
  return report;
}

VarianceStudyReport run_variance_study(const StudyConfig& config) {
  config.validate();
  const auto population = generate_population(config.spec);
  const auto truth = truth_of(population_parameters(config.spec));
  const int threads = config.resolved_threads();
  VarianceStudyReport report;
  report.truth_replicates = config.truth_replicates;
  report.replicates = config.replicates;

  // Independent run approximating the variance of the imputed estimators.
  const auto T = static_cast<std::size_t>(config.truth_replicates);
  std::vector<std::array<double, kNumParameters>> truth_run(T);
  parallel_for(T, threads, [&](std::size_t r) {
    RngStream rng = study_stream(config.seed, kTruthPhase, r);
    try {
      const auto sample = draw_masked_sample(population, config.spec, config.n, rng);
      truth_run[r] = point_estimates(Estimator::bhdi, sample.observed, rng.derive(2));
    } catch (const DataError&) {
      truth_run[r].fill(kNaN);
    }
  });

  const auto B = static_cast<std::size_t>(config.replicates);
  const std::size_t A = config.alphas.size();
  struct Sample {
    bool ok = false;
    std::array<double, kNumParameters> variance{};
    std::vector<Interval> intervals;  // [alpha * P + p]
    std::size_t dropped = 0;
    bool unreliable = false;
  };
  std::vector<Sample> samples(B);
  parallel_for(B, threads, [&](std::size_t r) {
    RngStream rng = study_stream(config.seed, kVariancePhase, r);
    auto& out = samples[r];
    try {
      const auto sample = draw_masked_sample(population, config.spec, config.n, rng);
      (void)point_estimates(Estimator::bhdi, sample.observed, rng.derive(2));
      const auto boot = bootstrap_variance(sample.observed, config.bootstrap, rng.derive(3));
      for (std::size_t p = 0; p < kNumParameters; ++p) out.variance[p] = boot.parameters[p].variance;
      out.intervals.resize(A * kNumParameters);
      for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t p = 0; p < kNumParameters; ++p) {
          out.intervals[a * kNumParameters + p] = boot.parameters[p].replicates_used >= 2
                                                      ? boot.interval(static_cast<Parameter>(p), config.alphas[a])
                                                      : Interval{kNaN, kNaN};
        }
      }
      out.dropped = boot.dropped;
      out.unreliable = boot.unreliable;
      out.ok = true;
    } catch (const DataError&) {
      out.ok = false;
    }
  });

  for (const auto& s : samples) {
    if (!s.ok) {
      ++report.failed_replicates;
      continue;
    }
    report.dropped_bootstrap += s.dropped;
    if (s.unreliable) ++report.unreliable_samples;
  }

  for (std::size_t p = 0; p < kNumParameters; ++p) {
    auto& row = report.rows[p];
    row.parameter = static_cast<Parameter>(p);
    row.truth = truth[p];
    std::vector<double> finite;
    for (const auto& t : truth_run) {
      if (std::isfinite(t[p])) finite.push_back(t[p]);
    }
    row.true_variance = finite.size() >= 2 ? sample_variance(finite) : kNaN;

    double sum = 0.0;
    std::size_t count = 0;
    std::vector<std::size_t> lower(A, 0), upper(A, 0);
    for (const auto& s : samples) {
      if (!s.ok || !std::isfinite(s.variance[p])) continue;
      sum += s.variance[p];
      ++count;
      for (std::size_t a = 0; a < A; ++a) {
        const auto& ci = s.intervals[a * kNumParameters + p];
        if (truth[p] < ci.lower) ++lower[a];
        if (truth[p] > ci.upper) ++upper[a];
      }
    }
    row.count = count;
    row.mean_estimate = count > 0 ? sum / static_cast<double>(count) : kNaN;
    row.rb = (count > 0 && row.true_variance > 0.0) ? 100.0 * (row.mean_estimate - row.true_variance) / row.true_variance
                                                    : kNaN;
    for (std::size_t a = 0; a < A; ++a) {
      ErrorRates er;
      er.alpha = config.alphas[a];
      if (count > 0) {
        er.lower = 100.0 * static_cast<double>(lower[a]) / static_cast<double>(count);
        er.upper = 100.0 * static_cast<double>(upper[a]) / static_cast<double>(count);
      } else {
        er.lower = er.upper = kNaN;
      }
      row.rates.push_back(er);
    }
  }
  return report;
}

// ---- serialization ----

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "NaN";
  return format_double(v);
}

nlohmann::ordered_json json_num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::ordered_json config_json(const StudyConfig& config) {
  nlohmann::ordered_json j;
  j["spec"] = nlohmann::ordered_json::parse(dump_population_spec(config.spec));
  j["n"] = config.n;
  j["replicates"] = config.replicates;
  j["estimators"] = nlohmann::ordered_json::array();
  for (auto e : config.estimators) j["estimators"].push_back(to_string(e));
  j["seed"] = config.seed;
  return j;
}

}  // namespace

std::string point_report_csv(const PointStudyReport& report) {
  std::ostringstream out;
  out << "estimator,parameter,truth,mean,rb_percent,re_percent,mse,count,excluded\n";
  for (const auto& r : report.rows) {
    out << to_string(r.estimator) << ',' << to_string(r.parameter) << ',' << num(r.truth) << ',' << num(r.mean)
        << ',' << num(r.rb) << ',' << num(r.re) << ',' << num(r.mse) << ',' << r.count << ',' << r.excluded << '\n';
  }
  return out.str();
}

std::string point_report_json(const PointStudyReport& report, const StudyConfig& config) {
  nlohmann::ordered_json j;
  j["config"] = config_json(config);
  j["failed_replicates"] = report.failed_replicates;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"estimator", to_string(r.estimator)},
                         {"parameter", to_string(r.parameter)},
                         {"truth", json_num(r.truth)},
                         {"mean", json_num(r.mean)},
                         {"rb_percent", json_num(r.rb)},
                         {"re_percent", json_num(r.re)},
                         {"mse", json_num(r.mse)},
                         {"count", r.count},
                         {"excluded", r.excluded}});
  }
  return j.dump(2) + "\n";
}

std::string variance_report_csv(const VarianceStudyReport& report) {
  std::ostringstream out;
  out << "parameter,truth,true_variance,mean_variance_estimate,rb_percent";
  const auto& first = report.rows.front().rates;
  for (const auto& er : first) {
    const auto a = format_double(er.alpha);
    out << ",L@" << a << ",U@" << a << ",LU@" << a;
  }
  out << ",count\n";
  for (const auto& r : report.rows) {
    out << to_string(r.parameter) << ',' << num(r.truth) << ',' << num(r.true_variance) << ','
        << num(r.mean_estimate) << ',' << num(r.rb);
    for (const auto& er : r.rates) out << ',' << num(er.lower) << ',' << num(er.upper) << ',' << num(er.both());
    out << ',' << r.count << '\n';
  }
  return out.str();
}

std::string variance_report_json(const VarianceStudyReport& report, const StudyConfig& config) {
  nlohmann::ordered_json j;
  j["config"] = config_json(config);
  j["config"]["truth_replicates"] = config.truth_replicates;
  j["config"]["alphas"] = config.alphas;
  j["config"]["bootstrap"] = {{"replicates", config.bootstrap.replicates},
                              {"n_prime", config.bootstrap.n_prime ? nlohmann::ordered_json(*config.bootstrap.n_prime)
                                                                   : nlohmann::ordered_json(nullptr)}};
  j["failed_replicates"] = report.failed_replicates;
  j["dropped_bootstrap_replicates"] = report.dropped_bootstrap;
  j["unreliable_samples"] = report.unreliable_samples;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row{{"parameter", to_string(r.parameter)},
                               {"truth", json_num(r.truth)},
                               {"true_variance", json_num(r.true_variance)},
                               {"mean_variance_estimate", json_num(r.mean_estimate)},
                               {"rb_percent", json_num(r.rb)},
                               {"count", r.count}};
    row["error_rates"] = nlohmann::ordered_json::array();
    for (const auto& er : r.rates) {
      row["error_rates"].push_back({{"alpha", er.alpha},
                                    {"lower", json_num(er.lower)},
                                    {"upper", json_num(er.upper)},
                                    {"both", json_num(er.both())}});
    }
    j["rows"].push_back(row);
  }
  return j.dump(2) + "\n";
}

}  // namespace hotdeck
