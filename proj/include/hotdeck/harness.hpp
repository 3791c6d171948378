#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hotdeck/bootstrap.hpp"
#include "hotdeck/design.hpp"
#include "hotdeck/popgen.hpp"

namespace hotdeck {

/// Fixed registry of point estimators compared by the studies.
enum class Estimator { cc = 0, acc, ac, aac, rhdi, jhdi, bhdi };
inline constexpr std::size_t kNumEstimators = 7;
inline constexpr std::array<Estimator, kNumEstimators> kAllEstimators{
    Estimator::cc, Estimator::acc, Estimator::ac, Estimator::aac, Estimator::rhdi, Estimator::jhdi, Estimator::bhdi};

const char* to_string(Estimator e) noexcept;
Estimator parse_estimator(const std::string& name);

struct StudyConfig {
  PopulationSpec spec = table1_spec();
  std::int64_t n = 2000;
  int replicates = 2000;  // B
  std::vector<Estimator> estimators{kAllEstimators.begin(), kAllEstimators.end()};
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency

  // Variance study only.
  BootstrapConfig bootstrap;
  std::vector<double> alphas{0.025, 0.05};
  int truth_replicates = 20000;

  void validate() const;
  int resolved_threads() const;
};

/// JSON config. Every field is optional; "spec" is either "table1", a path to
/// a population spec file (relative to the config), or an inline spec.
StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir = {});
StudyConfig load_study_config(const std::filesystem::path& path);

/// 100 (mean - truth) / truth.
double relative_bias(std::span<const double> estimates, double truth);
/// 100 mse_baseline / mse.
double relative_efficiency(double mse_baseline, double mse);

/// One sample of the point study: the masked sample and its truth channel.
/// Replicate r of a study phase draws from study_stream(seed, phase, r).
RngStream study_stream(std::uint64_t seed, std::uint64_t phase, std::uint64_t replicate);
MaskedSample draw_masked_sample(const SurveyDataset& population, const PopulationSpec& spec, std::int64_t n,
                                RngStream& rng);

/// Point estimates (p1., p.1, p11, OR) of one estimator on one masked sample.
/// An undefined odds ratio is NaN.
std::array<double, kNumParameters> point_estimates(Estimator e, const SurveyDataset& masked, const RngStream& rng);

struct EstimateSummary {
  Estimator estimator = Estimator::cc;
  Parameter parameter = Parameter::p1_dot;
  double truth = 0.0;
  double mean = 0.0;
  double mse = 0.0;
  double rb = 0.0;  // percent
  double re = 0.0;  // percent, AAC baseline
  std::size_t count = 0;
  std::size_t excluded = 0;
};

struct PointStudyReport {
  PopulationParameters truth;
  std::vector<EstimateSummary> rows;  // estimator-major, parameter-minor
  std::size_t failed_replicates = 0;
  int replicates = 0;

  const EstimateSummary& at(Estimator e, Parameter p) const;
};

PointStudyReport run_point_study(const StudyConfig& config);

struct ErrorRates {
  double alpha = 0.0;
  double lower = 0.0;  // percent of intervals lying entirely above the parameter
  double upper = 0.0;  // percent lying entirely below
  double both() const noexcept { return lower + upper; }
};

struct VarianceSummary {
  Parameter parameter = Parameter::p1_dot;
  double truth = 0.0;           // population parameter
  double true_variance = 0.0;   // MC variance of the imputed estimator
  double mean_estimate = 0.0;   // MC mean of the variance estimator
  double rb = 0.0;              // percent relative bias of the variance estimator
  std::vector<ErrorRates> rates;  // one per configured alpha
  std::size_t count = 0;
};

struct VarianceStudyReport {
  std::array<VarianceSummary, kNumParameters> rows;
  int truth_replicates = 0;
  int replicates = 0;
  std::size_t failed_replicates = 0;
  std::size_t dropped_bootstrap = 0;    // over all samples
  std::size_t unreliable_samples = 0;   // samples flagged by the bootstrap

  const VarianceSummary& at(Parameter p) const { return rows[static_cast<std::size_t>(p)]; }
};

VarianceStudyReport run_variance_study(const StudyConfig& config);

std::string point_report_csv(const PointStudyReport& report);
std::string point_report_json(const PointStudyReport& report, const StudyConfig& config);
std::string variance_report_csv(const VarianceStudyReport& report);
std::string variance_report_json(const VarianceStudyReport& report, const StudyConfig& config);

/// Runs body(i) for i in [0, count) over `threads` workers. Each index is
/// processed exactly once; callers write to per-index slots.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace hotdeck
