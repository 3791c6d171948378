#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hotdeck/rng.hpp"
#include "hotdeck/survey.hpp"

namespace hotdeck {

struct BootstrapConfig {
  std::optional<std::int64_t> n_prime;  // bootstrap sample size; defaults to n
  int replicates = 1000;                // C
  double alpha = 0.025;                 // per-tail level of the percentile interval
  std::uint64_t seed = 0;

  void validate() const;
};

/// Rescale constant C_r = n'(1 - n/N)/(n - 1).
double rescale_constant(std::int64_t n, std::int64_t n_prime, std::int64_t N);

/// w*_i = w_i {1 + sqrt(C_r)(n m*_i / n' - 1)}. Not clamped: weights may be
/// negative.
std::vector<double> rwy_weights(std::span<const double> weights, std::span<const int> multiplicities,
                                std::int64_t n_prime, std::int64_t N);

/// Multiplicities of n' draws with replacement from n units.
std::vector<int> resample_multiplicities(std::size_t n, std::int64_t n_prime, RngStream& rng);

/// Statistics tracked per replicate.
enum class Parameter { p1_dot = 0, pdot_1 = 1, p11 = 2, odds_ratio = 3 };
inline constexpr std::size_t kNumParameters = 4;
const char* to_string(Parameter p) noexcept;

struct BootstrapReplicate {
  std::vector<int> multiplicities;
  std::vector<double> weights;
  std::array<double, kNumParameters> stats{};
  bool or_defined = true;
};

/// One replicate on a masked sample: resample, rescale, recompute the tilde
/// estimators. Uses `rng` only for the resample. Throws NoDonorError if the
/// replicate's cell estimates bottom out.
BootstrapReplicate bootstrap_replicate(const SurveyDataset& data, const BootstrapConfig& config, RngStream& rng);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// 1-based ranks ceil(alpha B) and floor((1 - alpha) B).
std::pair<std::size_t, std::size_t> percentile_ranks(std::size_t B, double alpha);
Interval percentile_ci(std::vector<double> stats, double alpha);

struct ParameterVariance {
  Parameter parameter = Parameter::p1_dot;
  double estimate = 0.0;  // tilde estimator on the original weights
  double variance = 0.0;  // divisor C - 1 over the usable replicates
  Interval interval;      // percentile interval at config.alpha
  std::size_t replicates_used = 0;
};

struct BootstrapResult {
  std::array<ParameterVariance, kNumParameters> parameters;
  std::vector<std::array<double, kNumParameters>> replicate_stats;  // kept replicates, index order
  std::vector<std::uint8_t> replicate_or_defined;
  std::size_t dropped = 0;      // replicates whose estimates hit the uniform rung
  std::size_t or_excluded = 0;  // kept replicates whose odds ratio is undefined
  bool unreliable = false;      // more than 1% of replicates dropped

  const ParameterVariance& of(Parameter p) const { return parameters[static_cast<std::size_t>(p)]; }
  /// Percentile interval for another alpha from the stored replicates.
  Interval interval(Parameter p, double alpha) const;
};

/// Variance of the imputed estimators through the simplified bootstrap: the
/// balanced procedure is replaced by its expectation in every replicate.
/// Replicate c draws from rng.derive(c), so the result does not depend on
/// evaluation order.
BootstrapResult bootstrap_variance(const SurveyDataset& data, const BootstrapConfig& config, const RngStream& rng);

/// Sample variance with divisor m - 1.
double sample_variance(std::span<const double> values);

}  // namespace hotdeck
