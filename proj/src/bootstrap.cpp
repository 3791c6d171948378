#include "hotdeck/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hotdeck/errors.hpp"
#include "hotdeck/estimators.hpp"

namespace hotdeck {

void BootstrapConfig::validate() const {
  if (replicates < 2) throw DataError("bootstrap needs at least 2 replicates");
  if (!(alpha > 0.0 && alpha < 0.5)) throw DataError("alpha must lie in (0, 0.5)");
  if (n_prime && *n_prime < 1) throw DataError("bootstrap sample size must be positive");
}

const char* to_string(Parameter p) noexcept {
  switch (p) {
    case Parameter::p1_dot:
      return "p1.";
    case Parameter::pdot_1:
      return "p.1";
    case Parameter::p11:
      return "p11";
    case Parameter::odds_ratio:
      return "OR";
  }
  return "?";
}

double rescale_constant(std::int64_t n, std::int64_t n_prime, std::int64_t N) {
  if (n < 2) throw DataError("bootstrap needs a sample of at least 2 units");
  if (N < n) throw DataError("population size smaller than the sample");
  const double f = static_cast<double>(n) / static_cast<double>(N);
  return static_cast<double>(n_prime) * (1.0 - f) / static_cast<double>(n - 1);
}

std::vector<double> rwy_weights(std::span<const double> weights, std::span<const int> multiplicities,
                                std::int64_t n_prime, std::int64_t N) {
  if (weights.size() != multiplicities.size()) throw std::invalid_argument("rwy_weights: size mismatch");
  const auto n = static_cast<std::int64_t>(weights.size());
  const double root = std::sqrt(rescale_constant(n, n_prime, N));
  const double scale = static_cast<double>(n) / static_cast<double>(n_prime);
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = weights[i] * (1.0 + root * (scale * multiplicities[i] - 1.0));
  }
  return out;
}

std::vector<int> resample_multiplicities(std::size_t n, std::int64_t n_prime, RngStream& rng) {
  std::vector<int> m(n, 0);
  for (std::int64_t d = 0; d < n_prime; ++d) ++m[rng.below(n)];
  return m;
}

namespace {

void require_equal_weights(const SurveyDataset& data) {
  if (data.size() < 2) throw DataError("bootstrap needs a sample of at least 2 units");
  const double w0 = data[0].weight;
  for (const auto& u : data.units()) {
    if (std::abs(u.weight - w0) > 1e-9 * w0) {
      throw DataError("bootstrap weights assume an equal-weight simple random sample");
    }
  }
}

// Fills stats from a tilde table; returns whether the odds ratio exists.
bool statistics(const ProportionTable& t, std::array<double, kNumParameters>& stats) {
  stats[0] = t.marginal_x(1);
  stats[1] = t.marginal_y(1);
  stats[2] = t.joint(1, 1);
  const double den = t.joint(1, 0) * t.joint(0, 1);
  if (den == 0.0 || !std::isfinite(den)) {
    stats[3] = std::numeric_limits<double>::quiet_NaN();
    return false;
  }
  stats[3] = t.joint(1, 1) * t.joint(0, 0) / den;
  return true;
}

}  // namespace

BootstrapReplicate bootstrap_replicate(const SurveyDataset& data, const BootstrapConfig& config, RngStream& rng) {
  const auto n = static_cast<std::int64_t>(data.size());
  const std::int64_t n_prime = config.n_prime.value_or(n);
  BootstrapReplicate rep;
  rep.multiplicities = resample_multiplicities(data.size(), n_prime, rng);
  const auto w = data.weights();
  rep.weights = rwy_weights(w, rep.multiplicities, n_prime, data.population_size());
  const auto table = tilde_estimators(data, rep.weights, data.population_size());
  rep.or_defined = statistics(table, rep.stats);
  return rep;
}

std::pair<std::size_t, std::size_t> percentile_ranks(std::size_t B, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw DataError("alpha must lie in (0, 0.5)");
  const double b = static_cast<double>(B);
  if (b * alpha < 1.0 - 1e-12) throw DataError("too few replicates for the requested alpha");
  // Guard against alpha*B landing a hair above an integer.
  const auto lower = static_cast<std::size_t>(std::ceil(alpha * b - 1e-9));
  const auto upper = static_cast<std::size_t>(std::floor((1.0 - alpha) * b + 1e-9));
  return {std::max<std::size_t>(lower, 1), std::min(upper, B)};
}

Interval percentile_ci(std::vector<double> stats, double alpha) {
  const auto [lo, hi] = percentile_ranks(stats.size(), alpha);
  std::sort(stats.begin(), stats.end());
  return {stats[lo - 1], stats[hi - 1]};
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw DataError("variance needs at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

Interval BootstrapResult::interval(Parameter p, double alpha) const {
  std::vector<double> column;
  const auto j = static_cast<std::size_t>(p);
  for (std::size_t c = 0; c < replicate_stats.size(); ++c) {
    if (p == Parameter::odds_ratio && !replicate_or_defined[c]) continue;
    column.push_back(replicate_stats[c][j]);
  }
  return percentile_ci(std::move(column), alpha);
}

BootstrapResult bootstrap_variance(const SurveyDataset& data, const BootstrapConfig& config, const RngStream& rng) {
  config.validate();
  require_equal_weights(data);
  if (data.K() != 2 || data.L() != 2) throw DataError("bootstrap statistics need binary x and y");

  BootstrapResult out;
  std::array<double, kNumParameters> point{};
  const bool point_or = statistics(tilde_estimators(data, data.population_size()), point);

  for (int c = 0; c < config.replicates; ++c) {
    RngStream stream = rng.derive(static_cast<std::uint64_t>(c));
    try {
      auto rep = bootstrap_replicate(data, config, stream);
      out.replicate_stats.push_back(rep.stats);
      out.replicate_or_defined.push_back(rep.or_defined ? 1 : 0);
      if (!rep.or_defined) ++out.or_excluded;
    } catch (const NoDonorError&) {
      ++out.dropped;
    }
  }
  out.unreliable = static_cast<double>(out.dropped) > 0.01 * config.replicates;

  for (std::size_t j = 0; j < kNumParameters; ++j) {
    auto& pv = out.parameters[j];
    pv.parameter = static_cast<Parameter>(j);
    pv.estimate = (j == 3 && !point_or) ? std::numeric_limits<double>::quiet_NaN() : point[j];
    std::vector<double> column;
    for (std::size_t c = 0; c < out.replicate_stats.size(); ++c) {
      if (j == 3 && !out.replicate_or_defined[c]) continue;
      column.push_back(out.replicate_stats[c][j]);
    }
    pv.replicates_used = column.size();
    if (column.size() < 2) {
      pv.variance = std::numeric_limits<double>::quiet_NaN();
      pv.interval = {pv.variance, pv.variance};
      continue;
    }
    pv.variance = sample_variance(column);
    pv.interval = percentile_ci(std::move(column), config.alpha);
  }
  return out;
}

}  // namespace hotdeck
