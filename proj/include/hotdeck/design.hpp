#pragma once

#include <cstdint>
#include <vector>

#include "hotdeck/popgen.hpp"
#include "hotdeck/rng.hpp"
#include "hotdeck/survey.hpp"

namespace hotdeck {

/// Simple random sample without replacement of n units; every sampled unit
/// gets weight N/n. Units keep their population order.
SurveyDataset srswor(const SurveyDataset& population, std::int64_t n, RngStream& rng);

/// A sample after nonresponse, plus the values that were masked. The truth
/// channel exists for Monte Carlo scoring only; imputation never sees it.
struct MaskedSample {
  SurveyDataset observed;
  std::vector<Unit> truth;

  SurveyDataset unmask() const { return observed.with_units(truth); }
};

/// Draws one response pattern per unit from its class's phi vector and masks
/// the corresponding items.
MaskedSample generate_response(const SurveyDataset& sample, const PopulationSpec& spec, RngStream& rng);

}  // namespace hotdeck
