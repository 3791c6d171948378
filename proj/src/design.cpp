#include "hotdeck/design.hpp"

#include <algorithm>
#include <numeric>

#include "hotdeck/errors.hpp"

namespace hotdeck {

SurveyDataset srswor(const SurveyDataset& population, std::int64_t n, RngStream& rng) {
  const auto size = static_cast<std::int64_t>(population.size());
  if (n < 1 || n > size) {
    throw DataError("sample size n=" + std::to_string(n) + " must lie in [1, " + std::to_string(size) + "]");
  }
  // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
  std::vector<std::size_t> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::int64_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());

  const double w = static_cast<double>(population.population_size()) / static_cast<double>(n);
  std::vector<Unit> units;
  units.reserve(idx.size());
  for (auto i : idx) {
    Unit u = population[i];
    u.weight = w;
    units.push_back(std::move(u));
  }
  return population.with_units(std::move(units));
}

MaskedSample generate_response(const SurveyDataset& sample, const PopulationSpec& spec, RngStream& rng) {
  std::vector<Unit> truth(sample.units().begin(), sample.units().end());
  std::vector<Unit> observed = truth;
  for (auto& u : observed) {
    if (u.cls < 1 || static_cast<std::size_t>(u.cls) > spec.classes.size()) {
      throw DataError("class " + std::to_string(u.cls) + " has no response mechanism");
    }
    const auto phi = spec.classes[static_cast<std::size_t>(u.cls - 1)].phi.as_array();
    switch (rng.categorical(phi)) {
      case 0:  // rr
        break;
      case 1:  // rm
        u.y.reset();
        break;
      case 2:  // mr
        u.x.reset();
        break;
      default:  // mm
        u.x.reset();
        u.y.reset();
        break;
    }
  }
  return MaskedSample{sample.with_units(std::move(observed)), std::move(truth)};
}

}  // namespace hotdeck
