#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hotdeck/survey.hpp"

namespace hotdeck {

/// Response-pattern probabilities (phi_rr, phi_rm, phi_mr, phi_mm) of a class.
struct ResponseMechanism {
  double rr = 1.0;
  double rm = 0.0;
  double mr = 0.0;
  double mm = 0.0;

  double x_respond() const noexcept { return rr + rm; }  // phi_{r.}
  double y_respond() const noexcept { return rr + mr; }  // phi_{.r}
  std::array<double, 4> as_array() const noexcept { return {rr, rm, mr, mm}; }
};

/// One row of the population table: binary x, y within a class.
struct ClassSpec {
  std::int64_t size = 0;  // N_g
  double p1dot = 0.5;
  double pdot1 = 0.5;
  double p11 = 0.25;
  ResponseMechanism phi;
};

struct PopulationSpec {
  std::vector<ClassSpec> classes;

  std::int64_t total_size() const noexcept;
  /// Throws DataError on a violated invariant (phi sum, Frechet bounds, sizes).
  void validate() const;
};

/// The five-class population of the simulation study (N = 20,000).
PopulationSpec table1_spec();

/// JSON text: {"classes": [{"N", "p1dot", "pdot1", "p11", "phi": {"rr", "rm", "mr", "mm"}}]}.
PopulationSpec parse_population_spec(const std::string& text);
std::string dump_population_spec(const PopulationSpec& spec);
PopulationSpec load_population_spec(const std::filesystem::path& path);
void save_population_spec(const std::filesystem::path& path, const PopulationSpec& spec);

/// 2 x 2 cell probabilities of binary (x, y).
struct CellProbabilities {
  double p00 = 0.0;
  double p01 = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;

  double at(int k, int l) const noexcept { return k == 0 ? (l == 0 ? p00 : p01) : (l == 0 ? p10 : p11); }
};

CellProbabilities cell_probabilities(double p1dot, double pdot1, double p11);

/// (p11 p00) / (p10 p01); throws DataError("odds ratio undefined") on a zero
/// denominator.
double odds_ratio(const CellProbabilities& cells);

/// Exact population parameters implied by a spec.
struct PopulationParameters {
  double p1dot = 0.0;
  double pdot1 = 0.0;
  double p11 = 0.0;
  double odds_ratio = 0.0;
  CellProbabilities cells;
};
PopulationParameters population_parameters(const PopulationSpec& spec);

/// Fully observed population with weight 1 per unit. Cell counts per class are
/// N_g times the cell probabilities, rounded by largest remainder.
SurveyDataset generate_population(const PopulationSpec& spec);

/// Largest-remainder apportionment of `total` over `probs` (summing to 1).
std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& probs);

}  // namespace hotdeck
