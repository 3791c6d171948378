#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hotdeck/estimators.hpp"
#include "hotdeck/rng.hpp"
#include "hotdeck/survey.hpp"

namespace hotdeck {

enum class Method { rhdi, jhdi, bhdi, jhdi3 };

const char* to_string(Method m) noexcept;
Method parse_method(const std::string& name);

/// Which sub-sample a cell population serves: x missing (mr), y missing (rm)
/// or both missing (mm).
enum class CellKind { mr = 0, rm = 1, mm = 2 };

const char* to_string(CellKind kind) noexcept;

/// One candidate imputed value for one nonrespondent. Its balancing vector t
/// has a single nonzero coordinate, `t_index` = k*L + l (the 0-based form of
/// q = k_q L + (l_q + 1)), holding w_i times the selection probability.
struct CandidateCell {
  std::size_t row = 0;  // index into CellPopulation::rows
  int k = 0;            // x value of the cell (imputed or observed)
  int l = 0;            // y value of the cell (imputed or observed)
  double prob = 0.0;
  std::size_t t_index = 0;
  double t_value = 0.0;
};

/// Rows are nonrespondents of one (class, kind); columns are candidate
/// values. Cells are stored row by row.
struct CellPopulation {
  CellKind kind = CellKind::mr;
  int cls = 0;
  int K = 0;
  int L = 0;
  std::vector<std::size_t> rows;  // dataset unit indices
  std::vector<double> row_weights;
  std::vector<CandidateCell> cells;

  std::size_t cells_per_row() const noexcept;
  /// Dense t vector of length K*L for one cell.
  std::vector<double> balancing_vector(std::size_t cell) const;
  /// sum over all cells of t (the balancing targets).
  std::vector<double> balance_targets() const;
};

/// Cell populations for joint / balanced imputation, one per nonempty
/// (class, kind), ordered by class then mr, rm, mm.
std::vector<CellPopulation> build_cell_populations(const SurveyDataset& data, const CellEstimates& cells);
std::vector<CellPopulation> build_cell_populations(const SurveyDataset& data);

struct PopulationResidual {
  int cls = 0;
  CellKind kind = CellKind::mr;
  std::vector<double> residuals;  // per t coordinate, |achieved - target|
  double max_residual = 0.0;      // infinity norm of `residuals`
  std::vector<std::size_t> dropped_t_columns;  // 0-based t indices, in drop order
};

struct ImputedRecord {
  std::size_t unit = 0;
  Category x;  // set when x was imputed
  Category y;
  Category z;
};

struct ImputationOutcome {
  SurveyDataset completed;
  std::vector<ImputedRecord> records;
  std::vector<PopulationResidual> residuals;  // balanced imputation only
  std::vector<Fallback> class_fallback;       // worst rung per class (entry g-1)

  double max_residual() const noexcept;
};

/// Random hot-deck: marginal laws for single-item nonresponse, the
/// complete-case joint law when both are missing. Drawing a category with
/// probability p-hat is the same law as drawing a donor with probability
/// proportional to its weight, so donors are not tracked.
ImputationOutcome rhdi(const SurveyDataset& data, const RngStream& rng);
/// Joint hot-deck: conditional laws given the observed item.
ImputationOutcome jhdi(const SurveyDataset& data, const RngStream& rng);
/// Balanced joint hot-deck: the joint procedure's cells selected by the cube
/// method with one-cell-per-row and balancing constraints.
ImputationOutcome bhdi(const SurveyDataset& data, const RngStream& rng);
/// Joint hot-deck for three items, all laws estimated from s_rrr.
ImputationOutcome jhdi3(const SurveyDataset& data, const RngStream& rng);

ImputationOutcome impute(Method method, const SurveyDataset& data, const RngStream& rng);

}  // namespace hotdeck
