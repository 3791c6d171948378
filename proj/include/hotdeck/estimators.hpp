#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hotdeck/popgen.hpp"
#include "hotdeck/survey.hpp"

namespace hotdeck {

/// Rung of the fallback ladder an estimate came from.
///   none           - the class-level ratio itself
///   class_marginal - conditional undefined; class complete-case marginal used
///   pooled         - class had no information; complete/available cases of
///                    all classes pooled (conditional first, then marginal)
///   uniform        - nothing anywhere; 1/K (or 1/L, 1/KL)
enum class Fallback : std::uint8_t { none = 0, class_marginal = 1, pooled = 2, uniform = 3 };

const char* to_string(Fallback f) noexcept;

/// Weighted totals N-hat^g and per-pattern N-hat_o^g of one class.
struct ClassTotals {
  double all = 0.0;
  double rr = 0.0;
  double rm = 0.0;
  double mr = 0.0;
  double mm = 0.0;
  double x_respondents() const noexcept { return rr + rm; }  // N-hat_{r.}
  double y_respondents() const noexcept { return rr + mr; }  // N-hat_{.r}
};

/// Cell, marginal and conditional estimates for one imputation class.
/// Every probability vector below has already been passed through the
/// fallback ladder; the matching *_level fields record which rung was used.
struct ClassCellEstimates {
  int cls = 0;
  ClassTotals totals;

  // Sufficient statistics (weighted sums).
  std::vector<double> rr_joint;  // [k*L+l]  sum over s_rr of w 1(x=k) 1(y=l)
  std::vector<double> rm_x;      // [k]      sum over s_rm of w 1(x=k)
  std::vector<double> mr_y;      // [l]      sum over s_mr of w 1(y=l)

  std::vector<double> joint_cc;   // [k*L+l] p-hat_{kl,cc}
  std::vector<double> x_cc;       // [k]     p-hat_{k.,cc}
  std::vector<double> y_cc;       // [l]     p-hat_{.l,cc}
  std::vector<double> x_ac;       // [k]     p-hat_{k.,ac}
  std::vector<double> y_ac;       // [l]     p-hat_{.l,ac}
  std::vector<double> x_given_y;  // [l*K+k] p-hat_{k|l,cc}
  std::vector<double> y_given_x;  // [k*L+l] p-hat_{l|k,cc}

  Fallback joint_cc_level = Fallback::none;
  Fallback x_cc_level = Fallback::none;
  Fallback y_cc_level = Fallback::none;
  Fallback x_ac_level = Fallback::none;
  Fallback y_ac_level = Fallback::none;
  std::vector<Fallback> x_given_y_level;  // [l]
  std::vector<Fallback> y_given_x_level;  // [k]

  /// Worst rung used by any estimate of this class.
  Fallback worst_level() const noexcept;
};

struct CellEstimates {
  int K = 0;
  int L = 0;
  std::vector<ClassCellEstimates> classes;  // entry g-1 holds class g

  const ClassCellEstimates& of_class(int g) const { return classes.at(static_cast<std::size_t>(g - 1)); }
  double x_given_y(int g, int k, int l) const {
    return of_class(g).x_given_y[static_cast<std::size_t>(l * K + k)];
  }
  double y_given_x(int g, int k, int l) const {
    return of_class(g).y_given_x[static_cast<std::size_t>(k * L + l)];
  }
  bool any_fallback() const noexcept;
};

struct CellEstimateOptions {
  /// When false, a class holding nonrespondents whose estimates bottom out at
  /// the uniform rung raises NoDonorError.
  bool allow_uniform = false;
};

/// Cell estimates with the unit weights replaced by `weights` (bootstrap
/// replicates pass rescaled weights here).
CellEstimates cell_estimates(const SurveyDataset& data, std::span<const double> weights,
                             const CellEstimateOptions& options = {});
CellEstimates cell_estimates(const SurveyDataset& data, const CellEstimateOptions& options = {});

// ---- point estimators ----

/// Horvitz-Thompson proportions on a fully observed dataset.
ProportionTable ht_proportions(const SurveyDataset& data, std::int64_t N);
/// Imputed estimators: the same computation on a completed dataset.
ProportionTable imputed_proportions(const SurveyDataset& completed, std::int64_t N);

/// Complete-case (ratio over N-hat_rr).
ProportionTable cc_estimators(const SurveyDataset& data);
/// Adjusted complete-case: class cc estimates weighted by N-hat^g over N.
ProportionTable acc_estimators(const SurveyDataset& data, std::int64_t N);
/// Available-case marginals; the joint is the complete-case joint.
ProportionTable ac_estimators(const SurveyDataset& data);
/// Adjusted available-case marginals; the joint is the ACC joint.
ProportionTable aac_estimators(const SurveyDataset& data, std::int64_t N);

/// Expectation of the imputed estimators over the joint (or balanced)
/// imputation mechanism, in closed form. Marginals come from their own
/// formulas and agree with the joint's row/column sums to rounding.
ProportionTable tilde_estimators(const SurveyDataset& data, std::int64_t N);
ProportionTable tilde_estimators(const SurveyDataset& data, std::span<const double> weights, std::int64_t N,
                                 const CellEstimateOptions& options = {});
ProportionTable tilde_estimators(const CellEstimates& cells, std::int64_t N);

/// Plug-in odds ratio of a 2 x 2 table built from the joint cells.
double or_plugin(const ProportionTable& table);

// ---- closed-form bias approximations (binary x, y) ----

/// Each returns biases in a table: joint(k,l), marginal_x(k), marginal_y(l).
ProportionTable bias_cc(const PopulationSpec& spec);
ProportionTable bias_ac(const PopulationSpec& spec);
/// Random hot-deck: marginals unbiased, joint biased by the attenuation term.
ProportionTable bias_rhdi(const PopulationSpec& spec);

}  // namespace hotdeck
