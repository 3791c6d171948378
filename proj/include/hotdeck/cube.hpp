#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hotdeck/rng.hpp"

namespace hotdeck {

/// How a balancing column behaves during landing. Droppable columns are
/// suppressed lowest `priority` first; ties go to the later column.
struct ConstraintPolicy {
  bool never_drop = false;
  int priority = 0;
};

/// Inclusion probabilities plus linear balancing constraints. Column p asks
/// that sum_m selected(m) a_{m,p} equal sum_m pi_m a_{m,p}. Coefficients are
/// stored sparsely per unit since imputation problems touch few columns per
/// cell.
class BalancingProblem {
 public:
  struct Entry {
    std::size_t column;
    double value;
  };

  BalancingProblem(std::vector<double> pi, std::size_t num_columns, std::vector<ConstraintPolicy> policy = {});
  /// `matrix[m][p]` = a_{m,p}.
  static BalancingProblem dense(std::vector<double> pi, const std::vector<std::vector<double>>& matrix,
                                std::vector<ConstraintPolicy> policy = {});

  void add(std::size_t unit, std::size_t column, double value);

  std::size_t size() const noexcept { return pi_.size(); }
  std::size_t num_columns() const noexcept { return policy_.size(); }
  std::span<const double> pi() const noexcept { return pi_; }
  std::span<const Entry> entries(std::size_t unit) const { return entries_[unit]; }
  const ConstraintPolicy& policy(std::size_t column) const { return policy_[column]; }

  /// sum_m v_m a_{m,p} for every column p.
  std::vector<double> functionals(std::span<const double> v) const;
  std::vector<double> targets() const { return functionals(pi_); }

 private:
  std::vector<double> pi_;
  std::vector<std::vector<Entry>> entries_;
  std::vector<ConstraintPolicy> policy_;
};

struct SelectionState {
  std::vector<double> v;
  std::vector<bool> active;                  // per column
  std::vector<std::size_t> dropped_columns;  // in suppression order

  std::size_t non_integral_count() const noexcept;
  std::size_t active_count() const noexcept;
};

/// Coordinates within this distance of 0 or 1 are snapped.
inline constexpr double kIntegralTolerance = 1e-9;

/// Martingale random walk in the kernel of the active constraints until no
/// kernel direction remains among the non-integral coordinates.
SelectionState flight_phase(const BalancingProblem& problem, RngStream& rng);
/// Continues a flight from an existing state (used by landing).
void continue_flight(const BalancingProblem& problem, SelectionState& state, RngStream& rng);

struct LandingReport {
  std::vector<std::uint8_t> selected;        // 0/1 per unit
  std::vector<std::size_t> dropped_columns;  // suppression order
  std::vector<double> residuals;             // |achieved - target| per column
  double max_residual = 0.0;
};

/// Drops droppable columns one at a time, re-running the flight after each,
/// until every coordinate is integral. Throws NumericalError if only
/// never-drop columns remain and the vector is still fractional.
LandingReport landing_phase(const BalancingProblem& problem, SelectionState state, RngStream& rng);

struct BalancedSelection {
  std::vector<std::size_t> selected;  // indices with selected(m) = 1
  LandingReport report;
};

BalancedSelection balanced_select(const BalancingProblem& problem, RngStream& rng);

}  // namespace hotdeck
