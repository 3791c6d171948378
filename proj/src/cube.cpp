#include "hotdeck/cube.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hotdeck/errors.hpp"

namespace hotdeck {

BalancingProblem::BalancingProblem(std::vector<double> pi, std::size_t num_columns,
                                   std::vector<ConstraintPolicy> policy)
    : pi_(std::move(pi)), entries_(pi_.size()), policy_(std::move(policy)) {
  if (pi_.empty()) throw std::invalid_argument("balancing problem needs at least one unit");
  for (double p : pi_) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("inclusion probability outside [0,1]");
  }
  if (policy_.empty()) policy_.resize(num_columns);
  if (policy_.size() != num_columns) throw std::invalid_argument("one policy per column required");
}

BalancingProblem BalancingProblem::dense(std::vector<double> pi, const std::vector<std::vector<double>>& matrix,
                                         std::vector<ConstraintPolicy> policy) {
  const std::size_t P = matrix.empty() ? 0 : matrix.front().size();
  if (matrix.size() != pi.size()) throw std::invalid_argument("constraint matrix needs one row per unit");
  BalancingProblem prob(std::move(pi), P, std::move(policy));
  for (std::size_t m = 0; m < matrix.size(); ++m) {
    if (matrix[m].size() != P) throw std::invalid_argument("ragged constraint matrix");
    for (std::size_t p = 0; p < P; ++p) {
      if (matrix[m][p] != 0.0) prob.add(m, p, matrix[m][p]);
    }
  }
  return prob;
}

void BalancingProblem::add(std::size_t unit, std::size_t column, double value) {
  if (unit >= pi_.size() || column >= policy_.size()) throw std::out_of_range("balancing coefficient index");
  if (!std::isfinite(value)) throw std::invalid_argument("balancing coefficient must be finite");
  entries_[unit].push_back({column, value});
}

std::vector<double> BalancingProblem::functionals(std::span<const double> v) const {
  std::vector<double> out(num_columns(), 0.0);
  for (std::size_t m = 0; m < entries_.size(); ++m) {
    for (const auto& e : entries_[m]) out[e.column] += v[m] * e.value;
  }
  return out;
}

std::size_t SelectionState::non_integral_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0 && x != 1.0; }));
}

std::size_t SelectionState::active_count() const noexcept {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

namespace {

bool near_integral(double x) { return x < kIntegralTolerance || x > 1.0 - kIntegralTolerance; }

}  // namespace

// Fast flight: the walk only ever moves a small working set taken from the
// front of the fractional coordinates, grown until the active constraints it
// touches are fewer than its size. A kernel vector of that submatrix then
// leaves every active functional unchanged.
void continue_flight(const BalancingProblem& problem, SelectionState& state, RngStream& rng) {
  auto& v = state.v;
  std::vector<std::size_t> pending;
  for (std::size_t m = 0; m < v.size(); ++m) {
    if (near_integral(v[m])) {
      v[m] = v[m] < 0.5 ? 0.0 : 1.0;
    } else {
      pending.push_back(m);
    }
  }

  std::vector<int> slot(problem.num_columns(), -1);
  std::vector<std::size_t> touched;
  Eigen::MatrixXd A;
  Eigen::VectorXd u;

  while (!pending.empty()) {
    touched.clear();
    std::size_t s = 0;
    while (s < pending.size()) {
      for (const auto& e : problem.entries(pending[s])) {
        if (e.value != 0.0 && state.active[e.column] && slot[e.column] < 0) {
          slot[e.column] = static_cast<int>(touched.size());
          touched.push_back(e.column);
        }
      }
      ++s;
      if (touched.size() < s) break;
    }

    A.setZero(static_cast<Eigen::Index>(touched.size()), static_cast<Eigen::Index>(s));
    for (std::size_t j = 0; j < s; ++j) {
      for (const auto& e : problem.entries(pending[j])) {
        if (slot[e.column] >= 0) A(slot[e.column], static_cast<Eigen::Index>(j)) += e.value;
      }
    }
    for (auto c : touched) slot[c] = -1;

    if (touched.empty()) {
      u.setZero(static_cast<Eigen::Index>(s));
      u(0) = 1.0;
    } else {
      for (Eigen::Index r = 0; r < A.rows(); ++r) {
        const double scale = A.row(r).cwiseAbs().maxCoeff();
        if (scale > 0.0) A.row(r) /= scale;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.rank() >= static_cast<Eigen::Index>(s)) {
        if (s < pending.size()) throw NumericalError("cube flight: expected a kernel direction");
        break;  // no direction left: flight is over
      }
      u = lu.kernel().col(0);
      const double umax = u.cwiseAbs().maxCoeff();
      if (!(umax > 0.0)) throw NumericalError("cube flight: degenerate kernel vector");
      u /= umax;
      for (Eigen::Index j = 0; j < u.size(); ++j) {
        if (std::abs(u(j)) < 1e-13) u(j) = 0.0;
      }
    }

    // Largest steps keeping the working set inside the unit cube.
    double up = std::numeric_limits<double>::infinity();
    double down = std::numeric_limits<double>::infinity();
    std::size_t up_arg = 0, down_arg = 0;
    for (std::size_t j = 0; j < s; ++j) {
      const double uj = u(static_cast<Eigen::Index>(j));
      if (uj == 0.0) continue;
      const double vj = v[pending[j]];
      const double to_up = uj > 0.0 ? (1.0 - vj) / uj : vj / -uj;
      const double to_down = uj > 0.0 ? vj / uj : (1.0 - vj) / -uj;
      if (to_up < up) {
        up = to_up;
        up_arg = j;
      }
      if (to_down < down) {
        down = to_down;
        down_arg = j;
      }
    }
    if (!std::isfinite(up) || !std::isfinite(down)) throw NumericalError("cube flight: null step");

    // Moving up with probability down/(up+down) keeps E[v] unchanged.
    const bool go_up = rng.uniform() * (up + down) < down;
    const double step = go_up ? up : -down;
    const std::size_t hit = go_up ? up_arg : down_arg;
    for (std::size_t j = 0; j < s; ++j) {
      double& vj = v[pending[j]];
      vj += step * u(static_cast<Eigen::Index>(j));
      vj = std::clamp(vj, 0.0, 1.0);
    }
    {
      double& vh = v[pending[hit]];
      vh = vh < 0.5 ? 0.0 : 1.0;
    }

    std::size_t keep = 0;
    for (std::size_t j = 0; j < pending.size(); ++j) {
      double& vj = v[pending[j]];
      if (j < s && near_integral(vj)) {
        vj = vj < 0.5 ? 0.0 : 1.0;
        continue;
      }
      pending[keep++] = pending[j];
    }
    pending.resize(keep);
  }
}

SelectionState flight_phase(const BalancingProblem& problem, RngStream& rng) {
  SelectionState state;
  state.v.assign(problem.pi().begin(), problem.pi().end());
  state.active.assign(problem.num_columns(), true);
  continue_flight(problem, state, rng);
  return state;
}

LandingReport landing_phase(const BalancingProblem& problem, SelectionState state, RngStream& rng) {
  continue_flight(problem, state, rng);
  while (state.non_integral_count() > 0) {
    std::size_t victim = problem.num_columns();
    for (std::size_t p = 0; p < problem.num_columns(); ++p) {
      if (!state.active[p] || problem.policy(p).never_drop) continue;
      if (victim == problem.num_columns() || problem.policy(p).priority <= problem.policy(victim).priority) {
        victim = p;
      }
    }
    if (victim == problem.num_columns()) {
      throw NumericalError("cube landing: never-drop constraints cannot be met by a 0/1 vector");
    }
    state.active[victim] = false;
    state.dropped_columns.push_back(victim);
    continue_flight(problem, state, rng);
  }

  LandingReport report;
  report.selected.resize(state.v.size());
  std::vector<double> sel(state.v.size());
  for (std::size_t m = 0; m < state.v.size(); ++m) {
    report.selected[m] = state.v[m] == 1.0 ? 1 : 0;
    sel[m] = report.selected[m];
  }
  const auto achieved = problem.functionals(sel);
  const auto target = problem.targets();
  report.residuals.resize(achieved.size());
  for (std::size_t p = 0; p < achieved.size(); ++p) {
    report.residuals[p] = std::abs(achieved[p] - target[p]);
    report.max_residual = std::max(report.max_residual, report.residuals[p]);
  }
  report.dropped_columns = std::move(state.dropped_columns);
  return report;
}

BalancedSelection balanced_select(const BalancingProblem& problem, RngStream& rng) {
  BalancedSelection out;
  out.report = landing_phase(problem, flight_phase(problem, rng), rng);
  for (std::size_t m = 0; m < out.report.selected.size(); ++m) {
    if (out.report.selected[m]) out.selected.push_back(m);
  }
  return out;
}

}  // namespace hotdeck
