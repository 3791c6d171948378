#include "hotdeck/imputation.hpp"

#include <algorithm>
#include <cmath>

#include "hotdeck/cube.hpp"
#include "hotdeck/errors.hpp"

namespace hotdeck {

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::rhdi:
      return "rhdi";
    case Method::jhdi:
      return "jhdi";
    case Method::bhdi:
      return "bhdi";
    case Method::jhdi3:
      return "jhdi3";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "rhdi") return Method::rhdi;
  if (name == "jhdi") return Method::jhdi;
  if (name == "bhdi") return Method::bhdi;
  if (name == "jhdi3") return Method::jhdi3;
  throw DataError("unknown imputation method '" + name + "'");
}

const char* to_string(CellKind kind) noexcept {
  switch (kind) {
    case CellKind::mr:
      return "mr";
    case CellKind::rm:
      return "rm";
    case CellKind::mm:
      return "mm";
  }
  return "?";
}

std::size_t CellPopulation::cells_per_row() const noexcept {
  switch (kind) {
    case CellKind::mr:
      return static_cast<std::size_t>(K);
    case CellKind::rm:
      return static_cast<std::size_t>(L);
    case CellKind::mm:
      return static_cast<std::size_t>(K * L);
  }
  return 0;
}

std::vector<double> CellPopulation::balancing_vector(std::size_t cell) const {
  std::vector<double> t(static_cast<std::size_t>(K * L), 0.0);
  const auto& c = cells.at(cell);
  t[c.t_index] = c.t_value;
  return t;
}

std::vector<double> CellPopulation::balance_targets() const {
  std::vector<double> t(static_cast<std::size_t>(K * L), 0.0);
  for (const auto& c : cells) t[c.t_index] += c.t_value;
  return t;
}

double ImputationOutcome::max_residual() const noexcept {
  double m = 0.0;
  for (const auto& r : residuals) m = std::max(m, r.max_residual);
  return m;
}

namespace {

constexpr int kKinds = 3;

int kind_of(const Unit& u) {
  if (u.x && u.y) return -1;
  if (u.x) return static_cast<int>(CellKind::rm);
  if (u.y) return static_cast<int>(CellKind::mr);
  return static_cast<int>(CellKind::mm);
}

// Substream tag of one (class, kind) population. Independent of the order in
// which populations are processed.
std::uint64_t population_tag(int cls, CellKind kind) {
  return static_cast<std::uint64_t>(cls) * 8 + static_cast<std::uint64_t>(kind);
}

void add_population_cells(CellPopulation& pop, const SurveyDataset& data, const ClassCellEstimates& c,
                          bool joint_conditionals) {
  const int K = pop.K;
  const int L = pop.L;
  for (std::size_t r = 0; r < pop.rows.size(); ++r) {
    const Unit& u = data[pop.rows[r]];
    const double w = pop.row_weights[r];
    auto push = [&](int k, int l, double p) {
      const auto q = static_cast<std::size_t>(k * L + l);
      pop.cells.push_back({r, k, l, p, q, w * p});
    };
    switch (pop.kind) {
      case CellKind::mr:
        for (int k = 0; k < K; ++k) {
          const double p = joint_conditionals ? c.x_given_y[static_cast<std::size_t>(*u.y * K + k)]
                                              : c.x_ac[static_cast<std::size_t>(k)];
          push(k, *u.y, p);
        }
        break;
      case CellKind::rm:
        for (int l = 0; l < L; ++l) {
          const double p = joint_conditionals ? c.y_given_x[static_cast<std::size_t>(*u.x * L + l)]
                                              : c.y_ac[static_cast<std::size_t>(l)];
          push(*u.x, l, p);
        }
        break;
      case CellKind::mm:
        for (int k = 0; k < K; ++k) {
          for (int l = 0; l < L; ++l) push(k, l, c.joint_cc[static_cast<std::size_t>(k * L + l)]);
        }
        break;
    }
  }
}

// Populations for either the joint laws or, for random hot-deck, the
// marginal laws (mm is the same in both).
std::vector<CellPopulation> populations(const SurveyDataset& data, const CellEstimates& cells,
                                        bool joint_conditionals) {
  const int G = data.num_classes();
  std::vector<CellPopulation> pops(static_cast<std::size_t>(G * kKinds));
  for (int g = 1; g <= G; ++g) {
    for (int kind = 0; kind < kKinds; ++kind) {
      auto& p = pops[static_cast<std::size_t>((g - 1) * kKinds + kind)];
      p.kind = static_cast<CellKind>(kind);
      p.cls = g;
      p.K = data.K();
      p.L = data.L();
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Unit& u = data[i];
    const int kind = kind_of(u);
    if (kind < 0) continue;
    auto& p = pops[static_cast<std::size_t>((u.cls - 1) * kKinds + kind)];
    p.rows.push_back(i);
    p.row_weights.push_back(u.weight);
  }
  std::vector<CellPopulation> out;
  for (auto& p : pops) {
    if (p.rows.empty()) continue;
    add_population_cells(p, data, cells.of_class(p.cls), joint_conditionals);
    out.push_back(std::move(p));
  }
  return out;
}

struct Completion {
  std::vector<Unit> units;
  std::vector<ImputedRecord> records;
};

void apply_cell(Completion& done, const CellPopulation& pop, const CandidateCell& cell) {
  const std::size_t unit = pop.rows[cell.row];
  Unit& u = done.units[unit];
  ImputedRecord rec;
  rec.unit = unit;
  if (!u.x) {
    u.x = cell.k;
    u.imputed.x = true;
    rec.x = cell.k;
  }
  if (!u.y) {
    u.y = cell.l;
    u.imputed.y = true;
    rec.y = cell.l;
  }
  done.records.push_back(rec);
}

std::vector<Fallback> class_fallbacks(const CellEstimates& cells) {
  std::vector<Fallback> out;
  out.reserve(cells.classes.size());
  for (const auto& c : cells.classes) out.push_back(c.worst_level());
  return out;
}

ImputationOutcome finish(const SurveyDataset& data, Completion done, std::vector<Fallback> fallback) {
  std::sort(done.records.begin(), done.records.end(),
            [](const ImputedRecord& a, const ImputedRecord& b) { return a.unit < b.unit; });
  ImputationOutcome out{data.with_units(std::move(done.units)), std::move(done.records), {}, std::move(fallback)};
  return out;
}

// Independent draw per row from its cells' probabilities.
ImputationOutcome draw_independently(const SurveyDataset& data, const CellEstimates& cells, bool joint,
                                     const RngStream& rng) {
  Completion done{std::vector<Unit>(data.units().begin(), data.units().end()), {}};
  std::vector<double> probs;
  for (const auto& pop : populations(data, cells, joint)) {
    RngStream stream = rng.derive(population_tag(pop.cls, pop.kind));
    const std::size_t width = pop.cells_per_row();
    for (std::size_t r = 0; r < pop.rows.size(); ++r) {
      probs.resize(width);
      for (std::size_t j = 0; j < width; ++j) probs[j] = pop.cells[r * width + j].prob;
      apply_cell(done, pop, pop.cells[r * width + stream.categorical(probs)]);
    }
  }
  return finish(data, std::move(done), class_fallbacks(cells));
}

}  // namespace

std::vector<CellPopulation> build_cell_populations(const SurveyDataset& data, const CellEstimates& cells) {
  return populations(data, cells, true);
}

std::vector<CellPopulation> build_cell_populations(const SurveyDataset& data) {
  return build_cell_populations(data, cell_estimates(data));
}

ImputationOutcome rhdi(const SurveyDataset& data, const RngStream& rng) {
  return draw_independently(data, cell_estimates(data), false, rng);
}

ImputationOutcome jhdi(const SurveyDataset& data, const RngStream& rng) {
  return draw_independently(data, cell_estimates(data), true, rng);
}

ImputationOutcome bhdi(const SurveyDataset& data, const RngStream& rng) {
  const auto cells = cell_estimates(data);
  Completion done{std::vector<Unit>(data.units().begin(), data.units().end()), {}};
  std::vector<PopulationResidual> residuals;

  for (const auto& pop : build_cell_populations(data, cells)) {
    const std::size_t R = pop.rows.size();
    const auto T = static_cast<std::size_t>(pop.K * pop.L);
    std::vector<ConstraintPolicy> policy(R + T);
    for (std::size_t r = 0; r < R; ++r) policy[r].never_drop = true;
    // t columns: later q is dropped first.
    for (std::size_t q = 0; q < T; ++q) policy[R + q].priority = static_cast<int>(T - q);

    std::vector<double> pi(pop.cells.size());
    for (std::size_t m = 0; m < pop.cells.size(); ++m) pi[m] = pop.cells[m].prob;
    BalancingProblem problem(std::move(pi), R + T, std::move(policy));
    for (std::size_t m = 0; m < pop.cells.size(); ++m) {
      const auto& c = pop.cells[m];
      problem.add(m, c.row, 1.0);
      // pi^{-1} t: the unit weight at coordinate q.
      problem.add(m, R + c.t_index, pop.row_weights[c.row]);
    }

    RngStream stream = rng.derive(population_tag(pop.cls, pop.kind));
    const auto selection = balanced_select(problem, stream);

    std::vector<int> per_row(R, 0);
    for (auto m : selection.selected) {
      ++per_row[pop.cells[m].row];
      apply_cell(done, pop, pop.cells[m]);
    }
    if (std::any_of(per_row.begin(), per_row.end(), [](int n) { return n != 1; })) {
      throw NumericalError("balanced selection did not pick exactly one cell per row");
    }

    PopulationResidual res;
    res.cls = pop.cls;
    res.kind = pop.kind;
    res.residuals.assign(selection.report.residuals.begin() + static_cast<std::ptrdiff_t>(R),
                         selection.report.residuals.end());
    for (double r : res.residuals) res.max_residual = std::max(res.max_residual, r);
    for (auto col : selection.report.dropped_columns) res.dropped_t_columns.push_back(col - R);
    residuals.push_back(std::move(res));
  }

  auto out = finish(data, std::move(done), class_fallbacks(cells));
  out.residuals = std::move(residuals);
  return out;
}

// ---- three items ----

namespace {

// Joint counts over s_rrr, per class and pooled, for the conditional laws of
// the missing items given the observed ones.
struct ThreeWay {
  int K, L, Q;
  std::vector<std::vector<double>> by_class;  // [g-1][(k*L+l)*Q+q]
  std::vector<double> pooled;

  std::size_t index(int k, int l, int q) const { return static_cast<std::size_t>((k * L + l) * Q + q); }
};

// Conditional law over the missing coordinates, as weights over the cells of
// the missing subspace, by matching the observed ones against `counts`.
// Returns false if the conditioning cell is empty.
bool conditional(const ThreeWay& tw, const std::vector<double>& counts, const Unit& u, bool match_observed,
                 std::vector<double>& law) {
  std::fill(law.begin(), law.end(), 0.0);
  double total = 0.0;
  for (int k = 0; k < tw.K; ++k) {
    if (match_observed && u.x && *u.x != k) continue;
    for (int l = 0; l < tw.L; ++l) {
      if (match_observed && u.y && *u.y != l) continue;
      for (int q = 0; q < tw.Q; ++q) {
        if (match_observed && u.z && *u.z != q) continue;
        const double c = counts[tw.index(k, l, q)];
        // Index the missing subspace through the full cell index; observed
        // coordinates are fixed by the unit when the cell is applied.
        const int kk = u.x ? 0 : k;
        const int ll = u.y ? 0 : l;
        const int qq = u.z ? 0 : q;
        law[tw.index(kk, ll, qq)] += c;
        total += c;
      }
    }
  }
  if (total == 0.0) return false;
  for (double& v : law) v /= total;
  return true;
}

}  // namespace

ImputationOutcome jhdi3(const SurveyDataset& data, const RngStream& rng) {
  if (!data.has_z()) throw DataError("three-item imputation needs a z variable");
  const int G = data.num_classes();
  ThreeWay tw{data.K(), data.L(), data.Q(), {}, {}};
  const auto cells3 = static_cast<std::size_t>(tw.K * tw.L * tw.Q);
  tw.by_class.assign(static_cast<std::size_t>(G), std::vector<double>(cells3, 0.0));
  tw.pooled.assign(cells3, 0.0);
  for (const auto& u : data.units()) {
    if (!(u.x && u.y && u.z)) continue;
    const auto idx = tw.index(*u.x, *u.y, *u.z);
    tw.by_class[static_cast<std::size_t>(u.cls - 1)][idx] += u.weight;
    tw.pooled[idx] += u.weight;
  }

  Completion done{std::vector<Unit>(data.units().begin(), data.units().end()), {}};
  std::vector<Fallback> fallback(static_cast<std::size_t>(G), Fallback::none);
  std::vector<double> law(cells3);

  // One substream per (class, response pattern).
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(G) * 8);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Unit& u = data[i];
    const auto pattern = pattern_of(u, true);
    if (pattern.complete()) continue;
    groups[static_cast<std::size_t>(u.cls - 1) * 8 + pattern.bits()].push_back(i);
  }

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    if (groups[gi].empty()) continue;
    const int g = static_cast<int>(gi / 8) + 1;
    RngStream stream = rng.derive(static_cast<std::uint64_t>(g) * 8 + gi % 8);
    const auto& counts = tw.by_class[static_cast<std::size_t>(g - 1)];
    for (auto i : groups[gi]) {
      const Unit& u = data[i];
      // Ladder: class conditional -> class rrr marginal of the missing items
      // -> pooled conditional -> pooled marginal -> uniform.
      Fallback level = Fallback::none;
      if (!conditional(tw, counts, u, true, law)) {
        if (conditional(tw, counts, u, false, law)) {
          level = Fallback::class_marginal;
        } else if (conditional(tw, tw.pooled, u, true, law) || conditional(tw, tw.pooled, u, false, law)) {
          level = Fallback::pooled;
        } else {
          throw NoDonorError(g);
        }
      }
      auto& worst = fallback[static_cast<std::size_t>(g - 1)];
      worst = std::max(worst, level);

      const auto cell = stream.categorical(law);
      const int q = static_cast<int>(cell % static_cast<std::size_t>(tw.Q));
      const int l = static_cast<int>(cell / static_cast<std::size_t>(tw.Q)) % tw.L;
      const int k = static_cast<int>(cell / static_cast<std::size_t>(tw.Q * tw.L));
      Unit& out = done.units[i];
      ImputedRecord rec;
      rec.unit = i;
      if (!out.x) {
        out.x = k;
        out.imputed.x = true;
        rec.x = k;
      }
      if (!out.y) {
        out.y = l;
        out.imputed.y = true;
        rec.y = l;
      }
      if (!out.z) {
        out.z = q;
        out.imputed.z = true;
        rec.z = q;
      }
      done.records.push_back(rec);
    }
  }
  return finish(data, std::move(done), std::move(fallback));
}

ImputationOutcome impute(Method method, const SurveyDataset& data, const RngStream& rng) {
  switch (method) {
    case Method::rhdi:
      return rhdi(data, rng);
    case Method::jhdi:
      return jhdi(data, rng);
    case Method::bhdi:
      return bhdi(data, rng);
    case Method::jhdi3:
      return jhdi3(data, rng);
  }
  throw DataError("unknown imputation method");
}

}  // namespace hotdeck
