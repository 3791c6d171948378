#include "hotdeck/popgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hotdeck/errors.hpp"

namespace hotdeck {

std::int64_t PopulationSpec::total_size() const noexcept {
  std::int64_t n = 0;
  for (const auto& c : classes) n += c.size;
  return n;
}

void PopulationSpec::validate() const {
  if (classes.empty()) throw DataError("population spec has no classes");
  for (std::size_t g = 0; g < classes.size(); ++g) {
    const auto& c = classes[g];
    const std::string where = " in class " + std::to_string(g + 1);
    if (c.size <= 0) throw DataError("class size must be positive" + where);
    for (double p : c.phi.as_array()) {
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("response probability outside [0,1]" + where);
    }
    const double phi_sum = c.phi.rr + c.phi.rm + c.phi.mr + c.phi.mm;
    if (std::abs(phi_sum - 1.0) > 1e-12) throw DataError("response probabilities must sum to 1" + where);
    cell_probabilities(c.p1dot, c.pdot1, c.p11);
  }
}

PopulationSpec table1_spec() {
  PopulationSpec spec;
  spec.classes = {
      {4000, 0.50, 0.50, 0.20, {0.10, 0.20, 0.20, 0.50}},
      {4000, 0.55, 0.55, 0.30, {0.20, 0.20, 0.20, 0.40}},
      {4000, 0.60, 0.60, 0.40, {0.30, 0.25, 0.25, 0.20}},
      {4000, 0.65, 0.65, 0.50, {0.40, 0.20, 0.20, 0.20}},
      {4000, 0.70, 0.70, 0.60, {0.50, 0.20, 0.20, 0.10}},
  };
  return spec;
}

PopulationSpec parse_population_spec(const std::string& text) {
  PopulationSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& c : j.at("classes")) {
      ClassSpec cs;
      cs.size = c.at("N").get<std::int64_t>();
      cs.p1dot = c.at("p1dot").get<double>();
      cs.pdot1 = c.at("pdot1").get<double>();
      cs.p11 = c.at("p11").get<double>();
      const auto& phi = c.at("phi");
      cs.phi = {phi.at("rr").get<double>(), phi.at("rm").get<double>(), phi.at("mr").get<double>(),
                phi.at("mm").get<double>()};
      spec.classes.push_back(cs);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed population spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string dump_population_spec(const PopulationSpec& spec) {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : spec.classes) {
    nlohmann::ordered_json cj;
    cj["N"] = c.size;
    cj["p1dot"] = c.p1dot;
    cj["pdot1"] = c.pdot1;
    cj["p11"] = c.p11;
    cj["phi"] = {{"rr", c.phi.rr}, {"rm", c.phi.rm}, {"mr", c.phi.mr}, {"mm", c.phi.mm}};
    j["classes"].push_back(cj);
  }
  return j.dump(2);
}

PopulationSpec load_population_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("input not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_population_spec(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_population_spec(const std::filesystem::path& path, const PopulationSpec& spec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << dump_population_spec(spec) << '\n';
}

CellProbabilities cell_probabilities(double p1dot, double pdot1, double p11) {
  constexpr double tol = 1e-12;
  const double lo = std::max(0.0, p1dot + pdot1 - 1.0);
  const double hi = std::min(p1dot, pdot1);
  if (!(p1dot >= 0.0 && p1dot <= 1.0 && pdot1 >= 0.0 && pdot1 <= 1.0) || p11 < lo - tol || p11 > hi + tol) {
    throw DataError("infeasible joint proportion");
  }
  CellProbabilities c;
  c.p11 = p11;
  c.p10 = std::max(0.0, p1dot - p11);
  c.p01 = std::max(0.0, pdot1 - p11);
  c.p00 = std::max(0.0, 1.0 - p1dot - pdot1 + p11);
  return c;
}

double odds_ratio(const CellProbabilities& cells) {
  const double den = cells.p10 * cells.p01;
  if (!(den != 0.0)) throw DataError("odds ratio undefined");
  return cells.p11 * cells.p00 / den;
}

PopulationParameters population_parameters(const PopulationSpec& spec) {
  spec.validate();
  const double N = static_cast<double>(spec.total_size());
  PopulationParameters p;
  for (const auto& c : spec.classes) {
    const double share = static_cast<double>(c.size) / N;
    const auto cells = cell_probabilities(c.p1dot, c.pdot1, c.p11);
    p.p1dot += share * c.p1dot;
    p.pdot1 += share * c.pdot1;
    p.p11 += share * c.p11;
    p.cells.p00 += share * cells.p00;
    p.cells.p01 += share * cells.p01;
    p.cells.p10 += share * cells.p10;
    p.cells.p11 += share * cells.p11;
  }
  p.odds_ratio = odds_ratio(p.cells);
  return p;
}

std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& probs) {
  std::vector<std::int64_t> counts(probs.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double exact = static_cast<double>(total) * probs[i];
    // Snap values that are integral up to floating error (e.g. 4000 * 0.3).
    const double nearest = std::round(exact);
    const double base = std::abs(exact - nearest) < 1e-9 ? nearest : std::floor(exact);
    counts[i] = static_cast<std::int64_t>(base);
    assigned += counts[i];
    remainders.emplace_back(exact - base, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; r = (r + 1) % remainders.size()) {
    ++counts[remainders[r].second];
    ++assigned;
  }
  return counts;
}

SurveyDataset generate_population(const PopulationSpec& spec) {
  spec.validate();
  std::vector<Unit> units;
  units.reserve(static_cast<std::size_t>(spec.total_size()));
  std::int64_t next_id = 1;
  for (std::size_t g = 0; g < spec.classes.size(); ++g) {
    const auto& c = spec.classes[g];
    const auto cells = cell_probabilities(c.p1dot, c.pdot1, c.p11);
    // Cell order (1,1), (1,0), (0,1), (0,0).
    const std::vector<double> probs = {cells.p11, cells.p10, cells.p01, cells.p00};
    const std::pair<int, int> values[4] = {{1, 1}, {1, 0}, {0, 1}, {0, 0}};
    const auto counts = apportion(c.size, probs);
    for (std::size_t cell = 0; cell < 4; ++cell) {
      for (std::int64_t r = 0; r < counts[cell]; ++r) {
        Unit u;
        u.id = std::to_string(next_id++);
        u.weight = 1.0;
        u.cls = static_cast<int>(g + 1);
        u.x = values[cell].first;
        u.y = values[cell].second;
        units.push_back(std::move(u));
      }
    }
  }
  return SurveyDataset(std::move(units), spec.total_size(), Dimensions{2, 2, 0});
}

}  // namespace hotdeck
