#include "hotdeck/survey.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include <json.hpp>

#include "hotdeck/errors.hpp"

namespace hotdeck {

namespace {

void check_category(const Category& c, int bound, const char* item, const std::string& id) {
  if (c && (*c < 0 || *c >= bound)) {
    throw DataError("category out of range: " + std::string(item) + "=" + std::to_string(*c) + " for unit '" + id +
                    "' (declared " + std::to_string(bound) + " categories)");
  }
}

}  // namespace

SurveyDataset::SurveyDataset(std::vector<Unit> units, std::int64_t population_size, Dimensions dims)
    : units_(std::move(units)), population_size_(population_size), dims_(dims) {
  if (population_size_ <= 0) throw DataError("population size N must be positive");
  if (dims_.K < 1 || dims_.L < 1 || dims_.Q < 0) throw DataError("category counts must be positive");
  std::unordered_set<std::string_view> ids;
  ids.reserve(units_.size() * 2);
  for (const auto& u : units_) {
    if (!(u.weight > 0.0) || !std::isfinite(u.weight)) throw DataError("non-positive weight for unit '" + u.id + "'");
    if (u.cls < 1) throw DataError("class label must be >= 1 for unit '" + u.id + "'");
    check_category(u.x, dims_.K, "x", u.id);
    check_category(u.y, dims_.L, "y", u.id);
    if (dims_.Q > 0) {
      check_category(u.z, dims_.Q, "z", u.id);
    } else if (u.z) {
      throw DataError("unit '" + u.id + "' has a z value but the dataset has no third item");
    }
    if (!ids.insert(u.id).second) throw DataError("duplicate id '" + u.id + "'");
    num_classes_ = std::max(num_classes_, u.cls);
  }
}

std::vector<double> SurveyDataset::weights() const {
  std::vector<double> w(units_.size());
  std::transform(units_.begin(), units_.end(), w.begin(), [](const Unit& u) { return u.weight; });
  return w;
}

bool SurveyDataset::fully_observed() const noexcept {
  return std::all_of(units_.begin(), units_.end(),
                     [&](const Unit& u) { return u.x && u.y && (!has_z() || u.z); });
}

SurveyDataset SurveyDataset::with_units(std::vector<Unit> units) const {
  return SurveyDataset(std::move(units), population_size_, dims_);
}

std::string ResponsePattern::name() const {
  std::string s;
  s += x_missing() ? 'm' : 'r';
  s += y_missing() ? 'm' : 'r';
  if (three_items_) s += z_missing() ? 'm' : 'r';
  return s;
}

ResponsePattern ResponsePattern::parse(const std::string& name) {
  if (name.size() != 2 && name.size() != 3) throw DataError("bad response pattern '" + name + "'");
  std::uint8_t bits = 0;
  const std::uint8_t masks[3] = {kMissX, kMissY, kMissZ};
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] == 'm') {
      bits |= masks[i];
    } else if (name[i] != 'r') {
      throw DataError("bad response pattern '" + name + "'");
    }
  }
  return ResponsePattern(bits, name.size() == 3);
}

ResponsePattern pattern_of(const Unit& unit, bool three_items) {
  std::uint8_t bits = 0;
  if (!unit.x) bits |= ResponsePattern::kMissX;
  if (!unit.y) bits |= ResponsePattern::kMissY;
  if (three_items && !unit.z) bits |= ResponsePattern::kMissZ;
  return ResponsePattern(bits, three_items);
}

std::map<PartitionKey, IndexSet> partition_by_class_and_pattern(const SurveyDataset& data) {
  std::map<PartitionKey, IndexSet> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& set = out[PartitionKey{data[i].cls, pattern_of(data, i)}];
    set.units.push_back(i);
    set.weight_total += data[i].weight;
  }
  return out;
}

ClassPartition partition_by_class(const SurveyDataset& data) {
  ClassPartition p;
  p.G = data.num_classes();
  p.members.resize(static_cast<std::size_t>(p.G));
  for (std::size_t i = 0; i < data.size(); ++i) p.members[static_cast<std::size_t>(data[i].cls - 1)].push_back(i);
  return p;
}

ProportionTable ProportionTable::from_joint(int K, int L, std::vector<double> joint, Scale scale) {
  if (joint.size() != static_cast<std::size_t>(K * L)) throw std::invalid_argument("joint table size mismatch");
  ProportionTable t;
  t.K_ = K;
  t.L_ = L;
  t.scale_ = scale;
  t.joint_ = std::move(joint);
  t.marginal_x_.assign(static_cast<std::size_t>(K), 0.0);
  t.marginal_y_.assign(static_cast<std::size_t>(L), 0.0);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      t.marginal_x_[static_cast<std::size_t>(k)] += t.joint(k, l);
    }
  }
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      t.marginal_y_[static_cast<std::size_t>(l)] += t.joint(k, l);
    }
  }
  t.derived_ = true;
  return t;
}

ProportionTable ProportionTable::with_marginals(int K, int L, std::vector<double> joint, std::vector<double> marginal_x,
                                                std::vector<double> marginal_y, Scale scale) {
  if (joint.size() != static_cast<std::size_t>(K * L) || marginal_x.size() != static_cast<std::size_t>(K) ||
      marginal_y.size() != static_cast<std::size_t>(L)) {
    throw std::invalid_argument("proportion table size mismatch");
  }
  ProportionTable t;
  t.K_ = K;
  t.L_ = L;
  t.scale_ = scale;
  t.joint_ = std::move(joint);
  t.marginal_x_ = std::move(marginal_x);
  t.marginal_y_ = std::move(marginal_y);
  t.derived_ = false;
  return t;
}

// ---- I/O ----

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".schema.json";
  return p;
}

DatasetSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("schema not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed schema " + path.string() + ": " + e.what());
  }
  DatasetSchema s;
  try {
    if (j.contains("K")) s.K = j.at("K").get<int>();
    if (j.contains("L")) s.L = j.at("L").get<int>();
    if (j.contains("Q")) s.Q = j.at("Q").get<int>();
    if (j.contains("N")) s.N = j.at("N").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed schema " + path.string() + ": " + e.what());
  }
  return s;
}

void save_schema(const std::filesystem::path& path, const DatasetSchema& schema) {
  nlohmann::ordered_json j;
  if (schema.N) j["N"] = *schema.N;
  if (schema.K) j["K"] = *schema.K;
  if (schema.L) j["L"] = *schema.L;
  if (schema.Q) j["Q"] = *schema.Q;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void row_error(const std::string& what, std::size_t row) {
  throw DataError(what + " at row " + std::to_string(row));
}

Category parse_category(std::string_view field, std::size_t row) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  int v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) row_error("malformed category", row);
  if (v < 0) row_error("category out of range", row);
  return v;
}

}  // namespace

SurveyDataset parse_dataset(const std::string& text, const DatasetSchema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file");
  const auto header = split_fields(trim(line));
  int col_id = -1, col_w = -1, col_g = -1, col_x = -1, col_y = -1, col_z = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto h = trim(header[c]);
    const int ci = static_cast<int>(c);
    if (h == "id") col_id = ci;
    else if (h == "weight") col_w = ci;
    else if (h == "class") col_g = ci;
    else if (h == "x") col_x = ci;
    else if (h == "y") col_y = ci;
    else if (h == "z") col_z = ci;
  }
  if (col_id < 0 || col_w < 0 || col_g < 0 || col_x < 0 || col_y < 0) {
    throw DataError("header must name columns id,weight,class,x,y[,z]");
  }
  const bool three = col_z >= 0 || (schema.Q && *schema.Q > 0);

  std::vector<Unit> units;
  int max_x = -1, max_y = -1, max_z = -1;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto f = split_fields(trimmed);
    if (f.size() != header.size()) row_error("malformed row (expected " + std::to_string(header.size()) + " fields)", row);
    Unit u;
    u.id = std::string(trim(f[static_cast<std::size_t>(col_id)]));
    if (u.id.empty()) row_error("missing id", row);
    const auto wf = trim(f[static_cast<std::size_t>(col_w)]);
    auto wres = std::from_chars(wf.data(), wf.data() + wf.size(), u.weight);
    if (wres.ec != std::errc() || wres.ptr != wf.data() + wf.size()) row_error("malformed weight", row);
    if (!(u.weight > 0.0) || !std::isfinite(u.weight)) row_error("non-positive weight", row);
    const auto gf = trim(f[static_cast<std::size_t>(col_g)]);
    auto gres = std::from_chars(gf.data(), gf.data() + gf.size(), u.cls);
    if (gres.ec != std::errc() || gres.ptr != gf.data() + gf.size() || u.cls < 1) row_error("malformed class", row);
    u.x = parse_category(f[static_cast<std::size_t>(col_x)], row);
    u.y = parse_category(f[static_cast<std::size_t>(col_y)], row);
    if (col_z >= 0) u.z = parse_category(f[static_cast<std::size_t>(col_z)], row);
    if (schema.K && u.x && *u.x >= *schema.K) row_error("category out of range", row);
    if (schema.L && u.y && *u.y >= *schema.L) row_error("category out of range", row);
    if (schema.Q && u.z && *u.z >= *schema.Q) row_error("category out of range", row);
    if (u.x) max_x = std::max(max_x, *u.x);
    if (u.y) max_y = std::max(max_y, *u.y);
    if (u.z) max_z = std::max(max_z, *u.z);
    units.push_back(std::move(u));
  }
  Dimensions dims;
  dims.K = schema.K.value_or(std::max(1, max_x + 1));
  dims.L = schema.L.value_or(std::max(1, max_y + 1));
  dims.Q = three ? schema.Q.value_or(std::max(1, max_z + 1)) : 0;
  if (!schema.N) throw DataError("population size N is required (schema field \"N\")");
  return SurveyDataset(std::move(units), *schema.N, dims);
}

SurveyDataset load_dataset(const std::filesystem::path& path, const std::optional<DatasetSchema>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("input not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  DatasetSchema s;
  if (schema) {
    s = *schema;
  } else if (std::filesystem::exists(sidecar_path(path))) {
    s = load_schema(sidecar_path(path));
  }
  return parse_dataset(ss.str(), s);
}

std::string serialize_dataset(const SurveyDataset& data) {
  std::string out = data.has_z() ? "id,weight,class,x,y,z\n" : "id,weight,class,x,y\n";
  auto cat = [](const Category& c) { return c ? std::to_string(*c) : std::string(); };
  for (const auto& u : data.units()) {
    out += u.id;
    out += ',';
    out += format_double(u.weight);
    out += ',';
    out += std::to_string(u.cls);
    out += ',';
    out += cat(u.x);
    out += ',';
    out += cat(u.y);
    if (data.has_z()) {
      out += ',';
      out += cat(u.z);
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const SurveyDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize_dataset(data);
  DatasetSchema s;
  s.N = data.population_size();
  s.K = data.K();
  s.L = data.L();
  if (data.has_z()) s.Q = data.Q();
  save_schema(sidecar_path(path), s);
}

}  // namespace hotdeck
