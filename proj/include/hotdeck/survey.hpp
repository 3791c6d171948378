#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <string>
#include <vector>

namespace hotdeck {

/// A categorical value that may be missing. Categories are 0-based.
using Category = std::optional<int>;

struct ImputedFlags {
  bool x = false;
  bool y = false;
  bool z = false;
  bool any() const noexcept { return x || y || z; }
  friend bool operator==(const ImputedFlags&, const ImputedFlags&) = default;
};

struct Unit {
  std::string id;
  double weight = 1.0;  // w_i = 1 / pi_i
  int cls = 1;          // imputation class, 1-based
  Category x;
  Category y;
  Category z;  // only meaningful for three-variable datasets
  ImputedFlags imputed;

  double inclusion_probability() const noexcept { return 1.0 / weight; }
  friend bool operator==(const Unit&, const Unit&) = default;
};

/// Which items a unit answered. Bit set = item missing.
class ResponsePattern {
 public:
  static constexpr std::uint8_t kMissX = 1;
  static constexpr std::uint8_t kMissY = 2;
  static constexpr std::uint8_t kMissZ = 4;

  constexpr ResponsePattern() = default;
  constexpr ResponsePattern(std::uint8_t missing, bool three_items)
      : missing_(missing), three_items_(three_items) {}

  constexpr bool x_missing() const noexcept { return missing_ & kMissX; }
  constexpr bool y_missing() const noexcept { return missing_ & kMissY; }
  constexpr bool z_missing() const noexcept { return three_items_ && (missing_ & kMissZ); }
  constexpr bool three_items() const noexcept { return three_items_; }
  constexpr std::uint8_t bits() const noexcept { return missing_; }
  constexpr bool complete() const noexcept { return missing_ == 0; }

  /// "rr", "rm", "mr", "mm" or the three-letter analogues ("rrm", ...).
  std::string name() const;
  static ResponsePattern parse(const std::string& name);

  friend constexpr bool operator==(ResponsePattern, ResponsePattern) = default;
  friend constexpr auto operator<=>(ResponsePattern a, ResponsePattern b) {
    return std::pair(a.three_items_, a.missing_) <=> std::pair(b.three_items_, b.missing_);
  }

 private:
  std::uint8_t missing_ = 0;
  bool three_items_ = false;
};

namespace patterns {
inline constexpr ResponsePattern rr{0, false};
inline constexpr ResponsePattern rm{ResponsePattern::kMissY, false};
inline constexpr ResponsePattern mr{ResponsePattern::kMissX, false};
inline constexpr ResponsePattern mm{ResponsePattern::kMissX | ResponsePattern::kMissY, false};
}  // namespace patterns

struct Dimensions {
  int K = 2;
  int L = 2;
  int Q = 0;  // 0: two-variable dataset (no z)
  friend bool operator==(const Dimensions&, const Dimensions&) = default;
};

/// Weighted sample with class labels and possibly-missing categorical items.
/// Immutable after construction; the constructor validates every invariant.
class SurveyDataset {
 public:
  SurveyDataset() = default;
  SurveyDataset(std::vector<Unit> units, std::int64_t population_size, Dimensions dims);

  std::span<const Unit> units() const noexcept { return units_; }
  const Unit& operator[](std::size_t i) const { return units_[i]; }
  std::size_t size() const noexcept { return units_.size(); }
  bool empty() const noexcept { return units_.empty(); }

  std::int64_t population_size() const noexcept { return population_size_; }
  const Dimensions& dims() const noexcept { return dims_; }
  int K() const noexcept { return dims_.K; }
  int L() const noexcept { return dims_.L; }
  int Q() const noexcept { return dims_.Q; }
  bool has_z() const noexcept { return dims_.Q > 0; }
  /// Largest class label present (G); 0 for an empty dataset.
  int num_classes() const noexcept { return num_classes_; }

  std::vector<double> weights() const;
  bool fully_observed() const noexcept;

  /// Same units with values replaced; validates again.
  SurveyDataset with_units(std::vector<Unit> units) const;

  friend bool operator==(const SurveyDataset&, const SurveyDataset&) = default;

 private:
  std::vector<Unit> units_;
  std::int64_t population_size_ = 1;
  Dimensions dims_;
  int num_classes_ = 0;
};

ResponsePattern pattern_of(const Unit& unit, bool three_items = false);
inline ResponsePattern pattern_of(const SurveyDataset& data, std::size_t i) {
  return pattern_of(data[i], data.has_z());
}

struct PartitionKey {
  int cls;
  ResponsePattern pattern;
  friend auto operator<=>(const PartitionKey&, const PartitionKey&) = default;
};

struct IndexSet {
  std::vector<std::size_t> units;
  double weight_total = 0.0;  // N-hat of the set
};

/// Units grouped by (class, response pattern). Only nonempty keys appear.
std::map<PartitionKey, IndexSet> partition_by_class_and_pattern(const SurveyDataset& data);

/// Per-class index sets; entry g-1 holds class g (possibly empty).
struct ClassPartition {
  int G = 0;
  std::vector<std::vector<std::size_t>> members;
};
ClassPartition partition_by_class(const SurveyDataset& data);

/// Joint K x L proportion estimates with marginals.
class ProportionTable {
 public:
  enum class Scale { of_N, of_Nhat };

  ProportionTable() = default;
  /// Marginals derived from the joint by row/column summation.
  static ProportionTable from_joint(int K, int L, std::vector<double> joint, Scale scale = Scale::of_N);
  /// Marginals estimated separately from the joint (available-case families).
  static ProportionTable with_marginals(int K, int L, std::vector<double> joint, std::vector<double> marginal_x,
                                        std::vector<double> marginal_y, Scale scale = Scale::of_N);

  int K() const noexcept { return K_; }
  int L() const noexcept { return L_; }
  double joint(int k, int l) const { return joint_[static_cast<std::size_t>(k * L_ + l)]; }
  std::span<const double> joint() const noexcept { return joint_; }
  double marginal_x(int k) const { return marginal_x_[static_cast<std::size_t>(k)]; }
  double marginal_y(int l) const { return marginal_y_[static_cast<std::size_t>(l)]; }
  std::span<const double> marginal_x() const noexcept { return marginal_x_; }
  std::span<const double> marginal_y() const noexcept { return marginal_y_; }
  Scale scale() const noexcept { return scale_; }
  /// True when the marginals were derived from the joint.
  bool marginals_derived() const noexcept { return derived_; }

 private:
  int K_ = 0;
  int L_ = 0;
  std::vector<double> joint_;
  std::vector<double> marginal_x_;
  std::vector<double> marginal_y_;
  Scale scale_ = Scale::of_N;
  bool derived_ = true;
};

// ---- CSV ingestion / serialization ----

/// Optional overrides, typically read from a JSON sidecar.
struct DatasetSchema {
  std::optional<int> K;
  std::optional<int> L;
  std::optional<int> Q;
  std::optional<std::int64_t> N;
};

DatasetSchema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const DatasetSchema& schema);
/// `<csv path>.schema.json`
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Parses `id,weight,class,x,y[,z]`; empty cells are missing. When `schema`
/// is absent the sidecar next to the file is used if present. N must come
/// from the schema.
SurveyDataset load_dataset(const std::filesystem::path& path, const std::optional<DatasetSchema>& schema = {});
SurveyDataset parse_dataset(const std::string& text, const DatasetSchema& schema);

std::string serialize_dataset(const SurveyDataset& data);
/// Writes the CSV and its schema sidecar.
void save_dataset(const std::filesystem::path& path, const SurveyDataset& data);

std::string format_double(double v);

}  // namespace hotdeck
