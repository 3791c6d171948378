#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <string>

#include "hotdeck/errors.hpp"
#include "hotdeck/survey.hpp"

using namespace hotdeck;

namespace {

DatasetSchema schema_n(std::int64_t N) {
  DatasetSchema s;
  s.N = N;
  return s;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

Unit unit(std::string id, int cls, Category x, Category y, double w = 1.0) {
  Unit u;
  u.id = std::move(id);
  u.cls = cls;
  u.x = x;
  u.y = y;
  u.weight = w;
  return u;
}

}  // namespace

TEST_CASE("parse a small file with half the y column empty") {
  const std::string text =
      "id,weight,class,x,y\n"
      "a,10,1,0,1\n"
      "b,10,1,1,\n"
      "c,10,1,1,0\n"
      "d,10,1,0,\n";
  auto d = parse_dataset(text, schema_n(40));
  REQUIRE(d.size() == 4);
  int rm = 0;
  for (std::size_t i = 0; i < d.size(); ++i) rm += pattern_of(d, i) == patterns::rm;
  CHECK(rm == 2);
  CHECK(d.K() == 2);
  CHECK(d.L() == 2);
  CHECK(d.population_size() == 40);
}

TEST_CASE("parse errors name the row") {
  CHECK(message_of([] { parse_dataset("id,weight,class,x,y\na,-1,1,0,1\n", schema_n(5)); }) ==
        "non-positive weight at row 2");
  DatasetSchema s = schema_n(10);
  s.K = 2;
  CHECK(message_of([&] { parse_dataset("id,weight,class,x,y\na,1,1,0,1\nb,1,1,2,0\n", s); })
            .starts_with("category out of range"));
  CHECK(message_of([] { parse_dataset("id,weight,class,x,y\na,1,1,0,1\n", DatasetSchema{}); })
            .find("population size N is required") != std::string::npos);
  CHECK(message_of([] { parse_dataset("id,weight,class,x\na,1,1,0\n", schema_n(3)); })
            .starts_with("header must name"));
  CHECK(message_of([] { parse_dataset("id,weight,class,x,y\na,1,1,0\n", schema_n(3)); })
            .starts_with("malformed row"));
}

TEST_CASE("constructor rejects duplicates and bad weights") {
  CHECK_THROWS_AS(SurveyDataset({unit("a", 1, 0, 0), unit("a", 1, 1, 1)}, 4, {}), DataError);
  CHECK_THROWS_AS(SurveyDataset({unit("a", 1, 0, 0, 0.0)}, 4, {}), DataError);
  CHECK_THROWS_AS(SurveyDataset({unit("a", 1, 3, 0)}, 4, {2, 2, 0}), DataError);
}

TEST_CASE("pattern naming") {
  CHECK(pattern_of(unit("a", 1, 1, std::nullopt)).name() == "rm");
  CHECK(pattern_of(unit("a", 1, std::nullopt, std::nullopt)).name() == "mm");
  Unit u = unit("a", 1, 0, 1);
  CHECK(pattern_of(u, true).name() == "rrm");
  CHECK(ResponsePattern::parse("mr") == patterns::mr);
  CHECK(ResponsePattern::parse("rrm").z_missing());
  CHECK_THROWS_AS(ResponsePattern::parse("rx"), DataError);
}

TEST_CASE("partition by class and pattern") {
  SurveyDataset d({unit("a", 1, 0, 0), unit("b", 1, 1, 1), unit("c", 1, std::nullopt, 1),
                   unit("d", 1, std::nullopt, std::nullopt)},
                  10, {});
  auto parts = partition_by_class_and_pattern(d);
  CHECK(parts.at({1, patterns::rr}).units.size() == 2);
  CHECK(parts.at({1, patterns::mr}).units.size() == 1);
  CHECK(parts.at({1, patterns::mm}).units.size() == 1);
  CHECK(parts.count({1, patterns::rm}) == 0);
  std::size_t total = 0;
  for (const auto& [key, set] : parts) total += set.units.size();
  CHECK(total == d.size());

  CHECK(partition_by_class_and_pattern(SurveyDataset({}, 1, {})).empty());

  SurveyDataset two({unit("a", 1, 0, 0), unit("b", 2, 1, 1)}, 5, {});
  auto p2 = partition_by_class_and_pattern(two);
  CHECK(p2.size() == 2);
  CHECK(p2.count({1, patterns::rr}) == 1);
  CHECK(p2.count({2, patterns::rr}) == 1);
}

TEST_CASE("csv round trip through the sidecar") {
  const auto dir = std::filesystem::temp_directory_path() / "hotdeck_survey_rt";
  std::filesystem::create_directories(dir);
  SurveyDataset d({unit("a", 1, 0, 0, 2.5), unit("b", 2, std::nullopt, 1, 1.0 / 3.0),
                   unit("c", 2, 2, std::nullopt, 7)},
                  20, {3, 2, 0});
  const auto path = dir / "d.csv";
  save_dataset(path, d);
  CHECK(std::filesystem::exists(sidecar_path(path)));
  auto back = load_dataset(path);
  CHECK(back == d);
  CHECK(serialize_dataset(back) == serialize_dataset(d));
  std::filesystem::remove_all(dir);
}

TEST_CASE("missing file") {
  CHECK(message_of([] { load_dataset("/nonexistent/nope.csv"); }).starts_with("input not found"));
}

TEST_CASE("ProportionTable derives marginals") {
  auto t = ProportionTable::from_joint(2, 3, {0.1, 0.2, 0.1, 0.3, 0.2, 0.1});
  CHECK(t.marginals_derived());
  CHECK(t.marginal_x(0) == doctest::Approx(0.4));
  CHECK(t.marginal_y(1) == doctest::Approx(0.4));
  auto u = ProportionTable::with_marginals(2, 2, {0.25, 0.25, 0.25, 0.25}, {0.3, 0.7}, {0.5, 0.5});
  CHECK_FALSE(u.marginals_derived());
  CHECK(u.marginal_x(1) == 0.7);
}
