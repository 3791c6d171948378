#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "hotdeck/design.hpp"
#include "hotdeck/errors.hpp"
#include "hotdeck/popgen.hpp"

using namespace hotdeck;

TEST_CASE("cell probabilities from the three margins") {
  auto c = cell_probabilities(0.5, 0.5, 0.2);
  CHECK(c.p11 == doctest::Approx(0.2));
  CHECK(c.p10 == doctest::Approx(0.3));
  CHECK(c.p01 == doctest::Approx(0.3));
  CHECK(c.p00 == doctest::Approx(0.2));
  auto d = cell_probabilities(0.6, 0.6, 0.4);
  CHECK(d.p10 == doctest::Approx(0.2));
  CHECK(d.p00 == doctest::Approx(0.2));
  auto e = cell_probabilities(0.5, 0.5, 0.25);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) CHECK(e.at(k, l) == doctest::Approx(0.25));
  CHECK_THROWS_AS(cell_probabilities(0.2, 0.2, 0.5), DataError);
}

TEST_CASE("odds ratios of the five classes") {
  const std::array<double, 5> expect{0.44, 0.96, 2.00, 4.44, 12.00};
  const auto spec = table1_spec();
  for (std::size_t g = 0; g < 5; ++g) {
    const auto& c = spec.classes[g];
    const double r = odds_ratio(cell_probabilities(c.p1dot, c.pdot1, c.p11));
    CHECK(std::round(r * 100.0) / 100.0 == doctest::Approx(expect[g]));
  }
  CHECK(odds_ratio({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(odds_ratio({0.5, 0.0, 0.0, 0.5}), DataError);
}

TEST_CASE("generated population hits the counts exactly") {
  const auto spec = table1_spec();
  spec.validate();
  const auto pop = generate_population(spec);
  REQUIRE(pop.size() == 20000);
  CHECK(pop.population_size() == 20000);
  std::array<std::array<int, 4>, 5> counts{};
  for (const auto& u : pop.units()) {
    CHECK(u.weight == 1.0);
    ++counts[static_cast<std::size_t>(u.cls - 1)][static_cast<std::size_t>(*u.x * 2 + *u.y)];
  }
  // class 1: 11, 10, 01, 00
  CHECK(counts[0][3] == 800);
  CHECK(counts[0][2] == 1200);
  CHECK(counts[0][1] == 1200);
  CHECK(counts[0][0] == 800);
  const auto params = population_parameters(spec);
  CHECK(params.p11 == doctest::Approx(0.4));
  CHECK(params.p1dot == doctest::Approx(0.6));
  CHECK(params.pdot1 == doctest::Approx(0.6));
}

TEST_CASE("two-unit population") {
  PopulationSpec spec;
  spec.classes.push_back({2, 0.5, 0.5, 0.5, {}});
  const auto pop = generate_population(spec);
  REQUIRE(pop.size() == 2);
  int ones = 0, zeros = 0;
  for (const auto& u : pop.units()) {
    ones += *u.x == 1 && *u.y == 1;
    zeros += *u.x == 0 && *u.y == 0;
  }
  CHECK(ones == 1);
  CHECK(zeros == 1);
}

TEST_CASE("apportion sums to the total") {
  const auto a = apportion(7, {0.3, 0.3, 0.4});
  CHECK(a[0] + a[1] + a[2] == 7);
  CHECK(a[2] == 3);
}

TEST_CASE("spec validation") {
  PopulationSpec bad;
  bad.classes.push_back({10, 0.5, 0.5, 0.2, {0.5, 0.2, 0.2, 0.2}});
  CHECK_THROWS_AS(bad.validate(), DataError);
  PopulationSpec empty;
  CHECK_THROWS_AS(empty.validate(), DataError);
}

TEST_CASE("spec json round trip") {
  const auto spec = table1_spec();
  const auto back = parse_population_spec(dump_population_spec(spec));
  REQUIRE(back.classes.size() == spec.classes.size());
  for (std::size_t g = 0; g < spec.classes.size(); ++g) {
    CHECK(back.classes[g].size == spec.classes[g].size);
    CHECK(back.classes[g].p11 == spec.classes[g].p11);
    CHECK(back.classes[g].phi.mm == spec.classes[g].phi.mm);
  }
  CHECK_THROWS_AS(parse_population_spec("{not json"), DataError);
}

TEST_CASE("srswor edge cases") {
  const auto pop = generate_population(table1_spec());
  RngStream rng(5, 0);
  const auto s = srswor(pop, 2000, rng);
  CHECK(s.size() == 2000);
  for (const auto& u : s.units()) CHECK(u.weight == doctest::Approx(10.0));
  const auto all = srswor(pop, 20000, rng);
  CHECK(all.size() == 20000);
  CHECK(all[0].weight == 1.0);
  CHECK_THROWS_AS(srswor(pop, 0, rng), DataError);
  CHECK_THROWS_AS(srswor(pop, 20001, rng), DataError);
}

TEST_CASE("srswor selects uniformly") {
  PopulationSpec spec;
  spec.classes.push_back({3, 0.5, 0.5, 0.25, {}});
  const auto pop = generate_population(spec);
  RngStream rng(17, 0);
  std::array<int, 3> hits{};
  const int runs = 100000;
  for (int r = 0; r < runs; ++r) {
    const auto s = srswor(pop, 1, rng);
    for (std::size_t i = 0; i < 3; ++i) hits[i] += s[0].id == pop[i].id;
  }
  for (int h : hits) CHECK(std::abs(h / double(runs) - 1.0 / 3.0) < 0.01);
}

TEST_CASE("degenerate response mechanisms") {
  PopulationSpec spec;
  spec.classes.push_back({200, 0.5, 0.5, 0.25, {1.0, 0.0, 0.0, 0.0}});
  const auto pop = generate_population(spec);
  RngStream rng(1, 1);
  auto m = generate_response(pop, spec, rng);
  CHECK(m.observed == pop);
  spec.classes[0].phi = {0.0, 0.0, 0.0, 1.0};
  m = generate_response(pop, spec, rng);
  for (const auto& u : m.observed.units()) {
    CHECK_FALSE(u.x.has_value());
    CHECK_FALSE(u.y.has_value());
  }
  CHECK(m.unmask() == pop);
}

TEST_CASE("class 3 pattern frequencies") {
  PopulationSpec spec;
  spec.classes.push_back(table1_spec().classes[2]);
  spec.classes[0].size = 100000;
  const auto pop = generate_population(spec);
  RngStream rng(23, 0);
  const auto m = generate_response(pop, spec, rng);
  std::array<double, 4> freq{};  // rr, rm, mr, mm
  for (const auto& u : m.observed.units()) {
    const auto p = pattern_of(u);
    freq[p == patterns::rr ? 0 : p == patterns::rm ? 1 : p == patterns::mr ? 2 : 3] += 1e-5;
  }
  CHECK(std::abs(freq[0] - 0.30) < 0.005);
  CHECK(std::abs(freq[1] - 0.25) < 0.005);
  CHECK(std::abs(freq[2] - 0.25) < 0.005);
  CHECK(std::abs(freq[3] - 0.20) < 0.005);
  CHECK(m.unmask() == pop);
}

TEST_CASE("class without a mechanism") {
  PopulationSpec spec;
  spec.classes.push_back({10, 0.5, 0.5, 0.25, {}});
  PopulationSpec two = spec;
  two.classes.push_back({10, 0.5, 0.5, 0.25, {}});
  const auto pop = generate_population(two);
  RngStream rng(1, 0);
  CHECK_THROWS_AS(generate_response(pop, spec, rng), DataError);
}
