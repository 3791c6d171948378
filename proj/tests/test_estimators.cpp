#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "hotdeck/errors.hpp"
#include "hotdeck/estimators.hpp"
#include "oracle.hpp"

using namespace hotdeck;

namespace {

Unit unit(std::string id, int cls, Category x, Category y, double w = 1.0) {
  Unit u;
  u.id = std::move(id);
  u.cls = cls;
  u.x = x;
  u.y = y;
  u.weight = w;
  return u;
}

constexpr auto none = std::nullopt;

// Largest absolute difference between a library table and an oracle table.
double gap(const ProportionTable& t, const oracle::Table& o) {
  double m = 0.0;
  for (int k = 0; k < o.K; ++k) {
    for (int l = 0; l < o.L; ++l) m = std::max(m, std::abs(t.joint(k, l) - o.joint[static_cast<std::size_t>(k * o.L + l)]));
    m = std::max(m, std::abs(t.marginal_x(k) - o.mx[static_cast<std::size_t>(k)]));
  }
  for (int l = 0; l < o.L; ++l) m = std::max(m, std::abs(t.marginal_y(l) - o.my[static_cast<std::size_t>(l)]));
  return m;
}

}  // namespace

TEST_CASE("horvitz-thompson on small tables") {
  SurveyDataset d({unit("a", 1, 1, 1), unit("b", 1, 1, 0), unit("c", 1, 0, 1), unit("d", 1, 0, 0)}, 4, {});
  const auto t = ht_proportions(d, 4);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) CHECK(t.joint(k, l) == doctest::Approx(0.25));
  SurveyDataset one({unit("a", 1, 1, 0, 9.0)}, 9, {});
  const auto s = ht_proportions(one, 9);
  CHECK(s.joint(1, 0) == 1.0);
  CHECK(s.joint(0, 0) == 0.0);
  CHECK(imputed_proportions(d, 4).joint(1, 1) == t.joint(1, 1));
}

TEST_CASE("census of the simulated population") {
  const auto pop = generate_population(table1_spec());
  const auto t = ht_proportions(pop, pop.population_size());
  CHECK(t.joint(1, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(t.marginal_x(1) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("class conditionals from complete cases") {
  SurveyDataset d({unit("a", 1, 1, 1), unit("b", 1, 1, 1), unit("c", 1, 0, 1), unit("d", 1, 1, 0),
                   unit("e", 1, none, 1)},
                  5, {});
  const auto c = cell_estimates(d);
  CHECK(c.x_given_y(1, 1, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(c.of_class(1).joint_cc[3] == doctest::Approx(0.5));
  CHECK_FALSE(c.any_fallback());
}

TEST_CASE("all complete cases with x = 0") {
  SurveyDataset d({unit("a", 1, 0, 1), unit("b", 1, 0, 0), unit("c", 1, none, 1)}, 3, {});
  const auto c = cell_estimates(d);
  CHECK(c.x_given_y(1, 1, 0) == 0.0);
  CHECK(c.x_given_y(1, 1, 1) == 0.0);
}

TEST_CASE("an empty conditioning cell falls back to the class marginal") {
  SurveyDataset d({unit("a", 1, 1, 0), unit("b", 1, 0, 0), unit("c", 1, 1, 0), unit("d", 1, none, 1)}, 4, {});
  const auto c = cell_estimates(d);
  const auto& cls = c.of_class(1);
  CHECK(cls.x_given_y_level[1] == Fallback::class_marginal);
  CHECK(c.x_given_y(1, 1, 1) == doctest::Approx(cls.x_cc[1]));
  CHECK(c.x_given_y(1, 1, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(c.any_fallback());
}

TEST_CASE("a class without complete cases borrows from the pool") {
  SurveyDataset d({unit("a", 1, 1, 1), unit("b", 1, 0, 0), unit("c", 2, none, 1), unit("d", 2, 1, none)}, 4, {});
  const auto c = cell_estimates(d);
  CHECK(c.of_class(2).worst_level() == Fallback::pooled);
  CHECK(c.x_given_y(2, 1, 1) == doctest::Approx(1.0));
}

TEST_CASE("nothing to borrow raises unless uniform is allowed") {
  SurveyDataset d({unit("a", 1, none, 1), unit("b", 1, 0, none)}, 2, {});
  CHECK_THROWS_AS(cell_estimates(d), NoDonorError);
  const auto c = cell_estimates(d, CellEstimateOptions{true});
  CHECK(c.of_class(1).worst_level() == Fallback::uniform);
  CHECK(c.x_given_y(1, 0, 1) == doctest::Approx(0.5));
}

TEST_CASE("full response makes every family coincide") {
  std::mt19937_64 gen(99);
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = oracle::random_fixture(gen, 20, false);
    const auto N = d.population_size();
    const auto ht = ht_proportions(d, N);
    // cc and ac use N-hat as the denominator, acc/aac/tilde use N
    const double scale = [&] {
      double s = 0.0;
      for (const auto& u : d.units()) s += u.weight;
      return s / static_cast<double>(N);
    }();
    const auto tilde = tilde_estimators(d, N);
    const auto acc = acc_estimators(d, N);
    const auto aac = aac_estimators(d, N);
    const auto cc = cc_estimators(d);
    const auto ac = ac_estimators(d);
    for (int k = 0; k < d.K(); ++k) {
      for (int l = 0; l < d.L(); ++l) {
        CHECK(tilde.joint(k, l) == doctest::Approx(ht.joint(k, l)).epsilon(1e-12));
        CHECK(acc.joint(k, l) == doctest::Approx(ht.joint(k, l)).epsilon(1e-12));
        CHECK(aac.joint(k, l) == doctest::Approx(ht.joint(k, l)).epsilon(1e-12));
        CHECK(cc.joint(k, l) * scale == doctest::Approx(ht.joint(k, l)).epsilon(1e-12));
        CHECK(ac.joint(k, l) * scale == doctest::Approx(ht.joint(k, l)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("one class, population size equal to the weight total") {
  SurveyDataset d({unit("a", 1, 1, 1), unit("b", 1, 0, 1), unit("c", 1, 1, 0), unit("d", 1, 1, none),
                   unit("e", 1, none, 0), unit("f", 1, none, none)},
                  6, {});
  const auto cc = cc_estimators(d), acc = acc_estimators(d, 6);
  const auto ac = ac_estimators(d), aac = aac_estimators(d, 6);
  for (int k = 0; k < 2; ++k) {
    CHECK(acc.marginal_x(k) == doctest::Approx(cc.marginal_x(k)));
    CHECK(aac.marginal_x(k) == doctest::Approx(ac.marginal_x(k)));
    CHECK(aac.marginal_y(k) == doctest::Approx(ac.marginal_y(k)));
  }
  CHECK(ac.marginal_x(1) == doctest::Approx(0.75));  // 3 of 4 x-respondents
  CHECK(ac.marginal_y(1) == doctest::Approx(0.5));   // 2 of 4 y-respondents
  CHECK(cc.joint(1, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("estimator preconditions") {
  SurveyDataset d({unit("a", 1, none, 1), unit("b", 1, 0, none)}, 2, {});
  CHECK_THROWS_AS(cc_estimators(d), DataError);
  CHECK_THROWS_AS(acc_estimators(d, 2), DataError);
  SurveyDataset e({unit("a", 1, 1, 1), unit("b", 1, none, none)}, 2, {});
  CHECK_NOTHROW(ac_estimators(e));
}

TEST_CASE("tilde on a three-unit hand fixture") {
  SurveyDataset d({unit("a", 1, 1, 1), unit("b", 1, 0, 0), unit("c", 1, none, 1)}, 3, {});
  const auto t = tilde_estimators(d, 3);
  CHECK(t.joint(1, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(t.joint(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(t.joint(1, 0) == doctest::Approx(0.0));
  CHECK(t.marginal_x(1) == doctest::Approx(2.0 / 3.0));
  CHECK(t.marginal_y(1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("plug-in odds ratio") {
  auto t = ProportionTable::from_joint(2, 2, {0.2, 0.3, 0.3, 0.2});
  CHECK(or_plugin(t) == doctest::Approx(4.0 / 9.0));
  auto zero = ProportionTable::from_joint(2, 2, {0.5, 0.0, 0.0, 0.5});
  CHECK_THROWS_AS(or_plugin(zero), DataError);
}

TEST_CASE("closed-form biases under the simulated mechanism") {
  const auto spec = table1_spec();
  const auto truth = population_parameters(spec);
  const auto rhdi = bias_rhdi(spec);
  CHECK(rhdi.joint(1, 1) == doctest::Approx(-0.0148).epsilon(1e-9));
  CHECK(100.0 * rhdi.joint(1, 1) / truth.p11 == doctest::Approx(-3.70).epsilon(1e-6));
  CHECK(rhdi.marginal_x(1) == doctest::Approx(0.0));
  const auto cc = bias_cc(spec);
  CHECK(cc.marginal_x(1) == doctest::Approx(0.0333).epsilon(0.002));
  CHECK(100.0 * cc.marginal_x(1) / truth.p1dot == doctest::Approx(5.56).epsilon(0.001));
  CHECK(100.0 * cc.joint(1, 1) / truth.p11 == doctest::Approx(16.7).epsilon(0.002));
  const auto ac = bias_ac(spec);
  CHECK(ac.marginal_x(1) == doctest::Approx(0.0196).epsilon(0.002));
  CHECK(100.0 * ac.marginal_x(1) / truth.p1dot == doctest::Approx(3.27).epsilon(0.001));
}

TEST_CASE("rhdi bias vanishes without single-item nonresponse") {
  auto spec = table1_spec();
  for (auto& c : spec.classes) c.phi = {0.6, 0.0, 0.0, 0.4};
  const auto b = bias_rhdi(spec);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) CHECK(std::abs(b.joint(k, l)) < 1e-15);
}

TEST_CASE("direct-summation equivalence on random fixtures") {
  std::mt19937_64 gen(2024);
  int compared_cc = 0, compared_acc = 0, compared_tilde = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto d = oracle::random_fixture(gen);
    const auto N = d.population_size();
    if (auto o = oracle::cc(d)) {
      CHECK(gap(cc_estimators(d), *o) < 1e-12);
      ++compared_cc;
    }
    if (auto o = oracle::ac(d)) CHECK(gap(ac_estimators(d), *o) < 1e-12);
    if (auto o = oracle::acc(d, N)) {
      CHECK(gap(acc_estimators(d, N), *o) < 1e-12);
      ++compared_acc;
    }
    if (auto o = oracle::aac(d, N)) CHECK(gap(aac_estimators(d, N), *o) < 1e-12);
    if (auto o = oracle::tilde(d, N)) {
      CHECK(gap(tilde_estimators(d, N), *o) < 1e-12);
      ++compared_tilde;
    }
    const auto full = oracle::random_fixture(gen, 20, false);
    CHECK(gap(ht_proportions(full, full.population_size()), oracle::ht(full, full.population_size())) < 1e-12);
  }
  CHECK(compared_cc > 900);
  CHECK(compared_acc > 300);
  CHECK(compared_tilde > 300);
}

TEST_CASE("tilde marginals agree with the tilde joint") {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 500; ++rep) {
    const auto d = oracle::random_fixture(gen);
    ProportionTable t;
    try {
      t = tilde_estimators(d, d.population_size());
    } catch (const NoDonorError&) {
      continue;
    }
    for (int k = 0; k < t.K(); ++k) {
      double s = 0.0;
      for (int l = 0; l < t.L(); ++l) s += t.joint(k, l);
      CHECK(std::abs(s - t.marginal_x(k)) < 1e-12);
    }
    for (int l = 0; l < t.L(); ++l) {
      double s = 0.0;
      for (int k = 0; k < t.K(); ++k) s += t.joint(k, l);
      CHECK(std::abs(s - t.marginal_y(l)) < 1e-12);
    }
  }
}
