#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "hotdeck/errors.hpp"
#include "hotdeck/estimators.hpp"
#include "hotdeck/harness.hpp"

using namespace hotdeck;

TEST_CASE("relative bias and efficiency") {
  const std::vector<double> exact(10, 0.4);
  CHECK(std::abs(relative_bias(exact, 0.4)) < 1e-12);
  const std::vector<double> high{0.4148};
  CHECK(relative_bias(high, 0.4) == doctest::Approx(3.7));
  CHECK(relative_efficiency(2.0, 2.0) == 100.0);
  CHECK(relative_efficiency(1.0, 4.0) == 25.0);
  CHECK_THROWS_AS(relative_bias(high, 0.0), DataError);
  CHECK_THROWS_AS(relative_efficiency(1.0, 0.0), DataError);
}

TEST_CASE("estimator names") {
  CHECK(parse_estimator("bhdi") == Estimator::bhdi);
  CHECK(parse_estimator("AAC") == Estimator::aac);
  CHECK(std::string(to_string(Estimator::jhdi)) == "JHDI");
  CHECK_THROWS_AS(parse_estimator("mice"), DataError);
}

TEST_CASE("config parsing") {
  const auto cfg = parse_study_config(R"({"n": 500, "replicates": 40, "estimators": ["cc", "jhdi"],
                                          "seed": 9, "threads": 2, "bootstrap": {"replicates": 100, "alpha": 0.05}})");
  CHECK(cfg.n == 500);
  CHECK(cfg.replicates == 40);
  CHECK(cfg.seed == 9);
  CHECK(cfg.threads == 2);
  CHECK(cfg.bootstrap.replicates == 100);
  CHECK(cfg.bootstrap.alpha == 0.05);
  REQUIRE(cfg.estimators.size() == 3);
  CHECK(cfg.estimators[2] == Estimator::aac);
  CHECK(cfg.spec.classes.size() == 5);

  const auto inline_spec = parse_study_config(
      R"({"spec": {"classes": [{"N": 100, "p1dot": 0.5, "pdot1": 0.5, "p11": 0.25,
                                 "phi": {"rr": 1, "rm": 0, "mr": 0, "mm": 0}}]}, "n": 10})");
  CHECK(inline_spec.spec.total_size() == 100);

  CHECK_THROWS_AS(parse_study_config("{\"n\": 1}"), DataError);
  CHECK_THROWS_AS(parse_study_config("{\"n\": 30000}"), DataError);
  CHECK_THROWS_AS(parse_study_config("{\"estimators\": [\"knn\"]}"), DataError);
  CHECK_THROWS_AS(parse_study_config("[1,"), DataError);
  CHECK_THROWS_AS(load_study_config("/nonexistent/study.json"), DataError);
}

TEST_CASE("spec path relative to the config file") {
  const auto dir = std::filesystem::temp_directory_path() / "hotdeck_cfg_test";
  std::filesystem::create_directories(dir);
  save_population_spec(dir / "pop.json", table1_spec());
  std::ofstream(dir / "study.json") << R"({"spec": "pop.json", "n": 100, "replicates": 5})";
  const auto cfg = load_study_config(dir / "study.json");
  CHECK(cfg.spec.total_size() == 20000);
  std::filesystem::remove_all(dir);
}

TEST_CASE("full response: every estimator unbiased and equally efficient") {
  StudyConfig cfg;
  for (auto& c : cfg.spec.classes) c.phi = {1.0, 0.0, 0.0, 0.0};
  cfg.n = 500;
  cfg.replicates = 200;
  cfg.threads = 1;
  const auto report = run_point_study(cfg);
  CHECK(report.failed_replicates == 0);
  for (const auto& row : report.rows) {
    if (row.parameter == Parameter::odds_ratio) continue;
    // MC error of a mean over 200 samples of n = 500 is well under 1%
    CHECK(std::abs(row.rb) < 1.5);
    CHECK(row.re == doctest::Approx(100.0).epsilon(1e-9));
  }
}

TEST_CASE("reports do not depend on the thread count") {
  StudyConfig cfg;
  cfg.n = 300;
  cfg.replicates = 12;
  cfg.threads = 1;
  const auto one = run_point_study(cfg);
  cfg.threads = 3;
  const auto three = run_point_study(cfg);
  CHECK(point_report_csv(one) == point_report_csv(three));
  CHECK(point_report_json(one, cfg) == point_report_json(three, cfg));

  cfg.replicates = 6;
  cfg.truth_replicates = 20;
  cfg.bootstrap.replicates = 40;
  cfg.threads = 1;
  const auto v1 = run_variance_study(cfg);
  cfg.threads = 4;
  const auto v4 = run_variance_study(cfg);
  CHECK(variance_report_csv(v1) == variance_report_csv(v4));
}

TEST_CASE("masked samples are reproducible per replicate") {
  const auto spec = table1_spec();
  const auto pop = generate_population(spec);
  auto a = study_stream(3, 0, 17), b = study_stream(3, 0, 17);
  const auto sa = draw_masked_sample(pop, spec, 100, a);
  const auto sb = draw_masked_sample(pop, spec, 100, b);
  CHECK(sa.observed == sb.observed);
  CHECK(sa.truth == sb.truth);
}

TEST_CASE("point estimates on a sample") {
  const auto spec = table1_spec();
  const auto pop = generate_population(spec);
  auto rng = study_stream(1, 0, 0);
  const auto s = draw_masked_sample(pop, spec, 2000, rng);
  const auto acc = point_estimates(Estimator::acc, s.observed, rng.derive(2));
  const auto table = acc_estimators(s.observed, 20000);
  CHECK(acc[2] == table.joint(1, 1));
  CHECK(acc[3] == doctest::Approx(or_plugin(table)));
  const auto ac = point_estimates(Estimator::ac, s.observed, rng.derive(2));
  CHECK(ac[0] == ac_estimators(s.observed).marginal_x(1));
}

TEST_CASE("simulated random hot-deck bias matches its closed form") {
  StudyConfig cfg;
  cfg.estimators = {Estimator::rhdi, Estimator::aac};
  cfg.replicates = 2000;
  cfg.threads = 1;
  const auto report = run_point_study(cfg);
  const auto& row = report.at(Estimator::rhdi, Parameter::p11);
  const double se = std::sqrt((row.mse - std::pow(row.mean - row.truth, 2)) / static_cast<double>(row.count));
  const double expected = bias_rhdi(cfg.spec).joint(1, 1);
  CHECK(std::abs((row.mean - row.truth) - expected) < 3.0 * se);
}

TEST_CASE("parallel_for visits each index once and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                    if (i == 7) throw DataError("boom");
                  }),
                  DataError);
}
