#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <vector>

#include "hotdeck/rng.hpp"

using hotdeck::RngStream;

TEST_CASE("same seed and stream give the same sequence") {
  RngStream a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different streams diverge") {
  RngStream a(42, 0), b(42, 1);
  int same = 0;
  for (int i = 0; i < 50; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);
}

TEST_CASE("derive ignores how far the parent has advanced") {
  RngStream a(7, 2);
  RngStream b(7, 2);
  for (int i = 0; i < 17; ++i) b.uniform();
  RngStream ca = a.derive(5), cb = b.derive(5);
  for (int i = 0; i < 20; ++i) CHECK(ca.next_u64() == cb.next_u64());
  RngStream other = a.derive(6);
  CHECK(other.next_u64() != a.derive(5).next_u64());
}

TEST_CASE("uniform stays in [0,1) with mean near one half") {
  RngStream r(1, 0);
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
  }
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(r.draws() == static_cast<std::uint64_t>(n));
}

TEST_CASE("below is uniform over its range") {
  RngStream r(9, 0);
  std::array<int, 3> counts{};
  const int n = 300000;
  for (int i = 0; i < n; ++i) {
    const auto v = r.below(3);
    REQUIRE(v < 3);
    ++counts[v];
  }
  for (int c : counts) CHECK(static_cast<double>(c) / n == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("categorical follows its weights and skips zeros") {
  RngStream r(11, 4);
  const std::vector<double> p{0.2, 0.0, 0.5, 0.3};
  std::array<int, 4> counts{};
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[r.categorical(p)];
  CHECK(counts[1] == 0);
  CHECK(counts[0] / double(n) == doctest::Approx(0.2).epsilon(0.03));
  CHECK(counts[2] / double(n) == doctest::Approx(0.5).epsilon(0.03));
  CHECK(counts[3] / double(n) == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("a point mass is always drawn") {
  RngStream r(3, 3);
  const std::vector<double> p{0.0, 1.0};
  for (int i = 0; i < 1000; ++i) CHECK(r.categorical(p) == 1);
}
