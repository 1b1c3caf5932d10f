#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "adtheme/rng.hpp"

using namespace adtheme;

TEST_CASE("fnv1a64 matches the published reference vectors") {
  // Reference vectors from the FNV specification.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("same seed replays the same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("named sub-streams are independent of each other") {
  Rng split = Rng::stream(7, "split");
  Rng init = Rng::stream(7, "init");
  Rng split2 = Rng::stream(7, "split");
  bool all_equal = true;
  for (int i = 0; i < 10; ++i) {
    std::uint64_t s = split.next();
    if (s != init.next()) all_equal = false;
    CHECK(s == split2.next());
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("below stays in range and covers all residues") {
  Rng r(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    std::uint64_t v = r.below(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  // Expected 10000 per bucket, stddev ~sqrt(10000*6/7) ~ 93; allow 6 sigma.
  for (int c : counts) CHECK(std::abs(c - 10000) < 560);
}

TEST_CASE("unit is in [0,1) with a sane mean") {
  Rng r(2);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double u = r.unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("normal has roughly standard moments") {
  Rng r(3);
  double sum = 0.0, sum2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(1.0).scale(0.05));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("trunc_normal_f32 is clamped and float32-exact") {
  Rng r(4);
  for (int i = 0; i < 1000; ++i) {
    double x = r.trunc_normal_f32(0.02);
    CHECK(std::abs(x) <= 0.04);
    CHECK(x == static_cast<double>(static_cast<float>(x)));
  }
}

TEST_CASE("shuffle permutes deterministically") {
  std::vector<int> v(20);
  for (int i = 0; i < 20; ++i) v[static_cast<std::size_t>(i)] = i;
  std::vector<int> w = v;
  Rng a(9), b(9);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  // 20 elements virtually never shuffle to identity.
  std::vector<int> ident(20);
  for (int i = 0; i < 20; ++i) ident[static_cast<std::size_t>(i)] = i;
  CHECK(v != ident);
}
