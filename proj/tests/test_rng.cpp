#include <array>
#include <cmath>
#include <set>

#include "articulab/rng.hpp"
#include "doctest.h"

using namespace articulab;

TEST_CASE("identical seeds replay the identical stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("seed_stream separates tags and arguments") {
  std::set<uint64_t> seen;
  seen.insert(seed_stream("alpha", 0));
  seen.insert(seed_stream("beta", 0));
  seen.insert(seed_stream("alpha", 1));
  seen.insert(seed_stream("alpha", 0, 1));
  seen.insert(seed_stream("alpha", 1, 0));
  CHECK(seen.size() == 5);
  CHECK(seed_stream("alpha", 3, 7) == seed_stream("alpha", 3, 7));
}

TEST_CASE("uniform stays in [0,1) with the right first two moments") {
  Rng rng(seed_stream("test-rng", 1));
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  // 3 sigma for the mean of n uniforms: 3/sqrt(12 n).
  CHECK(std::abs(mean - 0.5) < 3.0 / std::sqrt(12.0 * n));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.05));
}

TEST_CASE("normal matches N(0,1) moments") {
  Rng rng(seed_stream("test-rng", 2));
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  double mean = sum / n;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("uniform_int covers both inclusive endpoints uniformly") {
  Rng rng(seed_stream("test-rng", 3));
  std::array<int, 5> counts{};
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    int64_t v = rng.uniform_int(2, 6);
    REQUIRE(v >= 2);
    REQUIRE(v <= 6);
    counts[v - 2]++;
  }
  // Multinomial 3 sigma around n/5.
  double expect = n / 5.0;
  double band = 3.0 * std::sqrt(expect * 0.8);
  for (int c : counts) CHECK(std::abs(c - expect) < band);
}

TEST_CASE("bernoulli frequency tracks p") {
  Rng rng(seed_stream("test-rng", 4));
  const int n = 40000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3);
  double band = 3.0 * std::sqrt(n * 0.3 * 0.7);
  CHECK(std::abs(hits - n * 0.3) < band);
}

TEST_CASE("uniform(lo,hi) respects bounds") {
  Rng rng(seed_stream("test-rng", 5));
  for (int i = 0; i < 1000; ++i) {
    double v = rng.uniform(-2.5, 4.0);
    REQUIRE(v >= -2.5);
    REQUIRE(v < 4.0);
  }
}
