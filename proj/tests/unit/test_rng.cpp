#include <stdexcept>
#include <cmath>
#include <set>

#include "doctest.h"
#include "spikelink/rng.hpp"

using spikelink::Rng;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("split does not depend on stream position") {
  Rng a(7);
  Rng early = a.split("channel");
  for (int i = 0; i < 1000; ++i) a.next_u64();
  Rng late = a.split("channel");
  CHECK(early.seed() == late.seed());
  CHECK(a.split("channel").seed() != a.split("attention").seed());
  CHECK(a.split(std::uint64_t{0}).seed() != a.split(std::uint64_t{1}).seed());
}

TEST_CASE("uniform and normal moments") {
  Rng r(1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below covers its range") {
  Rng r(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.below(5);
    REQUIRE(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
  CHECK_THROWS(r.below(0));
}

TEST_CASE("bernoulli extremes are exact") {
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(r.bernoulli(0.0));
    CHECK(r.bernoulli(1.0));
  }
}

TEST_CASE("fnv1a reference values") {
  CHECK(spikelink::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(spikelink::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
