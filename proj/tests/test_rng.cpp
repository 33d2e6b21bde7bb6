#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "mixclean/parallel.hpp"
#include "mixclean/rng.hpp"

using namespace mixclean;
using doctest::Approx;

TEST_SUITE("rng") {

TEST_CASE("same seed, same stream") {
  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 100; ++i)
    CHECK(a.next_u64() == b.next_u64());
  Rng c(6);
  CHECK(Rng(5).next_u64() != c.next_u64());
}

TEST_CASE("derived streams are distinct") {
  std::set<std::uint64_t> keys;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b)
      keys.insert(derive_seed(17, a, b));
  CHECK(keys.size() == 2500);
  CHECK(derive_seed(17, 1, 2) == derive_seed(17, 1, 2));
}

TEST_CASE("uniform and bounded integers") {
  Rng rng(8);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == Approx(0.5).epsilon(0.01));
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++hits[v];
  }
  for (int h : hits)
    CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("normal and gamma moments") {
  Rng rng(9);
  const int n = 200000;
  double m = 0.0;
  double v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    m += x;
    v += x * x;
  }
  CHECK(std::abs(m / n) < 0.01);
  CHECK(v / n == Approx(1.0).epsilon(0.02));
  for (double shape : {0.5, 1.0, 3.0}) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      REQUIRE(g >= 0.0);
      s += g;
    }
    CHECK(s / n == Approx(shape).epsilon(0.02));
  }
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> seen(1000, 0);
  parallel_for(seen.size(), 4, [&](std::size_t i) { seen[i] += 1; });
  for (int s : seen)
    CHECK(s == 1);
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [](std::size_t i) {
                                 if (i == 37)
                                   throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  CHECK(resolve_threads(0) >= 1);
  CHECK(resolve_threads(3) == 3);
}

} // TEST_SUITE
