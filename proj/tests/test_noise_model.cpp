#include "doctest.h"

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "mixclean/error.hpp"
#include "mixclean/noise_model.hpp"

using namespace mixclean;
using doctest::Approx;

namespace {

std::size_t flips(const std::vector<int> &a, const std::vector<int> &b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    n += a[i] != b[i] ? 1 : 0;
  return n;
}

FeatureMatrix gaussian_features(std::size_t m, std::size_t d, Rng &rng) {
  std::vector<double> data(m * d);
  for (double &v : data)
    v = rng.normal();
  return {m, d, std::move(data)};
}

std::vector<int> round_robin(std::size_t m, int c) {
  std::vector<int> y(m);
  for (std::size_t i = 0; i < m; ++i)
    y[i] = static_cast<int>(i % static_cast<std::size_t>(c));
  return y;
}

} // namespace

TEST_SUITE("noise_model") {

TEST_CASE("full approximation") {
  Rng rng(1);
  const MixtureParams self = testing::random_params(3, 5, rng);
  const std::vector<MixtureParams> nb{testing::random_params(3, 5, rng),
                                      testing::random_params(3, 5, rng)};
  const CodingVector a{{0.25, 0.75}};
  SUBCASE("mu = 1 is the self mixture") {
    const auto d = approximate_noisy_distribution_full(self, nb, a, 1.0);
    CHECK(d.kind == NoisyLabelDistribution::Kind::MixtureForm);
    CHECK(d.marginal() == self.marginal());
  }
  SUBCASE("mu = 0 with one neighbour") {
    const std::vector<MixtureParams> one{nb[0]};
    const auto d =
        approximate_noisy_distribution_full(self, one, CodingVector{{1.0}}, 0.0);
    const auto m = d.marginal();
    const auto ref = nb[0].marginal();
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(m[c] == Approx(ref[c]).epsilon(1e-14));
  }
  SUBCASE("(K + 1) C components") {
    const auto d = approximate_noisy_distribution_full(self, nb, a, 0.5);
    CHECK(d.component_count() == 9);
    double total = 0.0;
    for (const auto &[w, p] : d.components)
      total += w;
    CHECK(total == Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("agrees with the simplified form on the N = 1 marginal") {
    const auto full = approximate_noisy_distribution_full(self, nb, a, 0.3);
    const std::vector<ProbabilityVector> nbm{nb[0].marginal(), nb[1].marginal()};
    const auto simple =
        approximate_noisy_distribution_simplified(self.marginal(), nbm, a, 0.3);
    const auto fm = full.marginal();
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(std::abs(fm[c] - simple.categorical[c]) < 1e-12);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS((void)approximate_noisy_distribution_full(
                        self, nb, CodingVector{{1.0}}, 0.5),
                    Error);
  }
}

TEST_CASE("simplified approximation") {
  SUBCASE("arithmetic example") {
    const std::vector<ProbabilityVector> nb{ProbabilityVector({0.0, 1.0}),
                                            ProbabilityVector({1.0, 0.0})};
    const auto d = approximate_noisy_distribution_simplified(
        ProbabilityVector({1.0, 0.0}), nb, CodingVector{{0.25, 0.75}}, 0.5);
    CHECK(d.categorical[0] == Approx(0.875));
    CHECK(d.categorical[1] == Approx(0.125));
  }
  SUBCASE("mu = 1 returns the self posterior") {
    const ProbabilityVector self({0.2, 0.8});
    const std::vector<ProbabilityVector> nb{ProbabilityVector({0.9, 0.1})};
    const auto d =
        approximate_noisy_distribution_simplified(self, nb, CodingVector{{1.0}}, 1.0);
    CHECK(d.categorical == self);
  }
  SUBCASE("identical posteriors are a fixed point") {
    const ProbabilityVector q({0.1, 0.6, 0.3});
    const std::vector<ProbabilityVector> nb{q, q, q};
    const auto d = approximate_noisy_distribution_simplified(
        q, nb, CodingVector{{0.2, 0.3, 0.5}}, 0.37);
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(d.categorical[c] == Approx(q[c]).epsilon(1e-15));
  }
}

TEST_CASE("sample_label_sets") {
  SUBCASE("one-hot categorical") {
    Rng rng(2);
    NoisyLabelDistribution d;
    d.categorical = ProbabilityVector::one_hot(3, 2);
    const auto sets = sample_label_sets(d, 5, 3, rng);
    REQUIRE(sets.size() == 3);
    for (const auto &x : sets)
      CHECK(x == CountVector({0, 0, 5}));
  }
  SUBCASE("pooled frequencies within three sigma") {
    Rng rng(3);
    NoisyLabelDistribution d;
    d.categorical = ProbabilityVector({0.2, 0.5, 0.3});
    const auto sets = sample_label_sets(d, 10, 5000, rng);
    std::vector<double> pooled(3, 0.0);
    for (const auto &x : sets)
      for (std::size_t c = 0; c < 3; ++c)
        pooled[c] += x[c];
    const double n = 50000.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double p = d.categorical[c];
      CHECK(std::abs(pooled[c] - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)));
    }
  }
  SUBCASE("warning below the bound") {
    Rng rng(4);
    NoisyLabelDistribution d;
    d.categorical = ProbabilityVector::uniform(3);
    std::vector<std::string> warnings;
    (void)sample_label_sets(d, 4, 2, rng, &warnings);
    CHECK(warnings.size() == 1);
    warnings.clear();
    (void)sample_label_sets(d, 5, 2, rng, &warnings);
    CHECK(warnings.empty());
  }
  SUBCASE("mixture sampling matches the flattened marginal") {
    Rng rng(5);
    const MixtureParams a(ProbabilityVector({0.6, 0.3, 0.1}),
                          TransitionMatrix::from_rows(
                              {{0.7, 0.2, 0.1}, {0.2, 0.6, 0.3}, {0.1, 0.2, 0.6}}),
                          1);
    const MixtureParams b(ProbabilityVector({0.2, 0.2, 0.6}),
                          TransitionMatrix::smoothed_identity(3, 0.3), 1);
    const std::vector<MixtureParams> nb{b};
    const auto d = approximate_noisy_distribution_full(a, nb, CodingVector{{1.0}}, 0.4);
    const auto sets = sample_label_sets(d, 1, 100000, rng);
    std::vector<long> counts(3, 0);
    for (const auto &x : sets)
      for (std::size_t c = 0; c < 3; ++c)
        counts[c] += x[c];
    const auto m = d.marginal();
    CHECK(oracle::chi_square(counts, {m[0], m[1], m[2]}) <
          oracle::chi_square_critical_999(2));
  }
  SUBCASE("deterministic given the seed") {
    NoisyLabelDistribution d;
    d.categorical = ProbabilityVector({0.3, 0.7});
    Rng a(6);
    Rng b(6);
    CHECK(sample_label_sets(d, 3, 50, a) == sample_label_sets(d, 3, 50, b));
  }
}

TEST_CASE("inject_noise") {
  Rng rng(7);
  SUBCASE("rate zero is the identity") {
    const auto y = round_robin(500, 4);
    const FeatureMatrix f = gaussian_features(500, 2, rng);
    for (NoiseKind kind :
         {NoiseKind::Symmetric, NoiseKind::Asymmetric, NoiseKind::InstanceDependent})
      CHECK(inject_noise(y, f, NoiseSpec{.kind = kind, .rate = 0.0, .classes = 4}) == y);
  }
  SUBCASE("symmetric rate on 1e5 samples") {
    const auto y = round_robin(100000, 10);
    const FeatureMatrix f = gaussian_features(100000, 1, rng);
    const auto z =
        inject_noise(y, f, NoiseSpec{.rate = 0.5, .seed = 3, .classes = 10});
    CHECK(std::abs(static_cast<double>(flips(y, z)) / 1e5 - 0.5) < 0.01);
    for (int v : z)
      CHECK((v >= 0 && v < 10));
  }
  SUBCASE("asymmetric flips to the next class") {
    const auto y = round_robin(2000, 3);
    const FeatureMatrix f = gaussian_features(2000, 1, rng);
    const auto z = inject_noise(
        y, f, NoiseSpec{.kind = NoiseKind::Asymmetric, .rate = 0.3, .classes = 3});
    for (std::size_t i = 0; i < y.size(); ++i)
      if (z[i] != y[i])
        CHECK(z[i] == (y[i] + 1) % 3);
  }
  SUBCASE("instance-dependent hits the target rate") {
    const auto y = round_robin(3000, 4);
    const FeatureMatrix f = gaussian_features(3000, 5, rng);
    for (double rate : {0.1, 0.25, 0.45}) {
      const auto z = inject_noise(y, f,
                                  NoiseSpec{.kind = NoiseKind::InstanceDependent,
                                            .rate = rate,
                                            .seed = 9,
                                            .classes = 4});
      CHECK(std::abs(static_cast<double>(flips(y, z)) / 3000.0 - rate) <= 0.02);
      CHECK(z == inject_noise(y, f,
                              NoiseSpec{.kind = NoiseKind::InstanceDependent,
                                        .rate = rate,
                                        .seed = 9,
                                        .classes = 4}));
    }
  }
  SUBCASE("invalid inputs") {
    const FeatureMatrix f = gaussian_features(3, 1, rng);
    const std::vector<int> bad{0, 1, 5};
    CHECK_THROWS_AS((void)inject_noise(bad, f, NoiseSpec{.rate = 0.1, .classes = 3}),
                    Error);
    const std::vector<int> ok{0, 1, 2};
    CHECK_THROWS_AS((void)inject_noise(ok, f, NoiseSpec{.rate = 1.0, .classes = 3}),
                    Error);
  }
}

TEST_CASE("non-identifiability demonstration") {
  const auto r = nonidentifiability_demo();
  const std::vector<double> target{0.25, 0.45, 0.3};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(r.marginal_a[i] - target[i]) < 1e-12);
    CHECK(std::abs(r.marginal_b[i] - target[i]) < 1e-12);
  }
  CHECK(r.gap < 1e-12);
  CHECK(r.transition_a(1, 0) == 0.15);
  CHECK(r.transition_b(2, 2) == 0.8);
  CHECK_FALSE(r.transition_a == r.transition_b);
}

} // TEST_SUITE
