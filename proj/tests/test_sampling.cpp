#include <doctest.h>

#include <set>

#include "support.hpp"

using namespace subboot;

TEST_SUITE("sampling") {

TEST_CASE("srswr edge cases") {
  Stream s(1);
  CHECK(srswr(10, 0, s).empty());
  CHECK(srswr(1, 5, s) == IndexSample{0, 0, 0, 0, 0});
  CHECK_THROWS_AS(srswr(0, 3, s), InvalidArgument);
  CHECK_THROWS_AS(srswr(3, -1, s), InvalidArgument);
}

TEST_CASE("srswr frequencies are uniform") {
  Stream s = SeedSpec{42}.stream(0, 0);
  const auto idx = srswr(4, 1000000, s);
  std::array<double, 4> freq{};
  for (Index i : idx) {
    REQUIRE(i >= 0);
    REQUIRE(i < 4);
    freq[static_cast<std::size_t>(i)] += 1.0;
  }
  for (double f : freq) CHECK(std::abs(f / 1e6 - 0.25) < 0.002);
}

TEST_CASE("streams are reproducible and keyed by (r, b)") {
  const SeedSpec seed{7};
  Stream a = seed.stream(3, 4), b = seed.stream(3, 4);
  for (int i = 0; i < 100; ++i) REQUIRE(a() == b());
  CHECK(seed.key(3, 4) != seed.key(4, 3));
  CHECK(seed.key(0, 1) != seed.key(1, 0));
  CHECK(SeedSpec{7}.key(0, 0) != SeedSpec{8}.key(0, 0));

  const Index m = 200000;
  Stream x = seed.stream(0, 0), y = seed.stream(0, 1);
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (Index i = 0; i < m; ++i) {
    const double u = x.uniform01(), v = y.uniform01();
    sx += u;
    sy += v;
    sxy += u * v;
    sxx += u * u;
    syy += v * v;
  }
  const double M = static_cast<double>(m);
  const double corr = (sxy / M - sx / M * sy / M) /
                      std::sqrt((sxx / M - sx * sx / (M * M)) * (syy / M - sy * sy / (M * M)));
  CHECK(std::abs(corr) < 4.0 / std::sqrt(M));
}

TEST_CASE("below is unbiased for a non power of two") {
  Stream s(9);
  std::array<double, 3> freq{};
  for (int i = 0; i < 300000; ++i) freq[s.below(3)] += 1.0;
  for (double f : freq) CHECK(std::abs(f / 300000.0 - 1.0 / 3.0) < 0.004);
}

TEST_CASE("multinomial shapes") {
  Stream s(3);
  const auto one = multinomial_weights(1, 7, s);
  REQUIRE(one.size() == 1);
  CHECK(one(0) == 7);
  CHECK(multinomial_weights(5, 100, s).sum() == 100);
  CHECK_THROWS_AS(multinomial_weights(0, 10, s), InvalidArgument);
  CHECK_THROWS_AS(multinomial_weights(11, 10, s), InvalidArgument);
}

// Per-cell mean N/n and variance N (1/n)(1 - 1/n), plus conservation.
void check_multinomial_moments(Index n, Index N, int repeats, double mean_tol, double var_rel_tol) {
  const MultinomialSampler sampler(n, N);
  Stream s = SeedSpec{static_cast<std::uint64_t>(n * 1000 + N)}.stream(0, 0);
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(n), sq = Eigen::ArrayXd::Zero(n);
  WeightVector w;
  for (int r = 0; r < repeats; ++r) {
    sampler.draw_into(s, w);
    REQUIRE(w.sum() == N);
    REQUIRE(w.minCoeff() >= 0);
    const Eigen::ArrayXd x = w.cast<double>().array();
    sum += x;
    sq += x * x;
  }
  const double R = repeats;
  const Eigen::ArrayXd mean = sum / R;
  const Eigen::ArrayXd var = (sq - R * mean * mean) / (R - 1);
  const double p = 1.0 / static_cast<double>(n);
  const double expected_var = static_cast<double>(N) * p * (1 - p);
  CHECK((mean - static_cast<double>(N) * p).abs().maxCoeff() < mean_tol);
  CHECK(std::abs(var.mean() / expected_var - 1.0) < var_rel_tol);
}

TEST_CASE("multinomial moments, n = 4, N = 1000") { check_multinomial_moments(4, 1000, 10000, 2.0, 0.05); }

TEST_CASE("multinomial moments on every sampler path") {
  SUBCASE("alias table") {
    CHECK(MultinomialSampler(316, 10000).lambda() > 1.0);
    check_multinomial_moments(316, 10000, 4000, 1.0, 0.03);
  }
  SUBCASE("ball by ball") {
    CHECK(MultinomialSampler(100, 100).lambda() == 0.0);
    check_multinomial_moments(100, 100, 20000, 0.05, 0.03);
  }
  SUBCASE("large lambda") {
    CHECK(MultinomialSampler(2, 100000).lambda() > 4096.0);
    check_multinomial_moments(2, 100000, 20000, 6.0, 0.05);
  }
}

TEST_CASE("multinomial draws are deterministic given the stream") {
  const MultinomialSampler sampler(50, 5000);
  Stream a = SeedSpec{5}.stream(1, 2), b = SeedSpec{5}.stream(1, 2);
  for (int i = 0; i < 20; ++i) REQUIRE(sampler.draw(a) == sampler.draw(b));
}

TEST_CASE("Poisson table matches the Poisson law") {
  for (double lambda : {1.5, 31.6, 300.0}) {
    const PoissonTable table(lambda);
    Stream s(11);
    const int m = 400000;
    double sum = 0, sq = 0;
    for (int i = 0; i < m; ++i) {
      const double k = static_cast<double>(table(s));
      sum += k;
      sq += k * k;
    }
    const double mean = sum / m, var = sq / m - mean * mean;
    CHECK(std::abs(mean - lambda) < 4.0 * std::sqrt(lambda / m));
    CHECK(std::abs(var / lambda - 1.0) < 0.02);
  }
}

}  // TEST_SUITE
