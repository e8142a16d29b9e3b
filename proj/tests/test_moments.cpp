#include <doctest.h>

#include "support.hpp"

using namespace subboot;
using testing::column;

namespace {

MomentConstants<double> univariate(double s2, double s4) {
  MomentConstants<double> m;
  m.N = 100;
  m.sigma = Matrix<double>::Constant(1, 1, s2);
  m.sigma2 = Matrix<double>::Constant(1, 1, s4);
  return m;
}

}  // namespace

TEST_SUITE("moments") {

TEST_CASE("central moments use divisor N") {
  const auto a = central_moments(column({-1, 1}));
  CHECK(a.sigma_sq() == doctest::Approx(1.0));
  CHECK(a.sigma4() == doctest::Approx(1.0));
  CHECK(central_moments(column({1, 2, 3, 4})).sigma_sq() == doctest::Approx(1.25));
  CHECK_THROWS_AS(central_moments(column({5})), InvalidArgument);
}

TEST_CASE("identical columns") {
  Dataset<double> d = testing::normal_data(30, 1, 2);
  Dataset<double> two;
  two.values.resize(30, 2);
  two.values << d.values, d.values;
  const auto m = central_moments(two);
  CHECK(m.sigma(0, 1) == doctest::Approx(m.sigma(0, 0)));
  CHECK(m.sigma2(0, 1) == doctest::Approx(m.sigma2(0, 0)));
}

TEST_CASE("c-constants for independent standard normals") {
  MomentConstants<double> m;
  m.N = 1000;
  m.sigma = Matrix<double>::Identity(2, 2);
  m.sigma2.resize(2, 2);
  m.sigma2 << 3, 1, 1, 3;
  const auto c = mse_constants(m);
  CHECK(c.c1 == doctest::Approx(6));
  CHECK(c.c2 == doctest::Approx(6));
  CHECK(c.c3 == doctest::Approx(2));
  CHECK(c.c4 == doctest::Approx(0));
}

TEST_CASE("p = 1 collapses to the univariate formulas") {
  const auto c = mse_constants(univariate(1, 3));
  CHECK(c.c1 == doctest::Approx(2));
  CHECK(c.c2 == doctest::Approx(2));
  CHECK(c.c3 == doctest::Approx(1));
  CHECK(c.c4 == 0);

  const auto d = testing::normal_data(200, 1, 5);
  const auto m = central_moments(d);
  const auto e = mse_constants(m);
  const double s2 = m.sigma_sq(), s4 = m.sigma4();
  CHECK(e.c1 == doctest::Approx(2 * s2 * s2).epsilon(1e-14));
  CHECK(e.c2 == doctest::Approx(s4 - s2 * s2).epsilon(1e-14));
  CHECK(e.c3 == doctest::Approx(s2 * s2).epsilon(1e-14));
}

TEST_CASE("constant column contributes nothing") {
  Dataset<double> d;
  d.values = Matrix<double>::Constant(10, 1, 4.0);
  const auto c = mse_constants(central_moments(d));
  CHECK(c.c1 == 0);
  CHECK(c.c2 == 0);
  CHECK(c.c3 == 0);
}

TEST_CASE("univariate tilde constants") {
  const auto a = univariate_tilde_constants(univariate(1, 3));
  CHECK(a.c1 == doctest::Approx(1));
  CHECK(a.c2 == doctest::Approx(1));
  CHECK(a.c3 == doctest::Approx(0.5));
  const auto b = univariate_tilde_constants(univariate(1, 9));
  CHECK(b.c1 == doctest::Approx(0.25));
  CHECK(b.c3 == doctest::Approx(0.125));
  CHECK_THROWS_AS(univariate_tilde_constants(univariate(0.25, 0.0625)), DegenerateKurtosisError);
  CHECK_THROWS_AS(univariate_tilde_constants(central_moments(column({-1, 1, -1, 1}))), DegenerateKurtosisError);
}

TEST_CASE("multivariate tilde constants are proportional to the univariate ones") {
  const auto m = univariate(2, 13);
  const auto u = univariate_tilde_constants(m);
  const auto t = tilde_constants(mse_constants(m));
  CHECK(t.c1 / t.c2 == doctest::Approx(u.c1 / u.c2));
  CHECK(t.c3 / t.c2 == doctest::Approx(u.c3 / u.c2));
  CHECK_THROWS_AS(tilde_constants(MseConstants{2, 0, 1, 0}), DegenerateKurtosisError);
}

TEST_CASE("scaling the constants leaves the tuned hyperparameters unchanged") {
  const auto c = mse_constants(univariate(1, 3));
  for (double k : {1e-6, 0.3, 7.0, 1e5}) {
    CAPTURE(k);
    const auto s = c.scaled(k);
    CHECK(optimal_blb(tilde_constants(s), 1e-6, 3e-6, 2.0, 100000).params ==
          optimal_blb(tilde_constants(c), 1e-6, 3e-6, 2.0, 100000).params);
    CHECK(optimal_sb_sdb(Method::SB, s, 1e-6, 2.0, 100000).params ==
          optimal_sb_sdb(Method::SB, c, 1e-6, 2.0, 100000).params);
  }
}

}  // TEST_SUITE
