#include <doctest.h>

#include "support.hpp"

using namespace subboot;

namespace {

const MseConstants kNormal{2, 2, 1, 0};

double mse(Method m, Index N, Index n, Index R, Index B, const MseConstants& c = kNormal) {
  return predict_mse(m, N, {n, R, B}, c).total;
}

}  // namespace

TEST_SUITE("msemodel") {

TEST_CASE("worked values") {
  const auto blb = predict_mse(Method::BLB, 10000, {100, 100, 50}, kNormal);
  CHECK(blb.term(MseTerm::N3) == doctest::Approx(2e-12));
  CHECK(blb.term(MseTerm::N2RB) == doctest::Approx(4e-12));
  CHECK(blb.term(MseTerm::N2nR) == doctest::Approx(2e-12));
  CHECK(blb.term(MseTerm::N2n2) == doctest::Approx(1e-12));
  CHECK(blb.total == doctest::Approx(9e-12));
  CHECK(mse(Method::SB, 10000, 100, 100, 1) == doctest::Approx(2.03e-10));
  CHECK(mse(Method::AF, 10000, 1, 1, 1, MseConstants{2, 0, 1, 0}) == 0.0);
  CHECK(mse(Method::TB, 10000, 1, 1, 40) == doctest::Approx(2e-12 + 2.0 / (1e8 * 40)));
}

TEST_CASE("breakdown sums to the total") {
  for (Method m : {Method::AF, Method::TB, Method::BLB, Method::SB, Method::SDB}) {
    const HyperParams hp{30, 20, m == Method::BLB || m == Method::TB ? Index{7} : Index{1}};
    const auto p = predict_mse(m, 5000, hp, MseConstants{3, 2, 1, 0.5});
    double sum = 0;
    for (double t : p.terms) {
      CHECK(t >= 0.0);
      sum += t;
    }
    CHECK(p.total == doctest::Approx(sum));
  }
}

TEST_CASE("strictly decreasing in n, R and B") {
  const Index N = 100000;
  for (Index k = 1; k < 200; k += 7) {
    CHECK(mse(Method::BLB, N, k + 1, 10, 10) < mse(Method::BLB, N, k, 10, 10));
    CHECK(mse(Method::BLB, N, 100, k + 1, 10) < mse(Method::BLB, N, 100, k, 10));
    CHECK(mse(Method::BLB, N, 100, 10, k + 1) < mse(Method::BLB, N, 100, 10, k));
    CHECK(mse(Method::SB, N, k + 1, 10, 1) < mse(Method::SB, N, k, 10, 1));
    CHECK(mse(Method::SB, N, 100, k + 1, 1) < mse(Method::SB, N, 100, k, 1));
    CHECK(mse(Method::SDB, N, k + 1, 10, 1, {2, 2, 1, 1}) < mse(Method::SDB, N, k, 10, 1, {2, 2, 1, 1}));
    CHECK(mse(Method::TB, N, 1, 1, k + 1) < mse(Method::TB, N, 1, 1, k));
  }
}

TEST_CASE("large hyperparameters approach the analytic value") {
  const Index N = 10000;
  const double af = mse(Method::AF, N, 1, 1, 1);
  const Index big = 1000000000;
  CHECK(mse(Method::TB, N, 1, 1, big) == doctest::Approx(af).epsilon(1e-4));
  CHECK(mse(Method::BLB, N, N, big, big) == doctest::Approx(af).epsilon(1e-4));
  CHECK(mse(Method::SB, N, N, big, 1) == doctest::Approx(af).epsilon(1e-4));
}

TEST_CASE("SDB and SB coincide without the cross term") {
  const MseConstants c{5, 4, 2, 1.5};
  for (Index n : {10, 100, 1000}) {
    const auto sb = predict_mse(Method::SB, 100000, {n, 50, 1}, c);
    const auto sdb = predict_mse(Method::SDB, 100000, {n, 50, 1}, c, MseOptions{false});
    CHECK(sb.terms == sdb.terms);
    const auto full = predict_mse(Method::SDB, 100000, {n, 50, 1}, c);
    CHECK(full.term(MseTerm::N2nR) == doctest::Approx(3 * 1.5 / (1e10 * n * 50.0)));
  }
}

TEST_CASE("contract errors") {
  CHECK_THROWS_AS(predict_mse(Method::SB, 1000, {10, 10, 5}, kNormal), InvalidArgument);
  CHECK_THROWS_AS(predict_mse(Method::BLB, 1000, {2000, 10, 5}, kNormal), InvalidArgument);
  CHECK_THROWS_AS(predict_mse(Method::AF, 1, {1, 1, 1}, kNormal), InvalidArgument);
}

TEST_CASE("guarded ratio") {
  CHECK(guarded_ratio(0.0, 0.0) == 1.0);
  CHECK(std::isnan(guarded_ratio(1.0, 0.0)));
  CHECK(std::isnan(guarded_ratio(1.0, 1e-301)));
  CHECK(guarded_ratio(3.0, 2.0) == 1.5);
}

TEST_CASE("Monte-Carlo oracle") {
  McOracleConfig<double> cfg;
  cfg.estimator = mean_estimator<double>();
  cfg.method = Method::SB;
  cfg.params = {10, 20, 1};
  cfg.generate = [](const SeedSpec&) {
    Dataset<double> d;
    d.values = Matrix<double>::Constant(100, 1, 2.0);
    return d;
  };
  cfg.constants = MseConstants{};
  const auto flat = mc_mse_oracle(cfg, 5, SeedSpec{1});
  CHECK(flat.empirical == 0.0);
  CHECK(flat.ratio == 1.0);
  CHECK_THROWS_AS(mc_mse_oracle(cfg, 1, SeedSpec{1}), InvalidArgument);

  cfg.generate = [](const SeedSpec& s) { return testing::normal_data(1000, 1, s.key(0, 0)); };
  cfg.constants = kNormal;
  cfg.truth = Matrix<double>::Constant(1, 1, 1e-3);
  cfg.params = {31, 25, 1};
  const auto r = mc_mse_oracle(cfg, 400, SeedSpec{2});
  CHECK(r.M == 400);
  CHECK(r.predicted == doctest::Approx(mse(Method::SB, 1000, 31, 25, 1)));
  CHECK(r.ratio > 0.8);
  CHECK(r.ratio < 1.25);
}

}  // TEST_SUITE
