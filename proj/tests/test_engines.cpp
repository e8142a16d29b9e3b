#include <doctest.h>

#include "support.hpp"

using namespace subboot;
using testing::column;

namespace {

constexpr std::array<Method, 5> kMethods{Method::AF, Method::TB, Method::BLB, Method::SB, Method::SDB};

HyperParams params_for(Method m) {
  if (m == Method::BLB) return {8, 40, 5};
  if (m == Method::TB) return {1, 1, 200};
  return {8, 200, 1};
}

// Mean over all n^n ordered draws of size n from {x} of the within-draw
// variance (divisor n).
double enumerated_subsample_variance(const std::vector<double>& x, int n) {
  const auto N = static_cast<int>(x.size());
  double total = 0;
  int count = 0;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    double s = 0, sq = 0;
    for (int i : idx) {
      s += x[static_cast<std::size_t>(i)];
      sq += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    }
    total += sq / n - (s / n) * (s / n);
    ++count;
    int pos = 0;
    while (pos < n && ++idx[static_cast<std::size_t>(pos)] == N) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == n) break;
  }
  return total / count;
}

}  // namespace

TEST_SUITE("engines") {

TEST_CASE("constant data gives a zero matrix") {
  Dataset<double> d;
  d.values = Matrix<double>::Constant(50, 2, 3.5);
  const auto mean = mean_estimator<double>();
  for (Method m : kMethods) {
    CAPTURE(to_string(m));
    const auto r = run_engine(m, d, mean, params_for(m), SeedSpec{1});
    CHECK(r.matrix.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("conditional expectations on {1, 2, 3, 4}") {
  const auto d = column({1, 2, 3, 4});
  const auto mean = mean_estimator<double>();
  const double full = central_moments(d).sigma_sq() / 4.0;
  CHECK(full == doctest::Approx(0.3125));
  const double sub = enumerated_subsample_variance({1, 2, 3, 4}, 2) / 4.0;
  CHECK(sub == doctest::Approx(0.15625));

  CHECK(tb_variance(d, mean, 1000000, SeedSpec{1}).matrix(0, 0) == doctest::Approx(full).epsilon(0.01));
  for (Index n : {1, 2, 3, 4}) {
    CAPTURE(n);
    CHECK(sb_variance(d, mean, n, 1000000, SeedSpec{2}).matrix(0, 0) == doctest::Approx(full).epsilon(0.01));
  }
  CHECK(blb_variance(d, mean, {2, 100000, 10}, SeedSpec{3}).matrix(0, 0) == doctest::Approx(sub).epsilon(0.015));
  CHECK(sdb_variance(d, mean, 2, 1000000, SeedSpec{4}).matrix(0, 0) == doctest::Approx(sub).epsilon(0.015));
}

TEST_CASE("SDB equals BLB with B = 1 exactly") {
  const auto d = testing::normal_data(300, 2, 7);
  for (const char* name : {"mean", "misscorr"}) {
    const auto est = make_estimator<double>(name);
    const auto a = sdb_variance(d, est, 40, 333, SeedSpec{9});
    const auto b = blb_variance(d, est, {40, 333, 1}, SeedSpec{9});
    CHECK(a.matrix == b.matrix);
    CHECK(a.method == Method::SDB);
  }
}

TEST_CASE("results do not depend on the worker count") {
  const auto d = testing::normal_data(500, 3, 8);
  const auto mean = mean_estimator<double>();
  for (Method m : kMethods) {
    CAPTURE(to_string(m));
    EngineOptions one, eight;
    eight.workers = 8;
    const auto a = run_engine(m, d, mean, params_for(m), SeedSpec{5}, one);
    const auto b = run_engine(m, d, mean, params_for(m), SeedSpec{5}, eight);
    CHECK(a.matrix == b.matrix);
    const auto c = run_engine(m, d, mean, params_for(m), SeedSpec{5}, one);
    CHECK(a.matrix == c.matrix);
  }
}

TEST_CASE("outputs are symmetric and positive semidefinite") {
  const auto d = testing::normal_data(400, 3, 12);
  const auto mean = mean_estimator<double>();
  for (Method m : kMethods) {
    CAPTURE(to_string(m));
    const auto r = run_engine(m, d, mean, params_for(m), SeedSpec{6});
    CHECK(r.matrix.rows() == 3);
    CHECK((r.matrix - r.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(r.matrix);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-15 * eig.eigenvalues().cwiseAbs().maxCoeff());
  }
}

TEST_CASE("BLB at n = N, B = 1 has the replicate law of TB") {
  const auto d = testing::normal_data(200, 1, 13);
  const auto mean = mean_estimator<double>();
  EngineOptions opt;
  opt.keep_terms = true;
  const auto tb = tb_variance(d, mean, 5000, SeedSpec{1}, opt);
  const auto blb = blb_variance(d, mean, {200, 5000, 1}, SeedSpec{2}, opt);
  auto terms = [](const VarianceEstimate<double>& r) {
    std::vector<double> v(static_cast<std::size_t>(r.deviations.cols()));
    for (Index i = 0; i < r.deviations.cols(); ++i) v[static_cast<std::size_t>(i)] = r.deviations(0, i);
    return v;
  };
  CHECK(testing::ks_two_sample_p(terms(tb), terms(blb)) > 0.01);
  const auto sb = sb_variance(d, mean, 200, 5000, SeedSpec{3}, opt);
  CHECK(testing::ks_two_sample_p(terms(tb), terms(sb)) > 0.01);
}

TEST_CASE("degenerate replicates are skipped and counted") {
  const auto ols = ols_estimator<double>();
  Dataset<double> d = testing::normal_data(100, 1, 14);
  d.response = d.values.col(0) + Vector<double>::Constant(100, 0.5);
  for (Index i = 0; i < 15; ++i) d.values(i, 0) = 0.0;
  const auto r = sb_variance(d, ols, 3, 20000, SeedSpec{1});
  CHECK(r.skipped > 0);
  CHECK(r.skipped < 200);
  CHECK(r.matrix.allFinite());

  for (Index i = 0; i < 95; ++i) d.values(i, 0) = 0.0;
  CHECK_THROWS_AS(sb_variance(d, ols, 3, 2000, SeedSpec{1}), DataQualityError);
}

TEST_CASE("contract errors") {
  const auto d = column({1, 2, 3});
  const auto mean = mean_estimator<double>();
  CHECK_THROWS_AS(sb_variance(d, mean, 0, 10, SeedSpec{}), InvalidArgument);
  CHECK_THROWS_AS(sb_variance(d, mean, 4, 10, SeedSpec{}), InvalidArgument);
  CHECK_THROWS_AS(blb_variance(d, mean, {2, 0, 1}, SeedSpec{}), InvalidArgument);
  CHECK_THROWS_AS(tb_variance(d, mean, 0, SeedSpec{}), InvalidArgument);
  CHECK_THROWS_AS(run_engine(Method::SB, d, mean, {2, 5, 3}, SeedSpec{}), InvalidArgument);
}

TEST_CASE("estimate metadata") {
  const auto d = testing::normal_data(100, 1, 3);
  const auto r = blb_variance(d, mean_estimator<double>(), {10, 7, 3}, SeedSpec{77});
  CHECK(r.method == Method::BLB);
  CHECK(r.params == HyperParams{10, 7, 3});
  CHECK(r.seed == 77);
  CHECK(r.units == 21);
  CHECK(r.skipped == 0);
  CHECK(r.seconds >= 0.0);
  CHECK(r.setup_seconds >= 0.0);
}

}  // TEST_SUITE

TEST_SUITE("engines") {

TEST_CASE("analytic formula runs for every registered estimator") {
  Dataset<double> d = testing::normal_data(300, 2, 31);
  d.response = d.values.col(0).unaryExpr([](double x) { return x > 0.2 ? 1.0 : 0.0; });
  d.indicator = Vector<double>::Ones(300);
  for (Index i = 0; i < 300; i += 4) d.indicator(i) = 0.0;
  for (const auto& name : estimator_names()) {
    CAPTURE(name);
    const auto r = af_variance(d, make_estimator<double>(name), SeedSpec{2});
    CHECK(r.matrix.allFinite());
    CHECK(r.matrix(0, 0) > 0.0);
  }
}

}  // TEST_SUITE
