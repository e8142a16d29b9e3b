#pragma once

// Monte-Carlo MSE of an engine over independently generated datasets.

#include <functional>
#include <optional>
#include <vector>

#include "subboot/dataset.hpp"
#include "subboot/engines.hpp"
#include "subboot/estimators.hpp"
#include "subboot/msemodel.hpp"
#include "subboot/parallel.hpp"

namespace subboot {

template <typename Scalar = double>
struct McOracleConfig {
  std::function<Dataset<Scalar>(const SeedSpec&)> generate;
  EstimatorSpec<Scalar> estimator;
  Method method = Method::BLB;
  HyperParams params;
  /// Population covariance of the estimator. When absent, the Monte-Carlo
  /// covariance of the M full-sample estimates is used instead.
  std::optional<Matrix<Scalar>> truth;
  /// Constants for the predicted side of the ratio.
  MseConstants constants;
  int workers = 1;
};

struct McOracleResult {
  double empirical = 0;  // mean over datasets of the squared Frobenius error
  double predicted = 0;
  double ratio = 0;      // predicted / empirical, guarded
  Index M = 0;
};

/// Dataset m is generated from seed.derive(m, 0) and the engine runs with
/// seed.derive(m, 1).
template <typename Scalar>
McOracleResult mc_mse_oracle(const McOracleConfig<Scalar>& cfg, Index M, const SeedSpec& seed) {
  if (M < 2) throw InvalidArgument("mc_mse_oracle: M must be at least 2");
  std::vector<Matrix<Scalar>> estimates(static_cast<std::size_t>(M));
  std::vector<Vector<Scalar>> thetas(static_cast<std::size_t>(M));
  Index N = 0;
  parallel_for(
      M, cfg.workers, [] { return 0; },
      [&](int&, Index m) {
        const auto um = static_cast<std::uint64_t>(m);
        const Dataset<Scalar> data = cfg.generate(seed.derive(um, 0));
        const SeedSpec engine_seed = seed.derive(um, 1);
        estimates[static_cast<std::size_t>(m)] =
            run_engine(cfg.method, data, cfg.estimator, cfg.params, engine_seed).matrix;
        if (!cfg.truth) {
          thetas[static_cast<std::size_t>(m)] = evaluate(prepared(cfg.estimator, data, engine_seed.derive(kPilotTag)), data);
        }
        if (m == 0) N = data.rows();
      });

  Matrix<Scalar> truth;
  if (cfg.truth) {
    truth = *cfg.truth;
  } else {
    Vector<Scalar> mean = Vector<Scalar>::Zero(thetas.front().size());
    for (const auto& t : thetas) mean += t;
    mean /= static_cast<Scalar>(M);
    truth.setZero(mean.size(), mean.size());
    for (const auto& t : thetas) truth += (t - mean) * (t - mean).transpose();
    truth /= static_cast<Scalar>(M);
  }

  McOracleResult out;
  out.M = M;
  for (const auto& e : estimates) out.empirical += static_cast<double>((e - truth).squaredNorm());
  out.empirical /= static_cast<double>(M);
  out.predicted = predict_mse(cfg.method, N, cfg.params, cfg.constants).total;
  out.ratio = guarded_ratio(out.predicted, out.empirical);
  return out;
}

}  // namespace subboot
