#pragma once

// Estimators that take a weighted data representation.
//
// Every estimator here has the form theta = finish(sum_i w_i s_i, sum_i w_i),
// where s_i is a fixed vector of per-row statistics. The engines compute the
// statistic matrix once and evaluate each weighted resample as one
// matrix-vector product over the n distinct rows.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "subboot/dataset.hpp"
#include "subboot/errors.hpp"
#include "subboot/sampling.hpp"
#include "subboot/types.hpp"

namespace subboot {

template <typename Scalar = double>
struct EstimatorSpec {
  /// k x N, one column of statistics per observation.
  using StatsFn = std::function<Matrix<Scalar>(const Dataset<Scalar>&)>;
  /// (weighted sum of statistics, total weight) -> estimate in R^d.
  using FinishFn = std::function<Vector<Scalar>(const Vector<Scalar>&, Scalar)>;
  /// Data-dependent setup run once per engine call, outside timing.
  using PrepareFn = std::function<EstimatorSpec(const Dataset<Scalar>&, const SeedSpec&)>;
  /// d x k derivative of finish(mu, 1) at mu; optional.
  using JacobianFn = std::function<Matrix<Scalar>(const Vector<Scalar>&)>;

  std::string name;
  double gamma = 1.0;
  StatsFn statistics;
  FinishFn finish;
  PrepareFn prepare;
  JacobianFn jacobian;
};

/// Runs the prepare hook, if any; the result has none.
template <typename Scalar>
EstimatorSpec<Scalar> prepared(const EstimatorSpec<Scalar>& spec, const Dataset<Scalar>& data,
                               const SeedSpec& seed) {
  if (!spec.prepare) return spec;
  auto out = spec.prepare(data, seed);
  out.prepare = nullptr;
  return out;
}

template <typename Scalar>
Vector<Scalar> evaluate(const EstimatorSpec<Scalar>& spec, const Dataset<Scalar>& data,
                        const Vector<Scalar>& weights) {
  if (weights.size() != data.rows()) throw InvalidArgument("evaluate: weight length mismatch");
  const Matrix<Scalar> stats = spec.statistics(data);
  return spec.finish(stats * weights, weights.sum());
}

template <typename Scalar>
Vector<Scalar> evaluate(const EstimatorSpec<Scalar>& spec, const Dataset<Scalar>& data) {
  return evaluate(spec, data, Vector<Scalar>::Ones(data.rows()).eval());
}

template <typename Scalar>
Vector<Scalar> evaluate(const EstimatorSpec<Scalar>& spec, const WeightedView<Scalar>& view) {
  if (view.weights.size() == 0) return evaluate(spec, *view.data);
  return evaluate(spec, *view.data, view.weights);
}

namespace detail {

template <typename Scalar>
void require_positive_total(Scalar total, const char* who) {
  if (!(total > Scalar(0))) throw DegenerateError(std::string(who) + ": total weight must be positive");
}

/// Packs the upper triangle of x x^T into `out` starting at `offset`.
template <typename Scalar, typename Row, typename Out>
void pack_outer(const Row& x, Scalar scale, Out&& out, Index offset) {
  const Index d = x.size();
  for (Index j = 0; j < d; ++j)
    for (Index l = j; l < d; ++l) out(offset++) = scale * x(j) * x(l);
}

template <typename Scalar>
Matrix<Scalar> unpack_outer(const Vector<Scalar>& packed, Index d) {
  Matrix<Scalar> m(d, d);
  Index k = 0;
  for (Index j = 0; j < d; ++j)
    for (Index l = j; l < d; ++l) m(j, l) = m(l, j) = packed(k++);
  return m;
}

/// Solves G x = rhs for symmetric PSD G, rejecting numerically singular G.
template <typename Scalar>
Vector<Scalar> solve_spd(const Matrix<Scalar>& G, const Vector<Scalar>& rhs, const char* who) {
  Eigen::LDLT<Matrix<Scalar>> ldlt(G);
  const auto D = ldlt.vectorD();
  const Scalar top = D.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(top > Scalar(0)) || !(D.minCoeff() > Scalar(1e-12) * top)) {
    throw RankDeficiencyError(std::string(who) + ": singular Gram matrix");
  }
  return ldlt.solve(rhs);
}

inline Index packed_size(Index d) { return d * (d + 1) / 2; }

}  // namespace detail

/// Weighted mean of the rows.
template <typename Scalar = double>
EstimatorSpec<Scalar> mean_estimator() {
  EstimatorSpec<Scalar> spec;
  spec.name = "mean";
  spec.statistics = [](const Dataset<Scalar>& data) -> Matrix<Scalar> { return data.values.transpose(); };
  spec.finish = [](const Vector<Scalar>& sum, Scalar total) -> Vector<Scalar> {
    detail::require_positive_total(total, "mean");
    return sum / total;
  };
  spec.jacobian = [](const Vector<Scalar>& mu) -> Matrix<Scalar> {
    return Matrix<Scalar>::Identity(mu.size(), mu.size());
  };
  return spec;
}

/// Least squares of the response on the value columns, no intercept.
template <typename Scalar = double>
EstimatorSpec<Scalar> ols_estimator() {
  EstimatorSpec<Scalar> spec;
  spec.name = "ols";
  spec.statistics = [](const Dataset<Scalar>& data) -> Matrix<Scalar> {
    if (!data.has_response()) throw InvalidArgument("ols: dataset has no response");
    const Index d = data.cols();
    const Index kg = detail::packed_size(d);
    Matrix<Scalar> stats(kg + d, data.rows());
    for (Index i = 0; i < data.rows(); ++i) {
      const auto x = data.values.row(i);
      detail::pack_outer(x, Scalar(1), stats.col(i), 0);
      stats.col(i).segment(kg, d) = data.response(i) * x.transpose();
    }
    return stats;
  };
  spec.finish = [](const Vector<Scalar>& sum, Scalar total) -> Vector<Scalar> {
    detail::require_positive_total(total, "ols");
    // k = d(d+1)/2 + d
    const auto d = static_cast<Index>(std::lround((std::sqrt(9.0 + 8.0 * sum.size()) - 3.0) / 2.0));
    const Index kg = detail::packed_size(d);
    const Matrix<Scalar> G = detail::unpack_outer<Scalar>(sum.head(kg), d);
    return detail::solve_spd<Scalar>(G, sum.segment(kg, d), "ols");
  };
  return spec;
}

namespace detail {

template <typename Scalar>
void require_binary_response(const Dataset<Scalar>& data, const char* who) {
  if (!data.has_response()) throw InvalidArgument(std::string(who) + ": dataset has no response");
  for (Index i = 0; i < data.rows(); ++i) {
    if (data.response(i) != Scalar(0) && data.response(i) != Scalar(1)) {
      throw InvalidArgument(std::string(who) + ": response must be 0/1");
    }
  }
}

template <typename Scalar>
Scalar logistic(Scalar eta) {
  return eta >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-eta))
                          : std::exp(eta) / (Scalar(1) + std::exp(eta));
}

}  // namespace detail

/// One Newton step from a fixed pilot on the weighted logistic log-likelihood:
/// beta = pilot + (sum w omega x x^T)^{-1} sum w (y - p) x.
template <typename Scalar = double>
EstimatorSpec<Scalar> logistic_one_step(const Vector<Scalar>& pilot) {
  EstimatorSpec<Scalar> spec;
  spec.name = "logit1";
  spec.statistics = [pilot](const Dataset<Scalar>& data) -> Matrix<Scalar> {
    detail::require_binary_response(data, "logit1");
    const Index d = data.cols();
    if (pilot.size() != d) throw InvalidArgument("logit1: pilot dimension mismatch");
    const Index kg = detail::packed_size(d);
    Matrix<Scalar> stats(kg + d, data.rows());
    for (Index i = 0; i < data.rows(); ++i) {
      const auto x = data.values.row(i);
      const Scalar p = detail::logistic<Scalar>(x.dot(pilot));
      detail::pack_outer(x, p * (Scalar(1) - p), stats.col(i), 0);
      stats.col(i).segment(kg, d) = (data.response(i) - p) * x.transpose();
    }
    return stats;
  };
  spec.finish = [pilot](const Vector<Scalar>& sum, Scalar total) -> Vector<Scalar> {
    detail::require_positive_total(total, "logit1");
    const Index d = pilot.size();
    const Index kg = detail::packed_size(d);
    const Matrix<Scalar> info = detail::unpack_outer<Scalar>(sum.head(kg), d);
    return pilot + detail::solve_spd<Scalar>(info, sum.segment(kg, d), "logit1");
  };
  return spec;
}

/// Unweighted logistic MLE by Newton iteration.
template <typename Scalar = double>
Vector<Scalar> logistic_mle(const Dataset<Scalar>& data, int max_iter = 100, Scalar tol = Scalar(1e-10)) {
  detail::require_binary_response(data, "logistic_mle");
  Vector<Scalar> beta = Vector<Scalar>::Zero(data.cols());
  for (int it = 0; it < max_iter; ++it) {
    const auto step = logistic_one_step<Scalar>(beta);
    const Vector<Scalar> next = evaluate(step, data);
    if (!next.allFinite()) break;
    const Scalar change = (next - beta).template lpNorm<Eigen::Infinity>();
    beta = next;
    if (change <= tol * (Scalar(1) + beta.template lpNorm<Eigen::Infinity>())) return beta;
  }
  throw DegenerateError("logistic_mle: Newton iteration did not converge");
}

/// Registry form of the one-step estimator: the pilot is the full MLE on a
/// floor(N^0.7) draw with replacement, computed in the prepare hook.
template <typename Scalar = double>
EstimatorSpec<Scalar> logistic_one_step_auto() {
  EstimatorSpec<Scalar> spec = logistic_one_step<Scalar>(Vector<Scalar>());
  spec.statistics = [](const Dataset<Scalar>&) -> Matrix<Scalar> {
    throw InvalidArgument("logit1: pilot not prepared");
  };
  spec.prepare = [](const Dataset<Scalar>& data, const SeedSpec& seed) {
    const Index N = data.rows();
    const auto m = std::max<Index>(
        data.cols() + 1, static_cast<Index>(std::floor(std::pow(static_cast<double>(N), 0.7))));
    Stream stream = seed.stream(0, 0);
    const Dataset<Scalar> pilot_rows = data.gather(srswr(N, std::min(m, N), stream));
    return logistic_one_step<Scalar>(logistic_mle(pilot_rows));
  };
  return spec;
}

/// Pearson correlation of value columns 0 and 1 over rows whose indicator is
/// 1 (all rows when the dataset has no indicator).
template <typename Scalar = double>
EstimatorSpec<Scalar> missing_corr() {
  EstimatorSpec<Scalar> spec;
  spec.name = "misscorr";
  spec.statistics = [](const Dataset<Scalar>& data) -> Matrix<Scalar> {
    if (data.cols() < 2) throw InvalidArgument("misscorr: needs columns X and Y");
    const Index N = data.rows();
    auto observed = [&](Index i) { return data.has_indicator() ? data.indicator(i) : Scalar(1); };
    // Shift by the observed means; correlation is shift invariant and the
    // raw-moment form below then loses less to cancellation.
    Scalar count = 0, sx = 0, sy = 0;
    for (Index i = 0; i < N; ++i) {
      count += observed(i);
      sx += observed(i) * data.values(i, 0);
      sy += observed(i) * data.values(i, 1);
    }
    const Scalar cx = count > 0 ? sx / count : Scalar(0);
    const Scalar cy = count > 0 ? sy / count : Scalar(0);
    Matrix<Scalar> stats(6, N);
    for (Index i = 0; i < N; ++i) {
      const Scalar w = observed(i);
      const Scalar x = data.values(i, 0) - cx;
      const Scalar y = data.values(i, 1) - cy;
      stats.col(i) << w, w * x, w * y, w * x * x, w * y * y, w * x * y;
    }
    return stats;
  };
  spec.finish = [](const Vector<Scalar>& s, Scalar) -> Vector<Scalar> {
    const Scalar W = s(0);
    // Also called on averaged statistics, so W is not a row count here.
    if (!(W > Scalar(0))) throw DegenerateError("misscorr: no observed rows");
    const Scalar mx = s(1) / W, my = s(2) / W;
    const Scalar vx = s(3) / W - mx * mx;
    const Scalar vy = s(4) / W - my * my;
    const Scalar cxy = s(5) / W - mx * my;
    if (!(vx > Scalar(1e-14) * s(3) / W) || !(vy > Scalar(1e-14) * s(4) / W)) {
      throw DegenerateError("misscorr: zero variance among observed rows");
    }
    Vector<Scalar> out(1);
    out(0) = std::clamp(cxy / std::sqrt(vx * vy), Scalar(-1), Scalar(1));
    return out;
  };
  return spec;
}

/// Just-identified instrumental variable: value column 0 is X, column 1 is Z,
/// the response is Y; beta = sum w z y / sum w z x.
template <typename Scalar = double>
EstimatorSpec<Scalar> iv_estimator() {
  EstimatorSpec<Scalar> spec;
  spec.name = "iv";
  spec.statistics = [](const Dataset<Scalar>& data) -> Matrix<Scalar> {
    if (data.cols() < 2 || !data.has_response()) throw InvalidArgument("iv: needs columns X, Z and a response");
    Matrix<Scalar> stats(3, data.rows());
    for (Index i = 0; i < data.rows(); ++i) {
      const Scalar x = data.values(i, 0), z = data.values(i, 1);
      stats.col(i) << z * data.response(i), z * x, std::abs(z * x);
    }
    return stats;
  };
  spec.finish = [](const Vector<Scalar>& s, Scalar) -> Vector<Scalar> {
    if (!(std::abs(s(1)) > Scalar(1e-12) * s(2))) throw DegenerateError("iv: instrument uncorrelated with X");
    Vector<Scalar> out(1);
    out(0) = s(0) / s(1);
    return out;
  };
  return spec;
}

/// theta = g(base); non-finite g values raise DomainError.
template <typename Scalar = double>
EstimatorSpec<Scalar> smooth_transform(EstimatorSpec<Scalar> base,
                                       std::function<Vector<Scalar>(const Vector<Scalar>&)> g,
                                       std::string name = {}) {
  EstimatorSpec<Scalar> spec;
  spec.name = name.empty() ? "g(" + base.name + ")" : std::move(name);
  spec.gamma = base.gamma;
  spec.statistics = base.statistics;
  spec.finish = [inner = base.finish, g](const Vector<Scalar>& sum, Scalar total) -> Vector<Scalar> {
    Vector<Scalar> out = g(inner(sum, total));
    if (!out.allFinite()) throw DomainError("smooth_transform: g undefined at the estimate");
    return out;
  };
  if (base.prepare) {
    spec.prepare = [inner = base.prepare, g, n = spec.name](const Dataset<Scalar>& data, const SeedSpec& seed) {
      auto ready = inner(data, seed);
      ready.prepare = nullptr;
      return smooth_transform<Scalar>(std::move(ready), g, n);
    };
  }
  return spec;
}

inline std::vector<std::string> estimator_names() { return {"mean", "ols", "logit1", "misscorr", "iv"}; }

template <typename Scalar = double>
EstimatorSpec<Scalar> make_estimator(const std::string& name) {
  if (name == "mean") return mean_estimator<Scalar>();
  if (name == "ols") return ols_estimator<Scalar>();
  if (name == "logit1") return logistic_one_step_auto<Scalar>();
  if (name == "misscorr") return missing_corr<Scalar>();
  if (name == "iv") return iv_estimator<Scalar>();
  throw InvalidArgument("unknown estimator: " + name);
}

/// Derivative of finish(mu, 1) at mu: the analytic one when provided,
/// otherwise central differences with a per-coordinate step.
template <typename Scalar>
Matrix<Scalar> finish_jacobian(const EstimatorSpec<Scalar>& spec, const Vector<Scalar>& mu,
                               const Vector<Scalar>& scale) {
  if (spec.jacobian) return spec.jacobian(mu);
  const Vector<Scalar> f0 = spec.finish(mu, Scalar(1));
  Matrix<Scalar> J(f0.size(), mu.size());
  for (Index j = 0; j < mu.size(); ++j) {
    Scalar h = Scalar(1e-5) * std::max(std::abs(mu(j)), scale(j));
    if (!(h > Scalar(0))) h = Scalar(1e-5);
    Vector<Scalar> up = mu, down = mu;
    up(j) += h;
    down(j) -= h;
    J.col(j) = (spec.finish(up, Scalar(1)) - spec.finish(down, Scalar(1))) / (Scalar(2) * h);
  }
  return J;
}

/// Influence values psi_i = J (s_i - s_bar), one row per observation (N x d).
/// For the mean these are the centred rows.
template <typename Scalar>
Matrix<Scalar> influence_values(const EstimatorSpec<Scalar>& spec, const Dataset<Scalar>& data) {
  const Matrix<Scalar> stats = spec.statistics(data);
  const Scalar N = static_cast<Scalar>(stats.cols());
  const Vector<Scalar> mu = stats.rowwise().sum() / N;
  const Matrix<Scalar> centred = stats.colwise() - mu;
  const Vector<Scalar> scale = (centred.rowwise().squaredNorm() / N).cwiseSqrt();
  const Matrix<Scalar> J = finish_jacobian(spec, mu, scale);
  return (J * centred).transpose();
}

}  // namespace subboot
