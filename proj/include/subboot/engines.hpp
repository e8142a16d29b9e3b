#pragma once

#include <algorithm>
#include <chrono>
#include <limits>
#include <cstdint>
#include <string>
#include <vector>

#include "subboot/dataset.hpp"
#include "subboot/errors.hpp"
#include "subboot/estimators.hpp"
#include "subboot/parallel.hpp"
#include "subboot/sampling.hpp"
#include "subboot/types.hpp"

namespace subboot {

struct EngineOptions {
  int workers = 1;
  /// Fraction of skipped replicates above which the run fails.
  double skip_threshold = 0.01;
  /// Keep every per-replicate deviation (d x units) in the result.
  bool keep_terms = false;
};

template <typename Scalar = double>
struct VarianceEstimate {
  Matrix<Scalar> matrix;
  Method method = Method::AF;
  HyperParams params;
  std::uint64_t seed = 0;
  Index units = 0;    // replicate terms attempted
  Index skipped = 0;  // terms dropped after an EstimationError
  double seconds = 0;        // resampling loop only
  double setup_seconds = 0;  // prepare hook, statistics, full-sample estimate
  Matrix<Scalar> deviations; // filled when keep_terms; skipped columns are NaN
};

/// Stream tag reserved for estimator preparation (e.g. the logistic pilot).
inline constexpr std::uint64_t kPilotTag = 0x70696c6f74ULL;

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Estimator bound to one dataset: the statistics are computed once.
template <typename Scalar>
struct Bound {
  EstimatorSpec<Scalar> spec;
  Matrix<Scalar> stats;  // k x N
  Index N = 0;

  Bound(const Dataset<Scalar>& data, const EstimatorSpec<Scalar>& est, const SeedSpec& seed)
      : spec(prepared(est, data, seed.derive(kPilotTag))), stats(spec.statistics(data)), N(data.rows()) {
    if (stats.cols() != N) throw InvalidArgument("estimator statistics must have one column per row");
  }

  Vector<Scalar> full_estimate() const {
    return spec.finish(stats.rowwise().sum(), static_cast<Scalar>(N));
  }
};

/// Replicates are processed in fixed chunks; each chunk keeps its own sum of
/// outer products and the chunks are added in index order afterwards.
inline constexpr Index kChunk = 32;

template <typename Scalar>
struct ChunkResult {
  Matrix<Scalar> sum;
  Index skipped = 0;
};

template <typename Scalar, typename MakeState, typename Replicate>
VarianceEstimate<Scalar> run_chunks(Index replicates, Index per_replicate, Index d, const EngineOptions& opt,
                                    MakeState&& make_state, Replicate&& replicate) {
  const Index chunks = (replicates + kChunk - 1) / kChunk;
  std::vector<ChunkResult<Scalar>> results(static_cast<std::size_t>(chunks));
  VarianceEstimate<Scalar> est;
  est.units = replicates * per_replicate;
  if (opt.keep_terms) est.deviations.setConstant(d, est.units, std::numeric_limits<Scalar>::quiet_NaN());

  const auto start = Clock::now();
  parallel_for(chunks, opt.workers, make_state, [&](auto& state, Index c) {
    auto& out = results[static_cast<std::size_t>(c)];
    out.sum.setZero(d, d);
    const Index end = std::min(replicates, (c + 1) * kChunk);
    for (Index r = c * kChunk; r < end; ++r) {
      replicate(state, r, [&](Index b, const Vector<Scalar>* dev) {
        if (dev == nullptr) {
          ++out.skipped;
          return;
        }
        out.sum.noalias() += (*dev) * dev->transpose();
        if (opt.keep_terms) est.deviations.col(r * per_replicate + b) = *dev;
      });
    }
  });
  est.seconds = seconds_since(start);

  est.matrix.setZero(d, d);
  for (const auto& part : results) {
    est.matrix += part.sum;
    est.skipped += part.skipped;
  }
  const Index kept = est.units - est.skipped;
  if (kept <= 0 || static_cast<double>(est.skipped) > opt.skip_threshold * static_cast<double>(est.units)) {
    throw DataQualityError("too many skipped replicates: " + std::to_string(est.skipped) + " of " +
                           std::to_string(est.units));
  }
  est.matrix /= static_cast<Scalar>(kept);
  return est;
}

template <typename Scalar>
void check_subsample(Index n, Index R, Index N) {
  if (n < 1 || n > N) throw InvalidArgument("subsample size must satisfy 1 <= n <= N");
  if (R < 1) throw InvalidArgument("replicate count R must be at least 1");
}

}  // namespace detail

/// Traditional bootstrap: B resamples of size N, centred at the full-sample
/// estimate.
template <typename Scalar>
VarianceEstimate<Scalar> tb_variance(const Dataset<Scalar>& data, const EstimatorSpec<Scalar>& est, Index B,
                                     const SeedSpec& seed, const EngineOptions& opt = {}) {
  if (B < 1) throw InvalidArgument("tb: B must be at least 1");
  const auto setup = detail::Clock::now();
  const detail::Bound<Scalar> bound(data, est, seed);
  const Vector<Scalar> centre = bound.full_estimate();
  const double setup_seconds = detail::seconds_since(setup);
  const Index N = bound.N, k = bound.stats.rows(), d = centre.size();

  struct State {
    Vector<Scalar> sum, dev;
  };
  auto result = detail::run_chunks<Scalar>(
      B, 1, d, opt, [&] { return State{Vector<Scalar>(k), Vector<Scalar>(d)}; },
      [&](State& s, Index b, auto&& emit) {
        Stream stream = seed.stream(static_cast<std::uint64_t>(b), 0);
        s.sum.setZero();
        const auto bound_n = static_cast<std::uint64_t>(N);
        for (Index i = 0; i < N; ++i) s.sum += bound.stats.col(static_cast<Index>(stream.below(bound_n)));
        try {
          s.dev = bound.spec.finish(s.sum, static_cast<Scalar>(N)) - centre;
        } catch (const EstimationError&) {
          emit(0, nullptr);
          return;
        }
        emit(0, &s.dev);
      });
  result.method = Method::TB;
  result.params = HyperParams{N, 1, B, Provenance::User};
  result.seed = seed.root;
  result.setup_seconds = setup_seconds;
  return result;
}

/// Bag of little bootstraps. Replicate r draws a size-n subsample from
/// stream (r, 0); its b-th multinomial resample uses stream (r, b + 1).
template <typename Scalar>
VarianceEstimate<Scalar> blb_variance(const Dataset<Scalar>& data, const EstimatorSpec<Scalar>& est,
                                      const HyperParams& hp, const SeedSpec& seed, const EngineOptions& opt = {}) {
  detail::check_subsample<Scalar>(hp.n, hp.R, data.rows());
  if (hp.B < 1) throw InvalidArgument("blb: B must be at least 1");
  const auto setup = detail::Clock::now();
  const detail::Bound<Scalar> bound(data, est, seed);
  const MultinomialSampler sampler(hp.n, bound.N);
  const double setup_seconds = detail::seconds_since(setup);
  const Index N = bound.N, n = hp.n, k = bound.stats.rows(), B = hp.B;
  // Output dimension; the full-sample estimate is not used otherwise.
  const Index d = bound.full_estimate().size();

  struct State {
    IndexSample idx;
    Matrix<Scalar> sub;  // n x k: row-form products vectorise over n
    Vector<Scalar> w, sum, centre, dev;
  };
  auto result = detail::run_chunks<Scalar>(
      hp.R, B, d, opt, [&] { return State{{}, Matrix<Scalar>(n, k), Vector<Scalar>(n), Vector<Scalar>(k), {}, {}}; },
      [&](State& s, Index r, auto&& emit) {
        Stream sub_stream = seed.stream(static_cast<std::uint64_t>(r), 0);
        srswr_into(N, n, sub_stream, s.idx);
        for (Index i = 0; i < n; ++i) s.sub.row(i) = bound.stats.col(s.idx[static_cast<std::size_t>(i)]).transpose();
        try {
          s.centre = bound.spec.finish(s.sub.colwise().sum().transpose(), static_cast<Scalar>(n));
        } catch (const EstimationError&) {
          for (Index b = 0; b < B; ++b) emit(b, nullptr);
          return;
        }
        for (Index b = 0; b < B; ++b) {
          Stream stream = seed.stream(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(b) + 1);
          sampler.draw_into(stream, s.w);
          s.sum.noalias() = s.sub.transpose() * s.w;
          try {
            s.dev = bound.spec.finish(s.sum, static_cast<Scalar>(N)) - s.centre;
          } catch (const EstimationError&) {
            emit(b, nullptr);
            continue;
          }
          emit(b, &s.dev);
        }
      });
  result.method = Method::BLB;
  result.params = HyperParams{n, hp.R, B, hp.provenance};
  result.seed = seed.root;
  result.setup_seconds = setup_seconds;
  return result;
}

/// Subsampled double bootstrap: BLB with a single resample per subsample.
template <typename Scalar>
VarianceEstimate<Scalar> sdb_variance(const Dataset<Scalar>& data, const EstimatorSpec<Scalar>& est, Index n,
                                      Index R, const SeedSpec& seed, const EngineOptions& opt = {},
                                      Provenance provenance = Provenance::User) {
  auto result = blb_variance(data, est, HyperParams{n, R, 1, provenance}, seed, opt);
  result.method = Method::SDB;
  return result;
}

/// Subsampled bootstrap: (n/N) times the average outer product of
/// subsample-minus-full-sample estimates. Replicate r uses stream (r, 0).
template <typename Scalar>
VarianceEstimate<Scalar> sb_variance(const Dataset<Scalar>& data, const EstimatorSpec<Scalar>& est, Index n,
                                     Index R, const SeedSpec& seed, const EngineOptions& opt = {},
                                     Provenance provenance = Provenance::User) {
  detail::check_subsample<Scalar>(n, R, data.rows());
  const auto setup = detail::Clock::now();
  const detail::Bound<Scalar> bound(data, est, seed);
  const Vector<Scalar> centre = bound.full_estimate();
  const double setup_seconds = detail::seconds_since(setup);
  const Index N = bound.N, k = bound.stats.rows(), d = centre.size();

  struct State {
    Vector<Scalar> sum, dev;
  };
  auto result = detail::run_chunks<Scalar>(
      R, 1, d, opt, [&] { return State{Vector<Scalar>(k), Vector<Scalar>(d)}; },
      [&](State& s, Index r, auto&& emit) {
        Stream stream = seed.stream(static_cast<std::uint64_t>(r), 0);
        s.sum.setZero();
        const auto bound_n = static_cast<std::uint64_t>(N);
        for (Index i = 0; i < n; ++i) s.sum += bound.stats.col(static_cast<Index>(stream.below(bound_n)));
        try {
          s.dev = bound.spec.finish(s.sum, static_cast<Scalar>(n)) - centre;
        } catch (const EstimationError&) {
          emit(0, nullptr);
          return;
        }
        emit(0, &s.dev);
      });
  result.matrix *= static_cast<Scalar>(n) / static_cast<Scalar>(N);
  result.method = Method::SB;
  result.params = HyperParams{n, R, 1, provenance};
  result.seed = seed.root;
  result.setup_seconds = setup_seconds;
  return result;
}

/// Plug-in (analytic) estimate: covariance of the influence values over N.
template <typename Scalar>
VarianceEstimate<Scalar> af_variance(const Dataset<Scalar>& data, const EstimatorSpec<Scalar>& est,
                                     const SeedSpec& seed = {}) {
  const auto start = detail::Clock::now();
  const auto spec = prepared(est, data, seed.derive(kPilotTag));
  const Matrix<Scalar> psi = influence_values(spec, data);
  const auto N = static_cast<Scalar>(psi.rows());
  VarianceEstimate<Scalar> result;
  result.matrix = (psi.transpose() * psi) / (N * N);
  result.method = Method::AF;
  result.params = HyperParams{psi.rows(), 1, 1, Provenance::Default};
  result.seed = seed.root;
  result.seconds = detail::seconds_since(start);
  return result;
}

template <typename Scalar>
VarianceEstimate<Scalar> run_engine(Method method, const Dataset<Scalar>& data, const EstimatorSpec<Scalar>& est,
                                    const HyperParams& hp, const SeedSpec& seed, const EngineOptions& opt = {}) {
  switch (method) {
    case Method::AF: return af_variance(data, est, seed);
    case Method::TB: return tb_variance(data, est, hp.B, seed, opt);
    case Method::BLB: return blb_variance(data, est, hp, seed, opt);
    case Method::SB:
      if (hp.B != 1) throw InvalidArgument("sb: B must be 1");
      return sb_variance(data, est, hp.n, hp.R, seed, opt, hp.provenance);
    case Method::SDB:
      if (hp.B != 1) throw InvalidArgument("sdb: B must be 1");
      return sdb_variance(data, est, hp.n, hp.R, seed, opt, hp.provenance);
  }
  throw InvalidArgument("unknown method");
}

}  // namespace subboot
