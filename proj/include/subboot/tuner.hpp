#pragma once

// Budget-constrained choice of (n, R, B) and calibration of the time
// coefficients that define the budget.
//
// Cost models, with gamma the cost exponent of one estimate in n:
//   BLB     : alpha1 n^gamma R B + alpha2 n R
//   SB, SDB : alpha n^gamma R

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subboot/errors.hpp"
#include "subboot/moments.hpp"
#include "subboot/msemodel.hpp"
#include "subboot/sampling.hpp"
#include "subboot/types.hpp"

namespace subboot {

struct CostModel {
  double alpha1 = 0;     // BLB, seconds per n^gamma R B
  double alpha2 = 0;     // BLB, seconds per n R
  double alpha_sb = 0;   // seconds per n^gamma R
  double alpha_sdb = 0;  // seconds per n^gamma R
  double gamma = 1;
  double c_max = 0;
  double r_squared = 0;  // BLB calibration fit
  double c0_blb = 0;     // pilot seconds spent calibrating each method
  double c0_sb = 0;
  double c0_sdb = 0;
};

struct TunedParams {
  Method method = Method::BLB;
  HyperParams params;
  double predicted_mse = 0;
  double predicted_time = 0;
  double slack = 0;  // budget minus predicted time
  std::vector<std::string> warnings;
};

struct TunerOptions {
  /// Pure floors of the printed closed forms instead of the rounding-aware
  /// choice; for SB/SDB also the printed (non budget-saturating) R*.
  bool paper_literal = false;
};

/// Relative slack on floating-point comparisons against the budget.
inline constexpr double kBudgetEps = 1e-12;

inline double blb_cost(Index n, Index R, Index B, double alpha1, double alpha2, double gamma = 1.0) {
  const double nn = static_cast<double>(n);
  return alpha1 * std::pow(nn, gamma) * static_cast<double>(R) * static_cast<double>(B) +
         alpha2 * nn * static_cast<double>(R);
}

inline double linear_cost(Index n, Index R, double alpha, double gamma = 1.0) {
  return alpha * std::pow(static_cast<double>(n), gamma) * static_cast<double>(R);
}

namespace detail {

inline Index floor_index(double x) {
  if (!(x >= 0.0)) return 0;
  if (x >= 9.0e18) return std::numeric_limits<Index>::max() / 4;
  return static_cast<Index>(std::floor(x * (1.0 + kBudgetEps)));
}

inline Index ceil_index(double x) {
  if (!(x >= 0.0)) return 0;
  if (x >= 9.0e18) return std::numeric_limits<Index>::max() / 4;
  return static_cast<Index>(std::ceil(x * (1.0 - kBudgetEps)));
}

/// Largest integer m >= 0 with m^e <= x, e > 0.
inline Index integer_root(double x, double e) {
  if (!(x >= 1.0)) return 0;
  Index m = floor_index(std::pow(x, 1.0 / e));
  const double tol = x * (1.0 + kBudgetEps);
  while (std::pow(static_cast<double>(m + 1), e) <= tol) ++m;
  while (m > 0 && std::pow(static_cast<double>(m), e) > tol) --m;
  return m;
}

inline bool within_budget(double cost, double c_max) { return cost <= c_max * (1.0 + kBudgetEps); }

struct Candidate {
  HyperParams hp;
  double mse = std::numeric_limits<double>::infinity();
  double cost = 0;
};

/// Lower MSE wins; near-ties go to the larger R.
inline bool better(const Candidate& a, const Candidate& b) {
  if (!std::isfinite(b.mse)) return std::isfinite(a.mse);
  if (!std::isfinite(a.mse)) return false;
  const double tol = 1e-12 * std::max(std::abs(a.mse), std::abs(b.mse));
  if (a.mse < b.mse - tol) return true;
  if (b.mse < a.mse - tol) return false;
  return a.hp.R > b.hp.R;
}

inline void warn_regime(TunedParams& t) {
  const double root_n = std::sqrt(static_cast<double>(t.params.n));
  if (t.method == Method::BLB && static_cast<double>(t.params.B) < root_n) {
    t.warnings.push_back("B* below sqrt(n): outside the asymptotic regime of the MSE model");
  }
  if (static_cast<double>(t.params.R) < root_n) {
    t.warnings.push_back("R* below sqrt(n): outside the asymptotic regime of the MSE model");
  }
}

inline void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be positive and finite");
}

}  // namespace detail

/// SB or SDB optimum for constants c (c1' = c1, c2' = c3) and a budget of
/// C_max seconds at alpha seconds per n^gamma R. With gamma = 1 the
/// continuous optimum is n = (2 c2' C / (c1' alpha))^(1/3) and R = C/(alpha n).
inline TunedParams optimal_sb_sdb(Method method, const MseConstants& c, double alpha, double c_max, Index N,
                                  double gamma = 1.0, const TunerOptions& opt = {}) {
  if (method != Method::SB && method != Method::SDB) throw InvalidArgument("optimal_sb_sdb: method must be SB or SDB");
  detail::check_positive(c.c1, "c1'");
  detail::check_positive(c.c3, "c2'");
  detail::check_positive(alpha, "alpha");
  detail::check_positive(c_max, "C_max");
  if (gamma < 1.0) throw InvalidArgument("gamma must be at least 1");
  if (N < 1) throw InvalidArgument("N must be at least 1");
  const double units = c_max / alpha;
  if (!detail::within_budget(alpha, c_max)) {
    throw InvalidArgument("C_max/alpha below 1: no (n, R) fits the budget");
  }
  const double c1p = c.c1, c2p = c.c3;
  const MseOptions objective{false};
  auto evaluate_at = [&](Index n, Index R) {
    detail::Candidate cand;
    if (n < 1 || R < 1 || n > N) return cand;
    cand.hp = HyperParams{n, R, 1, Provenance::Tuned};
    cand.cost = linear_cost(n, R, alpha, gamma);
    if (!detail::within_budget(cand.cost, c_max)) return detail::Candidate{};
    cand.mse = predict_mse(method, std::max<Index>(N, 2), cand.hp, c, objective).total;
    return cand;
  };
  auto max_R = [&](Index n) { return detail::floor_index(units / std::pow(static_cast<double>(n), gamma)); };

  const double x = 2.0 * c2p * units / (gamma * c1p);
  const Index n_floor = std::clamp<Index>(detail::integer_root(x, gamma + 2.0), 1, N);

  detail::Candidate best;
  if (opt.paper_literal) {
    Index R = gamma == 1.0
                  ? detail::floor_index(std::cbrt(c2p / (2.0 * c1p)) * std::pow(units, 2.0 / 3.0))
                  : max_R(n_floor);
    best = evaluate_at(n_floor, std::max<Index>(R, 1));
  } else {
    const double n_cont = std::min(std::pow(x, 1.0 / (gamma + 2.0)), static_cast<double>(N));
    std::vector<Index> ns = {n_floor, std::clamp<Index>(detail::ceil_index(n_cont), 1, N)};
    const double R_cont = units / std::pow(n_cont, gamma);
    for (Index R : {std::max<Index>(1, detail::floor_index(R_cont)), std::max<Index>(1, detail::ceil_index(R_cont))}) {
      ns.push_back(std::clamp<Index>(detail::integer_root(units / static_cast<double>(R), gamma), 1, N));
    }
    for (Index n : ns) {
      const auto cand = evaluate_at(n, max_R(n));
      if (detail::better(cand, best)) best = cand;
    }
  }
  if (!std::isfinite(best.mse)) {
    throw InfeasibleBudgetError("no feasible (n, R) for the budget", linear_cost(1, 1, alpha, gamma));
  }
  TunedParams t;
  t.method = method;
  t.params = best.hp;
  t.predicted_mse = best.mse;
  t.predicted_time = best.cost;
  t.slack = c_max - best.cost;
  detail::warn_regime(t);
  return t;
}

/// Form with the two primed constants only; predicted MSE then omits the
/// data term c2/N^3.
inline TunedParams optimal_sb_sdb(Method method, double c1p, double c2p, double alpha, double c_max, Index N,
                                  double gamma = 1.0, const TunerOptions& opt = {}) {
  return optimal_sb_sdb(method, MseConstants{c1p, 0.0, c2p, 0.0}, alpha, c_max, N, gamma, opt);
}

/// Default BLB subsample size floor(N^0.7), capped at N.
inline Index default_blb_n(Index N) {
  return std::clamp<Index>(detail::floor_index(std::pow(static_cast<double>(N), 0.7)), 1, std::max<Index>(N, 1));
}

/// BLB optimum at fixed n. With gamma = 1 the continuous optimum is
/// B = sqrt(c1 alpha2 / (c2 alpha1)) sqrt(n) and R = C/(alpha1 n B + alpha2 n).
/// Predicted MSE treats (c1, c2, c3) as the MSE constants.
inline TunedParams optimal_blb(const TildeConstants& c, double alpha1, double alpha2, double c_max, Index N,
                               std::optional<Index> n_override = std::nullopt, double gamma = 1.0,
                               const TunerOptions& opt = {}) {
  detail::check_positive(c.c1, "c~1");
  detail::check_positive(c.c2, "c~2");
  if (!(c.c3 >= 0.0)) throw InvalidArgument("c~3 must be non-negative");
  detail::check_positive(alpha1, "alpha1");
  if (!(alpha2 >= 0.0)) throw InvalidArgument("alpha2 must be non-negative");
  detail::check_positive(c_max, "C_max");
  if (gamma < 1.0) throw InvalidArgument("gamma must be at least 1");
  if (N < 1) throw InvalidArgument("N must be at least 1");
  const Index n = std::clamp<Index>(n_override.value_or(default_blb_n(N)), 1, N);
  const double ng = std::pow(static_cast<double>(n), gamma);
  const double nn = static_cast<double>(n);
  const MseConstants mc{c.c1, c.c2, c.c3, 0.0};

  auto evaluate_at = [&](Index R, Index B) {
    detail::Candidate cand;
    if (R < 1 || B < 1) return cand;
    cand.hp = HyperParams{n, R, B, Provenance::Tuned};
    cand.cost = blb_cost(n, R, B, alpha1, alpha2, gamma);
    if (!detail::within_budget(cand.cost, c_max)) return detail::Candidate{};
    cand.mse = predict_mse(Method::BLB, std::max<Index>(N, 2), cand.hp, mc).total;
    return cand;
  };
  auto max_R = [&](Index B) { return detail::floor_index(c_max / (alpha1 * ng * static_cast<double>(B) + alpha2 * nn)); };
  auto max_B = [&](Index R) {
    return detail::floor_index((c_max / static_cast<double>(R) - alpha2 * nn) / (alpha1 * ng));
  };

  const double B_cont = std::sqrt(c.c1 * alpha2 / (c.c2 * alpha1)) * std::pow(nn, 1.0 - gamma / 2.0);
  const Index B_floor = std::max<Index>(1, detail::floor_index(B_cont));

  detail::Candidate best;
  if (opt.paper_literal) {
    best = evaluate_at(max_R(B_floor), B_floor);
  } else {
    for (Index B : {B_floor, std::max<Index>(1, detail::ceil_index(B_cont))}) {
      const auto cand = evaluate_at(max_R(B), B);
      if (detail::better(cand, best)) best = cand;
    }
    const double R_cont = c_max / (alpha1 * ng * std::max(B_cont, 1.0) + alpha2 * nn);
    for (Index R : {std::max<Index>(1, detail::floor_index(R_cont)), std::max<Index>(1, detail::ceil_index(R_cont))}) {
      const auto cand = evaluate_at(R, max_B(R));
      if (detail::better(cand, best)) best = cand;
    }
  }
  if (!std::isfinite(best.mse)) {
    throw InfeasibleBudgetError("no feasible (R, B) for the budget at n = " + std::to_string(n),
                                blb_cost(n, 1, 1, alpha1, alpha2, gamma));
  }
  TunedParams t;
  t.method = Method::BLB;
  t.params = best.hp;
  t.predicted_mse = best.mse;
  t.predicted_time = best.cost;
  t.slack = c_max - best.cost;
  detail::warn_regime(t);
  return t;
}

/// Dispatch on method with cost exponent gamma taken from the cost model.
/// BLB uses tilde constants (c1, c2, c3); SB and SDB use c1' = c1, c2' = c3.
inline TunedParams optimal_general(Method method, const MseConstants& c, const CostModel& cost, double c_max, Index N,
                                   std::optional<Index> n_override = std::nullopt, const TunerOptions& opt = {}) {
  switch (method) {
    case Method::BLB:
      return optimal_blb(tilde_constants(c), cost.alpha1, cost.alpha2, c_max, N, n_override, cost.gamma, opt);
    case Method::SB:
      return optimal_sb_sdb(Method::SB, c, cost.alpha_sb, c_max, N, cost.gamma, opt);
    case Method::SDB:
      return optimal_sb_sdb(Method::SDB, c, cost.alpha_sdb, c_max, N, cost.gamma, opt);
    default:
      throw InvalidArgument("only BLB, SB and SDB can be tuned");
  }
}

// ---------------------------------------------------------------------------
// Calibration

struct PilotObservation {
  HyperParams params;
  double seconds = 0;
};

struct BlbCalibration {
  double alpha1 = 0;
  double alpha2 = 0;
  double r_squared = 0;
  double pilot_seconds = 0;  // C0: every pilot run, repeats included
  std::vector<PilotObservation> observations;  // medians per grid point
};

struct LinearCalibration {
  double alpha = 0;
  int rounds = 0;
  double pilot_seconds = 0;
  std::vector<double> history;  // alpha after each round
  std::vector<PilotObservation> observations;
};

/// Seconds for one timed pilot run.
using PilotRunner = std::function<double(const HyperParams&)>;

namespace detail {

inline double median_time(const PilotRunner& run, const HyperParams& hp, int repeats, double& total) {
  std::vector<double> t;
  for (int i = 0; i < std::max(repeats, 1); ++i) {
    t.push_back(run(hp));
    total += t.back();
  }
  std::sort(t.begin(), t.end());
  const std::size_t m = t.size();
  return m % 2 == 1 ? t[m / 2] : 0.5 * (t[m / 2 - 1] + t[m / 2]);
}

}  // namespace detail

/// Random distinct (R, B) pilot points with R uniform on [1, r_max] and B on
/// [1, b_max], all at subsample size n.
inline std::vector<HyperParams> blb_pilot_grid(Index n, const SeedSpec& seed, int points = 12, Index r_max = 10,
                                               Index b_max = 80) {
  if (static_cast<double>(points) > static_cast<double>(r_max) * static_cast<double>(b_max)) {
    throw InvalidArgument("pilot grid larger than the (R, B) range");
  }
  std::vector<HyperParams> grid;
  Stream stream = seed.stream(0, 0);
  while (static_cast<int>(grid.size()) < points) {
    HyperParams hp{n, 1 + static_cast<Index>(stream.below(static_cast<std::uint64_t>(r_max))),
                   1 + static_cast<Index>(stream.below(static_cast<std::uint64_t>(b_max))), Provenance::Default};
    if (std::find(grid.begin(), grid.end(), hp) == grid.end()) grid.push_back(hp);
  }
  return grid;
}

/// No-intercept least squares of time on (n^gamma R B, n R), median of
/// `repeats` runs per point.
inline BlbCalibration calibrate_blb(const PilotRunner& run, const std::vector<HyperParams>& grid, int repeats = 3,
                                    double gamma = 1.0) {
  std::vector<HyperParams> distinct;
  for (const auto& hp : grid)
    if (std::find(distinct.begin(), distinct.end(), hp) == distinct.end()) distinct.push_back(hp);
  if (distinct.size() < 3) throw CalibrationError("calibrate_blb: need at least 3 distinct pilot points");

  BlbCalibration cal;
  const auto m = static_cast<Index>(distinct.size());
  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd y(m);
  for (Index i = 0; i < m; ++i) {
    const auto& hp = distinct[static_cast<std::size_t>(i)];
    const double nR = static_cast<double>(hp.n) * static_cast<double>(hp.R);
    X(i, 0) = std::pow(static_cast<double>(hp.n), gamma) * static_cast<double>(hp.R) * static_cast<double>(hp.B);
    X(i, 1) = nR;
    y(i) = detail::median_time(run, hp, repeats, cal.pilot_seconds);
    cal.observations.push_back({hp, y(i)});
  }
  // Column scaling keeps the rank test meaningful.
  const Eigen::Vector2d scale = X.colwise().norm().transpose();
  if (!(scale.minCoeff() > 0.0)) throw CalibrationError("calibrate_blb: degenerate pilot design");
  const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < 2) throw CalibrationError("calibrate_blb: pilot design is rank deficient (vary B across points)");
  const Eigen::Vector2d coef = qr.solve(y).cwiseQuotient(scale);
  cal.alpha1 = coef(0);
  cal.alpha2 = coef(1);
  const double ss_res = (y - X * coef).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  cal.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : (ss_res == 0.0 ? 1.0 : 0.0);
  if (!(cal.alpha1 > 0.0) || !(cal.alpha2 > 0.0)) {
    throw CalibrationError("calibrate_blb: non-positive coefficient (alpha1 = " + std::to_string(cal.alpha1) +
                           ", alpha2 = " + std::to_string(cal.alpha2) + ", R^2 = " + std::to_string(cal.r_squared) +
                           ")");
  }
  return cal;
}

namespace detail {

inline double slope_through_origin(const std::vector<PilotObservation>& obs, double gamma) {
  double sxy = 0, sxx = 0;
  for (const auto& o : obs) {
    const double x = std::pow(static_cast<double>(o.params.n), gamma) * static_cast<double>(o.params.R);
    sxy += x * o.seconds;
    sxx += x * x;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace detail

/// Slope of time on n^gamma R through the origin. After the initial fit, up
/// to `max_rounds` progressive rounds re-pilot at (n*, R) and (n*, 2R) (n* from
/// `candidate_n` under the current alpha, pilot replicate count `pilot_R`, or
/// pilot_units / n* when that is larger) and refit on those points; iteration
/// stops once alpha moves by less than 2%.
inline LinearCalibration calibrate_linear(const PilotRunner& run, const std::vector<HyperParams>& initial,
                                          const std::function<Index(double)>& candidate_n = {}, int max_rounds = 3,
                                          Index pilot_R = 4, Index n_cap = std::numeric_limits<Index>::max(),
                                          int repeats = 3, double gamma = 1.0, double pilot_units = 0.0) {
  std::vector<HyperParams> distinct;
  for (const auto& hp : initial)
    if (std::find(distinct.begin(), distinct.end(), hp) == distinct.end()) distinct.push_back(hp);
  if (distinct.size() < 2) throw CalibrationError("calibrate_linear: need at least 2 distinct pilot points");

  LinearCalibration cal;
  std::vector<PilotObservation> obs;
  for (const auto& hp : distinct) obs.push_back({hp, detail::median_time(run, hp, repeats, cal.pilot_seconds)});
  cal.observations = obs;
  cal.alpha = detail::slope_through_origin(obs, gamma);
  if (!(cal.alpha > 0.0)) throw CalibrationError("calibrate_linear: non-positive slope");
  cal.history.push_back(cal.alpha);

  if (!candidate_n) return cal;
  for (int round = 0; round < max_rounds; ++round) {
    const Index n_star = std::clamp<Index>(candidate_n(cal.alpha), 1, n_cap);
    const Index R = std::max<Index>({1, pilot_R, detail::ceil_index(pilot_units / static_cast<double>(n_star))});
    // Per-unit cost varies with n, so the local rate is measured at n* itself.
    const std::vector<HyperParams> points{{n_star, R, 1, Provenance::Default}, {n_star, 2 * R, 1, Provenance::Default}};
    std::vector<PilotObservation> local;
    for (const auto& hp : points) local.push_back({hp, detail::median_time(run, hp, repeats, cal.pilot_seconds)});
    cal.observations.insert(cal.observations.end(), local.begin(), local.end());
    const double next = detail::slope_through_origin(local, gamma);
    if (!(next > 0.0)) throw CalibrationError("calibrate_linear: non-positive slope in a progressive round");
    const double change = std::abs(next - cal.alpha) / cal.alpha;
    cal.alpha = next;
    cal.history.push_back(next);
    cal.rounds = round + 1;
    if (change < 0.02) break;
  }
  return cal;
}

}  // namespace subboot
