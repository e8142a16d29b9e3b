#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string_view>

#include "subboot/errors.hpp"
#include "subboot/moments.hpp"
#include "subboot/types.hpp"

namespace subboot {

/// Slots of the leading-order MSE breakdown.
enum class MseTerm { N3 = 0, N2RB, N2nR, N2n2, N2R };

inline constexpr std::array<std::string_view, 5> kMseTermNames = {"1/N^3", "1/(N^2 R B)", "1/(N^2 n R)",
                                                                   "1/(N^2 n^2)", "1/(N^2 R)"};

struct MsePrediction {
  Method method = Method::AF;
  double total = 0;
  std::array<double, 5> terms{};

  double term(MseTerm t) const { return terms[static_cast<std::size_t>(t)]; }
};

struct MseOptions {
  /// Include 3 c4 / (N^2 n R) for SDB. The tuner objective leaves it out.
  bool sdb_cross_term = true;
};

/// Leading-order MSE of each SE^2 / covariance estimator.
///   AF : c2/N^3
///   TB : c2/N^3 + c1/(N^2 B)
///   BLB: c2/N^3 + c1/(N^2 R B) + c2/(N^2 n R) + c3/(N^2 n^2)
///   SB : c2/N^3 + c1/(N^2 R) + c3/(N^2 n^2)
///   SDB: as SB, plus 3 c4/(N^2 n R)
/// TB ignores n and R. SB and SDB require B = 1.
inline MsePrediction predict_mse(Method method, Index N, const HyperParams& hp, const MseConstants& c,
                                 const MseOptions& opt = {}) {
  if (N < 2) throw InvalidArgument("predict_mse: N must be at least 2");
  const double NN = static_cast<double>(N);
  const double n = static_cast<double>(hp.n);
  const double R = static_cast<double>(hp.R);
  const double B = static_cast<double>(hp.B);
  const double N2 = NN * NN;
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
  };

  MsePrediction p;
  p.method = method;
  auto set = [&](MseTerm t, double v) { p.terms[static_cast<std::size_t>(t)] = v; };
  set(MseTerm::N3, c.c2 / (N2 * NN));
  switch (method) {
    case Method::AF:
      break;
    case Method::TB:
      require(hp.B >= 1, "predict_mse: TB needs B >= 1");
      set(MseTerm::N2RB, c.c1 / (N2 * B));
      break;
    case Method::BLB:
      require(hp.n >= 1 && hp.n <= N && hp.R >= 1 && hp.B >= 1, "predict_mse: BLB needs 1<=n<=N, R>=1, B>=1");
      set(MseTerm::N2RB, c.c1 / (N2 * R * B));
      set(MseTerm::N2nR, c.c2 / (N2 * n * R));
      set(MseTerm::N2n2, c.c3 / (N2 * n * n));
      break;
    case Method::SB:
    case Method::SDB:
      require(hp.B == 1, "predict_mse: SB and SDB take no B (must be 1)");
      require(hp.n >= 1 && hp.n <= N && hp.R >= 1, "predict_mse: needs 1<=n<=N, R>=1");
      set(MseTerm::N2R, c.c1 / (N2 * R));
      set(MseTerm::N2n2, c.c3 / (N2 * n * n));
      if (method == Method::SDB && opt.sdb_cross_term) set(MseTerm::N2nR, 3.0 * c.c4 / (N2 * n * R));
      break;
  }
  for (double t : p.terms) p.total += t;
  return p;
}

/// Denominators below this make a ratio undefined.
inline constexpr double kRatioFloor = 1e-300;

/// num/den, with 1 when both vanish and NaN when only the denominator does.
inline double guarded_ratio(double num, double den) {
  const bool num_zero = std::abs(num) < kRatioFloor;
  const bool den_zero = std::abs(den) < kRatioFloor;
  if (den_zero) return num_zero ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  return num / den;
}

}  // namespace subboot
