#pragma once

#include <cmath>

#include "subboot/dataset.hpp"
#include "subboot/errors.hpp"
#include "subboot/types.hpp"

namespace subboot {

/// Centred second and fourth moments (divisor N).
///   sigma(j, k)  = mean((x_j - m_j)(x_k - m_k))
///   sigma2(j, k) = mean((x_j - m_j)^2 (x_k - m_k)^2)
template <typename Scalar = double>
struct MomentConstants {
  Index N = 0;
  Matrix<Scalar> sigma;
  Matrix<Scalar> sigma2;

  Index dim() const { return sigma.rows(); }
  Scalar sigma_sq() const { return sigma(0, 0); }
  Scalar sigma4() const { return sigma2(0, 0); }
};

/// c-constants of the MSE model.
struct MseConstants {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;

  MseConstants scaled(double k) const { return {k * c1, k * c2, k * c3, k * c4}; }
};

/// Tuner constants for BLB. Only their ratios enter the optimum.
struct TildeConstants {
  double c1 = 0, c2 = 1, c3 = 0;
};

template <typename Derived>
MomentConstants<typename Derived::Scalar> central_moments(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  const Index N = X.rows();
  if (N < 2) throw InvalidArgument("central_moments: need at least two observations");
  const Matrix<Scalar> centred = X.rowwise() - X.colwise().mean();
  const Matrix<Scalar> squared = centred.array().square().matrix();
  MomentConstants<Scalar> m;
  m.N = N;
  m.sigma = (centred.transpose() * centred) / static_cast<Scalar>(N);
  m.sigma2 = (squared.transpose() * squared) / static_cast<Scalar>(N);
  return m;
}

template <typename Scalar>
MomentConstants<Scalar> central_moments(const Dataset<Scalar>& data) {
  return central_moments(data.values);
}

template <typename Scalar>
MseConstants mse_constants(const MomentConstants<Scalar>& m) {
  MseConstants c;
  const Index p = m.dim();
  for (Index j = 0; j < p; ++j) {
    const double sjj = static_cast<double>(m.sigma(j, j));
    const double sjj2 = static_cast<double>(m.sigma2(j, j));
    c.c1 += 2.0 * sjj * sjj;
    c.c2 += sjj2 - sjj * sjj;
    c.c3 += sjj * sjj;
    for (Index k = 0; k < p; ++k) {
      if (k == j) continue;
      const double skk = static_cast<double>(m.sigma(k, k));
      const double sjk = static_cast<double>(m.sigma(j, k));
      const double sjk2 = static_cast<double>(m.sigma2(j, k));
      c.c1 += sjj * skk + sjk * sjk;
      c.c2 += sjk2 + sjk * sjk;
      c.c3 += sjk * sjk;
      c.c4 += sjk2 - sjj * skk;
    }
  }
  return c;
}

/// Relative floor on sigma4 - sigma^4 below which the kurtosis is degenerate.
inline constexpr double kKurtosisFloor = 1e-12;

template <typename Scalar>
TildeConstants univariate_tilde_constants(const MomentConstants<Scalar>& m) {
  const double s2 = static_cast<double>(m.sigma_sq());
  const double s4 = static_cast<double>(m.sigma4());
  const double excess = s4 - s2 * s2;
  if (!(excess > kKurtosisFloor * s2 * s2) || !(s2 > 0.0)) {
    throw DegenerateKurtosisError("sigma4 - sigma^4 is numerically zero");
  }
  return {2.0 * s2 * s2 / excess, 1.0, s2 * s2 / excess};
}

/// Multivariate form (c1, c2, c3). At p = 1 it is the univariate triple
/// scaled by sigma4 - sigma^4.
inline TildeConstants tilde_constants(const MseConstants& c) {
  if (!(c.c2 > kKurtosisFloor * c.c3) || !(c.c3 > 0.0)) {
    throw DegenerateKurtosisError("c2 is numerically zero");
  }
  return {c.c1, c.c2, c.c3};
}

}  // namespace subboot
