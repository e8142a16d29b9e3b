#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "subboot/subboot.hpp"

namespace testing {

using subboot::Index;

inline subboot::Dataset<double> column(std::initializer_list<double> v) {
  subboot::Dataset<double> d;
  d.values = Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Index>(v.size()));
  return d;
}

inline subboot::Dataset<double> normal_data(Index N, Index p, std::uint64_t seed) {
  subboot::Stream s(seed);
  std::normal_distribution<double> z;
  subboot::Dataset<double> d;
  d.values.resize(N, p);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < p; ++j) d.values(i, j) = z(s);
  return d;
}

/// Asymptotic p-value of the two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    D = std::max(D, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * D;
  if (lambda < 0.2) return 1.0;
  double p = 0, sign = 1;
  for (int k = 1; k <= 100; ++k) {
    p += sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sign = -sign;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace testing
