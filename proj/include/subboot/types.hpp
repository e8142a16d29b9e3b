#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace subboot {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// The five standard-error routes: the analytic plug-in formula (AF) and the
/// four resampling engines.
enum class Method { AF, TB, BLB, SB, SDB };

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::AF: return "AF";
    case Method::TB: return "TB";
    case Method::BLB: return "BLB";
    case Method::SB: return "SB";
    case Method::SDB: return "SDB";
  }
  return "?";
}

enum class Provenance { User, Tuned, Default };

constexpr std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::User: return "user";
    case Provenance::Tuned: return "tuned";
    case Provenance::Default: return "default";
  }
  return "?";
}

/// Subsample size n, replicate count R, resamples per replicate B.
struct HyperParams {
  Index n = 1;
  Index R = 1;
  Index B = 1;
  Provenance provenance = Provenance::User;

  friend bool operator==(const HyperParams& a, const HyperParams& b) {
    return a.n == b.n && a.R == b.R && a.B == b.B;
  }
};

}  // namespace subboot
