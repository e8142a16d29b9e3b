#pragma once

#include <string>

#include "subboot/errors.hpp"
#include "subboot/sampling.hpp"
#include "subboot/types.hpp"

namespace subboot {

/// Column-oriented sample: N observations (rows) of p coordinates, with an
/// optional response and an optional 0/1 indicator (1 = observed).
template <typename Scalar = double>
struct Dataset {
  Matrix<Scalar> values;
  Vector<Scalar> response;   // empty when absent
  Vector<Scalar> indicator;  // empty when absent

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool has_response() const { return response.size() > 0; }
  bool has_indicator() const { return indicator.size() > 0; }

  void validate() const {
    if (values.rows() < 1 || values.cols() < 1) throw InvalidArgument("dataset: need N >= 1 and p >= 1");
    if (!values.allFinite()) throw InvalidArgument("dataset: non-finite value");
    if (has_response()) {
      if (response.size() != rows()) throw InvalidArgument("dataset: response length mismatch");
      if (!response.allFinite()) throw InvalidArgument("dataset: non-finite response");
    }
    if (has_indicator()) {
      if (indicator.size() != rows()) throw InvalidArgument("dataset: indicator length mismatch");
      for (Index i = 0; i < indicator.size(); ++i) {
        if (indicator(i) != Scalar(0) && indicator(i) != Scalar(1)) {
          throw InvalidArgument("dataset: indicator must be 0/1");
        }
      }
    }
  }

  /// Rows listed in `idx`, in order (duplicates kept).
  Dataset gather(const IndexSample& idx) const {
    Dataset out;
    const auto m = static_cast<Index>(idx.size());
    out.values.resize(m, cols());
    for (Index i = 0; i < m; ++i) out.values.row(i) = values.row(idx[static_cast<std::size_t>(i)]);
    if (has_response()) {
      out.response.resize(m);
      for (Index i = 0; i < m; ++i) out.response(i) = response(idx[static_cast<std::size_t>(i)]);
    }
    if (has_indicator()) {
      out.indicator.resize(m);
      for (Index i = 0; i < m; ++i) out.indicator(i) = indicator(idx[static_cast<std::size_t>(i)]);
    }
    return out;
  }
};

/// Distinct rows plus integer multiplicities (unit weights when empty).
template <typename Scalar = double>
struct WeightedView {
  const Dataset<Scalar>* data = nullptr;
  Vector<Scalar> weights;
};

}  // namespace subboot
