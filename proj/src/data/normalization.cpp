#include "tabsense/data/normalization.hpp"

#include <cmath>

#include "tabsense/core/error.hpp"

namespace tabsense::data {

std::string_view NormalizationName(NormalizationMethod method) {
  switch (method) {
    case NormalizationMethod::kNone: return "none";
    case NormalizationMethod::kMinMax: return "min_max";
    case NormalizationMethod::kMeanStd: return "mean_std";
  }
  return "none";
}

NormalizationMethod ParseNormalization(std::string_view name) {
  if (name == "none") return NormalizationMethod::kNone;
  if (name == "min_max") return NormalizationMethod::kMinMax;
  if (name == "mean_std") return NormalizationMethod::kMeanStd;
  Fail(ErrorCode::kInvalidArgument, "unknown normalization '" + std::string(name) + "'");
}

double NormalizationParams::Apply(size_t column, double value) const {
  if (method == NormalizationMethod::kNone) return value;
  const double s = scale[column];
  return s == 0.0 ? 0.0 : (value - offset[column]) / s;
}

double NormalizationParams::Invert(size_t column, double value) const {
  if (method == NormalizationMethod::kNone) return value;
  return value * scale[column] + offset[column];
}

Matrix NormalizationParams::Apply(const Matrix& values) const {
  if (method == NormalizationMethod::kNone) return values;
  Require(static_cast<size_t>(values.cols()) == scale.size(), ErrorCode::kInvalidArgument,
          "normalization column count mismatch");
  Matrix out(values.rows(), values.cols());
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out(r, c) = Apply(static_cast<size_t>(c), values(r, c));
    }
  }
  return out;
}

Matrix NormalizationParams::Invert(const Matrix& values) const {
  if (method == NormalizationMethod::kNone) return values;
  Require(static_cast<size_t>(values.cols()) == scale.size(), ErrorCode::kInvalidArgument,
          "normalization column count mismatch");
  Matrix out(values.rows(), values.cols());
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out(r, c) = Invert(static_cast<size_t>(c), values(r, c));
    }
  }
  return out;
}

NormalizationParams FitNormalizer(const Matrix& values, const std::vector<size_t>& rows,
                                  NormalizationMethod method) {
  NormalizationParams params;
  params.method = method;
  if (method == NormalizationMethod::kNone) return params;
  Require(!rows.empty(), ErrorCode::kPrecondition, "normalizer needs at least one train row");
  const auto cols = static_cast<size_t>(values.cols());
  params.offset.assign(cols, 0.0);
  params.scale.assign(cols, 0.0);
  for (size_t c = 0; c < cols; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    if (method == NormalizationMethod::kMinMax) {
      double lo = values(static_cast<Eigen::Index>(rows[0]), col);
      double hi = lo;
      for (size_t r : rows) {
        const double v = values(static_cast<Eigen::Index>(r), col);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      params.offset[c] = lo;
      params.scale[c] = hi - lo;
    } else {
      double mean = 0.0;
      for (size_t r : rows) mean += values(static_cast<Eigen::Index>(r), col);
      mean /= static_cast<double>(rows.size());
      double ss = 0.0;
      for (size_t r : rows) {
        const double d = values(static_cast<Eigen::Index>(r), col) - mean;
        ss += d * d;
      }
      params.offset[c] = mean;
      params.scale[c] = std::sqrt(ss / static_cast<double>(rows.size()));
    }
  }
  return params;
}

}  // namespace tabsense::data
