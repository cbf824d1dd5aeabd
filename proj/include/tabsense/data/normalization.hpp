#pragma once

#include <string_view>
#include <vector>

#include "tabsense/core/matrix.hpp"

namespace tabsense::data {

enum class NormalizationMethod { kNone, kMinMax, kMeanStd };

std::string_view NormalizationName(NormalizationMethod method);
NormalizationMethod ParseNormalization(std::string_view name);

// Per-column affine map x' = (x - offset) / scale. A column with zero spread
// keeps scale 0 and maps to 0; inverting returns the stored offset.
struct NormalizationParams {
  NormalizationMethod method = NormalizationMethod::kNone;
  std::vector<double> offset;
  std::vector<double> scale;

  double Apply(size_t column, double value) const;
  double Invert(size_t column, double value) const;
  Matrix Apply(const Matrix& values) const;
  Matrix Invert(const Matrix& values) const;

  bool operator==(const NormalizationParams&) const = default;
};

// Statistics come from the given rows only (the train split).
NormalizationParams FitNormalizer(const Matrix& values, const std::vector<size_t>& rows,
                                  NormalizationMethod method);

}  // namespace tabsense::data
