#pragma once

#include <string>
#include <vector>

#include "tabsense/core/matrix.hpp"

namespace tabsense::data {

struct CorrelatedPair {
  std::string first;
  std::string second;
  double pearson_r = 0.0;
};

struct CorrelationReport {
  std::vector<CorrelatedPair> pairs;
  std::vector<std::string> constant_columns;
};

double PearsonR(const Matrix& values, Eigen::Index a, Eigen::Index b);

// All column pairs with |r| >= threshold. Zero-variance columns are skipped
// and listed separately.
CorrelationReport CheckCorrelation(const Matrix& values, const std::vector<std::string>& names,
                                   double threshold = 0.9);

}  // namespace tabsense::data
