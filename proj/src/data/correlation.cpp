#include "tabsense/data/correlation.hpp"

#include <cmath>

#include "tabsense/core/error.hpp"

namespace tabsense::data {

double PearsonR(const Matrix& values, Eigen::Index a, Eigen::Index b) {
  const auto n = static_cast<double>(values.rows());
  const double mean_a = values.col(a).sum() / n;
  const double mean_b = values.col(b).sum() / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const double da = values(r, a) - mean_a;
    const double db = values(r, b) - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

CorrelationReport CheckCorrelation(const Matrix& values, const std::vector<std::string>& names,
                                   double threshold) {
  Require(values.rows() >= 2, ErrorCode::kPrecondition, "correlation check needs at least 2 rows");
  Require(static_cast<size_t>(values.cols()) == names.size(), ErrorCode::kInvalidArgument,
          "column name count mismatch");
  CorrelationReport report;
  std::vector<bool> constant(names.size(), false);
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    constant[c] = values.col(c).maxCoeff() == values.col(c).minCoeff();
    if (constant[c]) report.constant_columns.push_back(names[c]);
  }
  for (Eigen::Index a = 0; a < values.cols(); ++a) {
    if (constant[a]) continue;
    for (Eigen::Index b = a + 1; b < values.cols(); ++b) {
      if (constant[b]) continue;
      const double r = PearsonR(values, a, b);
      if (std::abs(r) >= threshold) report.pairs.push_back({names[a], names[b], r});
    }
  }
  return report;
}

}  // namespace tabsense::data
