#pragma once

#include <string>
#include <vector>

#include "tabsense/core/matrix.hpp"
#include "tabsense/data/encoding.hpp"

namespace tabsense::data {

struct PcaModel {
  Vector mean;
  // Columns are unit eigenvectors of the train covariance, by descending
  // eigenvalue. All d are kept; `retained` says how many Transform emits.
  Matrix loadings;
  Vector eigenvalues;
  size_t retained = 0;

  std::vector<std::string> ComponentNames() const;
  // Scores on the retained components.
  Matrix Transform(const Matrix& values) const;
  Matrix TransformAll(const Matrix& values) const;
  Matrix InverseTransformAll(const Matrix& scores) const;
  double ExplainedFraction(size_t components) const;
};

// Fits on already-selected train rows. Keeps the smallest component count whose
// cumulative explained variance reaches `variance_kept`.
PcaModel FitPca(const Matrix& train_values, double variance_kept = 0.99);

// Replaces the dataset's inputs with scores on the retained components.
EncodedDataset ApplyPca(const EncodedDataset& dataset, const PcaModel& pca);

}  // namespace tabsense::data
