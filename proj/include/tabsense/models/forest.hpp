#pragma once

#include <vector>

#include "tabsense/core/matrix.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/models/spec.hpp"
#include "tabsense/models/tree.hpp"

namespace tabsense::models {

// Averaged CART trees. Classification leaves hold class distributions (Gini
// splits); regression leaves hold per-output means (variance-reduction splits).
struct ForestState {
  std::vector<Tree> trees;
  int out_dim = 1;
};

// `targets` is n x K one-hot for classification, n x m for regression.
ForestState TrainForest(const RandomForestParams& params, data::Task task, const Matrix& inputs,
                        const Matrix& targets, uint64_t seed);

Matrix PredictForest(const ForestState& state, const Matrix& inputs);

}  // namespace tabsense::models
