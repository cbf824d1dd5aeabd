#pragma once

#include <vector>

#include "tabsense/core/matrix.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/models/spec.hpp"
#include "tabsense/models/tree.hpp"

namespace tabsense::models {

// One additive ensemble per regression output, or per class for logistic
// one-vs-rest (a single ensemble for the positive class when K == 2).
struct BoostedEnsemble {
  double base_score = 0.0;
  std::vector<Tree> trees;

  double Margin(const double* row) const;
};

struct BoostedState {
  std::vector<BoostedEnsemble> ensembles;
  data::Task task = data::Task::kRegression;
  int classes = 0;
};

// Second-order boosting: leaf weight -G / (H + lambda) scaled by the learning
// rate, split gain G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda).
// Candidate thresholds are histogram cuts (midpoints between distinct values,
// at most max_bins - 1 of them per column). `history` receives the train loss
// after every round (MSE, or mean logistic loss over ensembles).
BoostedState TrainBoosted(const BoostedTreeParams& params, data::Task task, const Matrix& inputs,
                          const Matrix& targets, std::vector<double>* history);

Matrix PredictBoosted(const BoostedState& state, const Matrix& inputs);

}  // namespace tabsense::models
