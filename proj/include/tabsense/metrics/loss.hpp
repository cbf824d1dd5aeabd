#pragma once

#include <string_view>
#include <vector>

#include "tabsense/core/matrix.hpp"

namespace tabsense::metrics {

enum class LossKind {
  kMae,
  kMse,
  kRmse,
  kMsle,
  kRmsle,
  kLogCosh,
  kHinge,
  kSmoothedHinge,
  kSquaredHinge,
  kModifiedHuber,
  kRamp,
  kCrossEntropy,
  kBinaryCrossEntropy,
  kNll,
};

// snake_case names used on the wire and in CLI flags ("mae", "log_cosh", ...).
std::string_view LossName(LossKind kind);
LossKind ParseLoss(std::string_view name);
const std::vector<LossKind>& AllLosses();

bool IsRegressionLoss(LossKind kind);
// Hinge-family losses; binary tasks only.
bool IsMarginLoss(LossKind kind);

// Mean-reduced loss.
//
// Regression kinds take predictions and targets of equal shape n x m; the mean
// runs over every entry (outputs, then samples), RMSE = sqrt(MSE) and
// RMSLE = sqrt(MSLE).
//
// Classification kinds take n x K targets that are one-hot and n x K
// predictions holding class probabilities (log-probabilities for kNll). K == 1
// is read as the positive-class column of a binary task. Margin kinds use the
// decision value f = 2p - 1 of the positive (last) class and y in {-1, +1}.
// CE / BCE clamp probabilities to [1e-12, 1 - 1e-12].
double ComputeLoss(LossKind kind, const Matrix& predictions, const Matrix& targets);

}  // namespace tabsense::metrics
