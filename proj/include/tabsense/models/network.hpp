#pragma once

#include <vector>

#include "tabsense/core/matrix.hpp"
#include "tabsense/core/random.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/models/spec.hpp"

namespace tabsense::models {

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  Vector bias;
};

enum class Architecture { kMlp, kResnet };

// Layer layout:
//   MLP:    hidden layers..., output layer (ReLU between layers)
//   ResNet: input projection, then (inner, outer) per block with
//           h <- h + relu(h W1 + b1) W2 + b2, then the head on relu(h)
struct NetworkState {
  Architecture architecture = Architecture::kMlp;
  data::Task task = data::Task::kRegression;
  int blocks = 0;
  double dropout = 0.0;
  std::vector<DenseLayer> layers;

  size_t ParameterCount() const;
};

NetworkState InitNetwork(Architecture architecture, data::Task task, const NetworkParams& params,
                         int inputs, int outputs, Rng& rng);

// Raw network outputs (logits for classification).
Matrix NetworkForward(const NetworkState& net, const Matrix& inputs);

// Mean loss over the batch (MSE over all entries, or softmax cross-entropy
// against one-hot targets) and, when `grads` is given, its exact gradient.
// Dropout masks come from `dropout_rng`; pass nullptr for inference mode.
double NetworkLoss(const NetworkState& net, const Matrix& inputs, const Matrix& targets,
                   std::vector<DenseLayer>* grads, Rng* dropout_rng = nullptr);

// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6)
// with central differences of step h. Dropout is disabled for the check.
double GradientCheck(const NetworkState& net, const Matrix& inputs, const Matrix& targets,
                     double h = 1e-5);

// Mini-batch Adam. Inputs and regression targets are expected normalized.
// `history` receives the mean batch loss of every epoch.
NetworkState TrainNetwork(Architecture architecture, const NetworkParams& params, data::Task task,
                          const Matrix& inputs, const Matrix& targets, uint64_t seed,
                          std::vector<double>* history);

Matrix Softmax(const Matrix& logits);

}  // namespace tabsense::models
