#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabsense/data/encoding.hpp"

namespace tabsense::models {

enum class Family { kRandomForest, kGradientBoostedTrees, kMlp, kTabularResnet };

std::string_view FamilyName(Family family);
Family ParseFamily(std::string_view name);

struct RandomForestParams {
  int n_trees = 100;
  bool bootstrap = true;
  // 0 means unlimited.
  int max_depth = 16;
  // 0 means ceil(sqrt(d)).
  int max_features = 0;
  int min_samples_leaf = 1;
  int min_samples_split = 2;
};

struct BoostedTreeParams {
  int n_rounds = 100;
  int max_depth = 6;
  double learning_rate = 0.1;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  int max_bins = 256;
};

struct NetworkParams {
  // MLP only.
  std::vector<int> hidden_layers{64, 32};
  // Tabular ResNet only.
  int blocks = 2;
  int layer_size = 64;

  double dropout = 0.0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int batch_size = 64;
  int epochs = 25;
};

// Family + task + fully resolved hyperparameters. Construct with Make so
// unknown keys are rejected and defaults fill the rest.
struct ModelSpec {
  Family family = Family::kGradientBoostedTrees;
  data::Task task = data::Task::kRegression;
  nlohmann::json hyperparameters = nlohmann::json::object();
  uint64_t seed = 0;

  static ModelSpec Make(Family family, data::Task task,
                        const nlohmann::json& overrides = nlohmann::json::object(),
                        uint64_t seed = 0);

  RandomForestParams forest() const;
  BoostedTreeParams boosting() const;
  NetworkParams network() const;
};

nlohmann::json DefaultHyperparameters(Family family);

}  // namespace tabsense::models
