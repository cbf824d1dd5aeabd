#include "tabsense/models/spec.hpp"

#include "tabsense/core/error.hpp"

namespace tabsense::models {

using nlohmann::json;

std::string_view FamilyName(Family family) {
  switch (family) {
    case Family::kRandomForest: return "random_forest";
    case Family::kGradientBoostedTrees: return "gradient_boosted_trees";
    case Family::kMlp: return "mlp";
    case Family::kTabularResnet: return "tabular_resnet";
  }
  return "unknown";
}

Family ParseFamily(std::string_view name) {
  if (name == "random_forest") return Family::kRandomForest;
  if (name == "gradient_boosted_trees") return Family::kGradientBoostedTrees;
  if (name == "mlp") return Family::kMlp;
  if (name == "tabular_resnet") return Family::kTabularResnet;
  Fail(ErrorCode::kInvalidArgument, "unknown model family '" + std::string(name) + "'");
}

json DefaultHyperparameters(Family family) {
  switch (family) {
    case Family::kRandomForest: {
      RandomForestParams p;
      return {{"n_trees", p.n_trees},         {"bootstrap", p.bootstrap},
              {"max_depth", p.max_depth},     {"max_features", p.max_features},
              {"min_samples_leaf", p.min_samples_leaf},
              {"min_samples_split", p.min_samples_split}};
    }
    case Family::kGradientBoostedTrees: {
      BoostedTreeParams p;
      return {{"n_rounds", p.n_rounds},   {"max_depth", p.max_depth},
              {"learning_rate", p.learning_rate}, {"lambda", p.lambda},
              {"gamma", p.gamma},         {"min_child_weight", p.min_child_weight},
              {"max_bins", p.max_bins}};
    }
    case Family::kMlp:
    case Family::kTabularResnet: {
      NetworkParams p;
      json j = {{"dropout", p.dropout},     {"learning_rate", p.learning_rate},
                {"beta1", p.beta1},         {"beta2", p.beta2},
                {"batch_size", p.batch_size}, {"epochs", p.epochs}};
      if (family == Family::kMlp) {
        j["hidden_layers"] = p.hidden_layers;
      } else {
        j["blocks"] = p.blocks;
        j["layer_size"] = p.layer_size;
      }
      return j;
    }
  }
  return json::object();
}

namespace {

void CheckType(const std::string& key, const json& value, const json& reference) {
  const bool ok = (reference.is_boolean() && value.is_boolean()) ||
                  (reference.is_number_integer() && value.is_number_integer()) ||
                  (reference.is_number_float() && value.is_number()) ||
                  (reference.is_array() && value.is_array());
  Require(ok, ErrorCode::kInvalidArgument, "hyperparameter '" + key + "' has the wrong type");
}

int PositiveInt(const json& hp, const char* key, int minimum) {
  const int v = hp.at(key).get<int>();
  Require(v >= minimum, ErrorCode::kInvalidArgument,
          std::string("hyperparameter '") + key + "' must be >= " + std::to_string(minimum));
  return v;
}

}  // namespace

ModelSpec ModelSpec::Make(Family family, data::Task task, const json& overrides, uint64_t seed) {
  Require(overrides.is_object() || overrides.is_null(), ErrorCode::kInvalidArgument,
          "hyperparameters must be an object");
  ModelSpec spec;
  spec.family = family;
  spec.task = task;
  spec.seed = seed;
  spec.hyperparameters = DefaultHyperparameters(family);
  if (overrides.is_object()) {
    for (const auto& [key, value] : overrides.items()) {
      Require(spec.hyperparameters.contains(key), ErrorCode::kInvalidArgument,
              "unknown hyperparameter '" + key + "' for " + std::string(FamilyName(family)));
      CheckType(key, value, spec.hyperparameters[key]);
      spec.hyperparameters[key] = value;
    }
  }
  // Parse once so range errors surface at construction.
  switch (family) {
    case Family::kRandomForest: spec.forest(); break;
    case Family::kGradientBoostedTrees: spec.boosting(); break;
    default: spec.network(); break;
  }
  return spec;
}

RandomForestParams ModelSpec::forest() const {
  Require(family == Family::kRandomForest, ErrorCode::kInvalidArgument, "not a random forest");
  const auto& hp = hyperparameters;
  RandomForestParams p;
  p.n_trees = PositiveInt(hp, "n_trees", 1);
  p.bootstrap = hp.at("bootstrap").get<bool>();
  p.max_depth = PositiveInt(hp, "max_depth", 0);
  p.max_features = PositiveInt(hp, "max_features", 0);
  p.min_samples_leaf = PositiveInt(hp, "min_samples_leaf", 1);
  p.min_samples_split = PositiveInt(hp, "min_samples_split", 2);
  return p;
}

BoostedTreeParams ModelSpec::boosting() const {
  Require(family == Family::kGradientBoostedTrees, ErrorCode::kInvalidArgument,
          "not a boosted tree model");
  const auto& hp = hyperparameters;
  BoostedTreeParams p;
  p.n_rounds = PositiveInt(hp, "n_rounds", 1);
  p.max_depth = PositiveInt(hp, "max_depth", 1);
  p.learning_rate = hp.at("learning_rate").get<double>();
  p.lambda = hp.at("lambda").get<double>();
  p.gamma = hp.at("gamma").get<double>();
  p.min_child_weight = hp.at("min_child_weight").get<double>();
  p.max_bins = PositiveInt(hp, "max_bins", 2);
  Require(p.learning_rate > 0, ErrorCode::kInvalidArgument, "learning_rate must be positive");
  Require(p.lambda >= 0 && p.gamma >= 0 && p.min_child_weight >= 0, ErrorCode::kInvalidArgument,
          "lambda, gamma and min_child_weight must be nonnegative");
  return p;
}

NetworkParams ModelSpec::network() const {
  Require(family == Family::kMlp || family == Family::kTabularResnet, ErrorCode::kInvalidArgument,
          "not a network model");
  const auto& hp = hyperparameters;
  NetworkParams p;
  if (family == Family::kMlp) {
    p.hidden_layers = hp.at("hidden_layers").get<std::vector<int>>();
    for (int width : p.hidden_layers) {
      Require(width >= 1, ErrorCode::kInvalidArgument, "hidden layer widths must be positive");
    }
  } else {
    p.blocks = PositiveInt(hp, "blocks", 0);
    p.layer_size = PositiveInt(hp, "layer_size", 1);
  }
  p.dropout = hp.at("dropout").get<double>();
  p.learning_rate = hp.at("learning_rate").get<double>();
  p.beta1 = hp.at("beta1").get<double>();
  p.beta2 = hp.at("beta2").get<double>();
  p.batch_size = PositiveInt(hp, "batch_size", 1);
  p.epochs = PositiveInt(hp, "epochs", 1);
  Require(p.dropout >= 0 && p.dropout < 1, ErrorCode::kInvalidArgument, "dropout must lie in [0, 1)");
  Require(p.learning_rate > 0, ErrorCode::kInvalidArgument, "learning_rate must be positive");
  Require(p.beta1 >= 0 && p.beta1 < 1 && p.beta2 >= 0 && p.beta2 < 1, ErrorCode::kInvalidArgument,
          "Adam betas must lie in [0, 1)");
  return p;
}

}  // namespace tabsense::models
