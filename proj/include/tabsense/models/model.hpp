#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tabsense/core/matrix.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/data/normalization.hpp"
#include "tabsense/data/pca.hpp"
#include "tabsense/models/boosting.hpp"
#include "tabsense/models/forest.hpp"
#include "tabsense/models/network.hpp"
#include "tabsense/models/spec.hpp"

namespace tabsense::models {

// Models are comparable iff their fingerprints are equal.
struct FeatureFingerprint {
  std::vector<std::string> input_columns;
  std::vector<std::string> output_columns;
  data::NormalizationMethod normalization = data::NormalizationMethod::kNone;
  std::string schema_hash;

  bool operator==(const FeatureFingerprint&) const = default;
};

// Hash over the encoding schema (names, kinds, categories) and, when present,
// the PCA projection.
std::string SchemaHash(const data::EncodingSchema& schema, const data::PcaModel* pca);

// Column names of `inputs` replace the raw encoded names when PCA is on.
FeatureFingerprint MakeFingerprint(const data::EncodingSchema& schema,
                                   const std::vector<std::string>& input_columns,
                                   const std::vector<std::string>& output_columns,
                                   data::NormalizationMethod normalization,
                                   const data::PcaModel* pca = nullptr);

using ModelParameters = std::variant<ForestState, BoostedState, NetworkState>;

struct TrainedModel {
  ModelSpec spec;
  FeatureFingerprint fingerprint;
  // Kept so data loaded later can be encoded onto the model's columns.
  data::EncodingSchema schema;
  std::optional<data::PcaModel> pca;
  // Applied inside Predict; method kNone for tree families.
  data::NormalizationParams input_normalization;
  data::NormalizationParams output_normalization;
  std::vector<double> training_history;
  ModelParameters parameters;

  // Inputs are encoded columns in fingerprint order. Regression returns one
  // column per output; classification returns class probabilities.
  Matrix PredictRaw(const Matrix& inputs) const;

 private:
  static constexpr Eigen::Index kPredictBlockRows = 1024;
  Matrix PredictBlock(const Matrix& inputs) const;
};

// Checks the column names against the fingerprint before predicting.
Matrix Predict(const TrainedModel& model, const data::EncodedMatrix& inputs);

// Trains on the given rows. `targets` must be one-hot for classification.
TrainedModel TrainModel(const ModelSpec& spec, const Matrix& inputs, const Matrix& targets,
                        const FeatureFingerprint& fingerprint,
                        const data::EncodingSchema& schema = {});

// Trains on the train split of an encoded dataset; `normalization` is the
// session choice recorded in the fingerprint (networks fall back to mean_std
// when it is kNone).
TrainedModel TrainOnDataset(const ModelSpec& spec, const data::EncodedDataset& dataset,
                            data::NormalizationMethod normalization,
                            const std::optional<data::PcaModel>& pca = std::nullopt);

// Encodes a table with the model's schema (and PCA) so its columns line up
// with the fingerprint.
data::EncodedDataset EncodeForModel(const TrainedModel& model, const data::DataTable& table);

}  // namespace tabsense::models
