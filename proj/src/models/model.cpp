#include "tabsense/models/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "tabsense/core/checksum.hpp"
#include "tabsense/core/error.hpp"
#include "tabsense/core/parallel.hpp"
#include "tabsense/data/json.hpp"

namespace tabsense::models {

std::string SchemaHash(const data::EncodingSchema& schema, const data::PcaModel* pca) {
  nlohmann::json j = {{"schema", schema}};
  // Roles are implied by the list a feature sits in.
  for (auto& f : j["schema"]["inputs"]) f.erase("role");
  for (auto& f : j["schema"]["outputs"]) f.erase("role");
  if (pca) j["pca"] = *pca;
  char hex[9];
  std::snprintf(hex, sizeof(hex), "%08x", Crc32(j.dump()));
  return hex;
}

FeatureFingerprint MakeFingerprint(const data::EncodingSchema& schema,
                                   const std::vector<std::string>& input_columns,
                                   const std::vector<std::string>& output_columns,
                                   data::NormalizationMethod normalization,
                                   const data::PcaModel* pca) {
  FeatureFingerprint fp;
  fp.input_columns = input_columns;
  fp.output_columns = output_columns;
  fp.normalization = normalization;
  fp.schema_hash = SchemaHash(schema, pca);
  return fp;
}

namespace {

void CheckFinite(const Matrix& m, const char* what) {
  Require(m.allFinite(), ErrorCode::kDomain, std::string(what) + " contain NaN or Inf");
}

}  // namespace

Matrix TrainedModel::PredictBlock(const Matrix& inputs) const {
  const Matrix x = input_normalization.Apply(inputs);
  if (const auto* forest = std::get_if<ForestState>(&parameters)) {
    Matrix out = PredictForest(*forest, x);
    if (spec.task == data::Task::kClassification) {
      for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= out.row(r).sum();
    }
    return out;
  }
  if (const auto* boosted = std::get_if<BoostedState>(&parameters)) {
    return PredictBoosted(*boosted, x);
  }
  const auto& net = std::get<NetworkState>(parameters);
  const Matrix raw = NetworkForward(net, x);
  if (spec.task == data::Task::kClassification) return Softmax(raw);
  return output_normalization.Invert(raw);
}

Matrix TrainedModel::PredictRaw(const Matrix& inputs) const {
  Require(static_cast<size_t>(inputs.cols()) == fingerprint.input_columns.size(),
          ErrorCode::kFingerprintMismatch, "input column count does not match the model");
  const Eigen::Index n = inputs.rows();
  if (n <= kPredictBlockRows) return PredictBlock(inputs);
  // Fixed-size blocks keep every row's arithmetic independent of thread count.
  const size_t blocks = static_cast<size_t>((n + kPredictBlockRows - 1) / kPredictBlockRows);
  std::vector<Matrix> parts(blocks);
  ParallelFor(
      blocks,
      [&](size_t begin, size_t end) {
        for (size_t b = begin; b < end; ++b) {
          const Eigen::Index start = static_cast<Eigen::Index>(b) * kPredictBlockRows;
          const Eigen::Index rows = std::min(kPredictBlockRows, n - start);
          parts[b] = PredictBlock(inputs.middleRows(start, rows));
        }
      },
      1);
  Matrix out(n, parts.front().cols());
  for (size_t b = 0; b < blocks; ++b) {
    out.middleRows(static_cast<Eigen::Index>(b) * kPredictBlockRows, parts[b].rows()) = parts[b];
  }
  return out;
}

Matrix Predict(const TrainedModel& model, const data::EncodedMatrix& inputs) {
  if (inputs.column_names != model.fingerprint.input_columns) {
    Fail(ErrorCode::kFingerprintMismatch,
         "input columns do not match the model fingerprint (names and order must be identical)");
  }
  return model.PredictRaw(inputs.values);
}

TrainedModel TrainModel(const ModelSpec& spec, const Matrix& inputs, const Matrix& targets,
                        const FeatureFingerprint& fingerprint, const data::EncodingSchema& schema) {
  Require(inputs.rows() > 0, ErrorCode::kPrecondition, "no training rows");
  Require(inputs.rows() >= 2, ErrorCode::kPrecondition, "training needs at least 2 rows");
  Require(inputs.rows() == targets.rows(), ErrorCode::kInvalidArgument,
          "input and target row counts differ");
  CheckFinite(inputs, "training inputs");
  CheckFinite(targets, "training targets");
  if (spec.task == data::Task::kClassification) {
    Require(targets.cols() >= 2, ErrorCode::kInvalidArgument,
            "classification targets must be one-hot with at least two classes");
    for (Eigen::Index r = 0; r < targets.rows(); ++r) {
      const bool binary = ((targets.row(r).array() == 0.0) || (targets.row(r).array() == 1.0)).all();
      Require(binary && targets.row(r).sum() == 1.0, ErrorCode::kInvalidArgument,
              "classification targets must be one-hot");
    }
  }
  if (!fingerprint.input_columns.empty()) {
    Require(fingerprint.input_columns.size() == static_cast<size_t>(inputs.cols()),
            ErrorCode::kFingerprintMismatch, "fingerprint input columns do not match the data");
  }

  TrainedModel model;
  model.spec = spec;
  model.fingerprint = fingerprint;
  if (model.fingerprint.input_columns.empty()) {
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
      model.fingerprint.input_columns.push_back("x" + std::to_string(c + 1));
    }
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      model.fingerprint.output_columns.push_back("y" + std::to_string(c + 1));
    }
  }
  model.schema = schema;

  std::vector<size_t> all_rows(static_cast<size_t>(inputs.rows()));
  for (size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;

  switch (spec.family) {
    case Family::kRandomForest:
      model.parameters = TrainForest(spec.forest(), spec.task, inputs, targets, spec.seed);
      break;
    case Family::kGradientBoostedTrees:
      model.parameters =
          TrainBoosted(spec.boosting(), spec.task, inputs, targets, &model.training_history);
      break;
    case Family::kMlp:
    case Family::kTabularResnet: {
      auto method = fingerprint.normalization == data::NormalizationMethod::kNone
                        ? data::NormalizationMethod::kMeanStd
                        : fingerprint.normalization;
      model.input_normalization = data::FitNormalizer(inputs, all_rows, method);
      Matrix y = targets;
      if (spec.task == data::Task::kRegression) {
        model.output_normalization =
            data::FitNormalizer(targets, all_rows, data::NormalizationMethod::kMeanStd);
        y = model.output_normalization.Apply(targets);
      }
      const auto arch = spec.family == Family::kMlp ? Architecture::kMlp : Architecture::kResnet;
      model.parameters = TrainNetwork(arch, spec.network(), spec.task,
                                      model.input_normalization.Apply(inputs), y, spec.seed,
                                      &model.training_history);
      break;
    }
  }
  return model;
}

TrainedModel TrainOnDataset(const ModelSpec& spec, const data::EncodedDataset& dataset,
                            data::NormalizationMethod normalization,
                            const std::optional<data::PcaModel>& pca) {
  Require(spec.task == dataset.schema.task, ErrorCode::kInvalidArgument,
          "model task does not match the data configuration");
  const auto rows = dataset.RowsIn(data::Split::kTrain);
  Require(!rows.empty(), ErrorCode::kPrecondition, "the train split is empty");
  const auto fp = MakeFingerprint(dataset.schema, dataset.inputs.column_names,
                                  dataset.outputs.column_names, normalization,
                                  pca ? &*pca : nullptr);
  TrainedModel model = TrainModel(spec, data::SelectRows(dataset.inputs.values, rows),
                                  data::SelectRows(dataset.outputs.values, rows), fp, dataset.schema);
  model.pca = pca;
  return model;
}

data::EncodedDataset EncodeForModel(const TrainedModel& model, const data::DataTable& table) {
  Require(!model.schema.inputs.empty(), ErrorCode::kFingerprintMismatch,
          "model carries no encoding schema");
  data::EncodedDataset ds = data::Encode(table, model.schema);
  if (model.pca) ds = data::ApplyPca(ds, *model.pca);
  if (ds.inputs.column_names != model.fingerprint.input_columns) {
    Fail(ErrorCode::kFingerprintMismatch, "data does not encode onto the model's input columns");
  }
  return ds;
}

}  // namespace tabsense::models
