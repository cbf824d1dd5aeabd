#include "tabsense/evaluation/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tabsense/core/error.hpp"
#include "tabsense/core/parallel.hpp"

namespace tabsense::evaluation {

using data::Task;
using metrics::LossKind;

void CheckLossForTask(LossKind loss, Task task) {
  if (task == Task::kRegression) {
    Require(metrics::IsRegressionLoss(loss), ErrorCode::kPrecondition,
            "loss '" + std::string(metrics::LossName(loss)) + "' needs a classification task");
  } else {
    Require(!metrics::IsRegressionLoss(loss), ErrorCode::kPrecondition,
            "loss '" + std::string(metrics::LossName(loss)) + "' needs a regression task");
  }
}

double ModelError(const models::TrainedModel& model, const Matrix& inputs, const Matrix& targets,
                  LossKind loss) {
  CheckLossForTask(loss, model.spec.task);
  Matrix predictions = model.PredictRaw(inputs);
  if (model.spec.task == Task::kRegression) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      total += metrics::ComputeLoss(loss, predictions.col(c), targets.col(c));
    }
    return total / static_cast<double>(targets.cols());
  }
  if (loss == LossKind::kNll) {
    predictions = predictions.array().max(1e-12).log().matrix();
  }
  return metrics::ComputeLoss(loss, predictions, targets);
}

EvaluationReport EvaluateAll(const std::vector<RegisteredModel>& models,
                             const data::DataTable& table, data::Split split, LossKind loss,
                             const std::optional<models::FeatureFingerprint>& reference) {
  Require(!models.empty(), ErrorCode::kPrecondition, "no trained models to evaluate");
  EvaluationReport report;
  report.split = split;
  report.loss = loss;
  report.fingerprint = reference ? *reference : models.front().model->fingerprint;

  std::vector<const RegisteredModel*> comparable;
  for (const auto& m : models) {
    if (m.model->fingerprint == report.fingerprint) {
      comparable.push_back(&m);
    } else {
      report.excluded.push_back({m.id, "feature fingerprint differs from the evaluated selection"});
    }
  }
  Require(!comparable.empty(), ErrorCode::kPrecondition,
          "no model was trained on the current feature selection");

  const models::TrainedModel& first = *comparable.front()->model;
  CheckLossForTask(loss, first.spec.task);
  const data::EncodedDataset encoded = models::EncodeForModel(first, table);
  const std::vector<size_t> rows = encoded.RowsIn(split);
  Require(!rows.empty(), ErrorCode::kPrecondition,
          "split '" + std::string(data::SplitName(split)) + "' has no rows");
  report.rows = rows.size();
  const Matrix x = data::SelectRows(encoded.inputs.values, rows);
  const Matrix y = data::SelectRows(encoded.outputs.values, rows);

  std::vector<double> errors(comparable.size());
  ParallelFor(
      comparable.size(),
      [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) errors[i] = ModelError(*comparable[i]->model, x, y, loss);
      },
      1);

  // NaN errors never win over a finite one.
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < comparable.size(); ++i) {
    report.entries.push_back({comparable[i]->id, comparable[i]->model->spec.family, errors[i]});
    const double key = std::isnan(errors[i]) ? std::numeric_limits<double>::infinity() : errors[i];
    if (i == 0 || key < best) {
      best = key;
      report.best_model_id = comparable[i]->id;
    }
  }
  return report;
}

std::string_view SortModeName(SortMode mode) {
  switch (mode) {
    case SortMode::kNone: return "none";
    case SortMode::kGroundTruth: return "ground_truth";
    case SortMode::kPrediction: return "prediction";
  }
  return "none";
}

SortMode ParseSortMode(std::string_view name) {
  if (name == "none") return SortMode::kNone;
  if (name == "ground_truth") return SortMode::kGroundTruth;
  if (name == "prediction") return SortMode::kPrediction;
  Fail(ErrorCode::kInvalidArgument, "unknown sort mode '" + std::string(name) + "'");
}

std::vector<size_t> SortOrder(const std::vector<double>& ground_truth,
                              const std::vector<double>& prediction, SortMode mode) {
  std::vector<size_t> order(ground_truth.size());
  std::iota(order.begin(), order.end(), 0);
  if (mode == SortMode::kNone) return order;
  const auto& key = mode == SortMode::kGroundTruth ? ground_truth : prediction;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return key[a] < key[b]; });
  return order;
}

namespace {

struct SplitPredictions {
  std::vector<double> ground_truth;
  std::vector<double> prediction;
  std::vector<size_t> rows;
};

SplitPredictions PredictOutput(const models::TrainedModel& model, const data::DataTable& table,
                               data::Split split, const std::string& output) {
  const auto& names = model.fingerprint.output_columns;
  const auto it = std::find(names.begin(), names.end(), output);
  Require(it != names.end(), ErrorCode::kNotFound, "unknown output '" + output + "'");
  const auto col = static_cast<Eigen::Index>(it - names.begin());

  const data::EncodedDataset encoded = models::EncodeForModel(model, table);
  const std::vector<size_t> rows = encoded.RowsIn(split);
  Require(!rows.empty(), ErrorCode::kPrecondition,
          "split '" + std::string(data::SplitName(split)) + "' has no rows");
  const Matrix predictions = model.PredictRaw(data::SelectRows(encoded.inputs.values, rows));

  SplitPredictions out;
  for (size_t i = 0; i < rows.size(); ++i) {
    out.ground_truth.push_back(encoded.outputs.values(static_cast<Eigen::Index>(rows[i]), col));
    out.prediction.push_back(predictions(static_cast<Eigen::Index>(i), col));
    out.rows.push_back(encoded.source_rows[rows[i]]);
  }
  return out;
}

}  // namespace

PlotSeries MakePlotSeries(const models::TrainedModel& model, const data::DataTable& table,
                          data::Split split, const std::string& output, SortMode sort) {
  const SplitPredictions base = PredictOutput(model, table, split, output);
  PlotSeries series;
  series.output = output;
  for (size_t p : SortOrder(base.ground_truth, base.prediction, sort)) {
    series.ground_truth.push_back(base.ground_truth[p]);
    series.prediction.push_back(base.prediction[p]);
    series.positions.push_back(p);
    series.rows.push_back(base.rows[p]);
  }
  return series;
}

std::vector<bool> FlagOutliers(const std::vector<double>& prediction,
                               const std::vector<double>& ground_truth, double* residual_std) {
  Require(prediction.size() == ground_truth.size(), ErrorCode::kInvalidArgument,
          "prediction and ground truth lengths differ");
  const size_t n = prediction.size();
  std::vector<bool> flags(n, false);
  if (n == 0) return flags;
  double mean = 0.0;
  for (size_t i = 0; i < n; ++i) mean += prediction[i] - ground_truth[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = prediction[i] - ground_truth[i] - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (residual_std) *residual_std = sd;
  for (size_t i = 0; i < n; ++i) flags[i] = std::abs(prediction[i] - ground_truth[i]) > 3.0 * sd;
  return flags;
}

GoodnessOfFit MakeGoodnessOfFit(const models::TrainedModel& model, const data::DataTable& table,
                                data::Split split, const std::string& output) {
  Require(model.spec.task == Task::kRegression, ErrorCode::kPrecondition,
          "goodness-of-fit is available in regression mode only");
  SplitPredictions base = PredictOutput(model, table, split, output);
  GoodnessOfFit fit;
  fit.output = output;
  fit.outlier = FlagOutliers(base.prediction, base.ground_truth, &fit.residual_std);
  fit.prediction = std::move(base.prediction);
  fit.ground_truth = std::move(base.ground_truth);
  fit.rows = std::move(base.rows);
  return fit;
}

}  // namespace tabsense::evaluation
