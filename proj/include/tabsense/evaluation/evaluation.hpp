#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabsense/data/table.hpp"
#include "tabsense/metrics/loss.hpp"
#include "tabsense/models/model.hpp"

namespace tabsense::evaluation {

struct RegisteredModel {
  std::string id;
  const models::TrainedModel* model = nullptr;
};

struct EvaluationEntry {
  std::string model_id;
  models::Family family = models::Family::kRandomForest;
  double error = 0.0;
};

struct ExcludedModel {
  std::string model_id;
  std::string reason;
};

struct EvaluationReport {
  data::Split split = data::Split::kValidation;
  metrics::LossKind loss = metrics::LossKind::kMse;
  models::FeatureFingerprint fingerprint;
  // In registration order.
  std::vector<EvaluationEntry> entries;
  std::vector<ExcludedModel> excluded;
  std::string best_model_id;
  size_t rows = 0;
};

// Error of one model on encoded rows. Multi-output regression averages the
// per-output losses; NLL is fed log(max(p, 1e-12)).
double ModelError(const models::TrainedModel& model, const Matrix& inputs, const Matrix& targets,
                  metrics::LossKind loss);

// Throws kPrecondition when the loss does not fit the task.
void CheckLossForTask(metrics::LossKind loss, data::Task task);

// Evaluates every model whose fingerprint equals `reference` (the first
// model's fingerprint when unset); the rest are excluded with a reason. The
// lowest error wins, earliest registration on ties.
EvaluationReport EvaluateAll(const std::vector<RegisteredModel>& models,
                             const data::DataTable& table, data::Split split,
                             metrics::LossKind loss,
                             const std::optional<models::FeatureFingerprint>& reference =
                                 std::nullopt);

enum class SortMode { kNone, kGroundTruth, kPrediction };

std::string_view SortModeName(SortMode mode);
SortMode ParseSortMode(std::string_view name);

// Stable ordering of positions 0..n-1 by the chosen key.
std::vector<size_t> SortOrder(const std::vector<double>& ground_truth,
                              const std::vector<double>& prediction, SortMode mode);

struct PlotSeries {
  std::string output;
  std::vector<double> ground_truth;
  std::vector<double> prediction;
  // Position within the split and row of the source table, per point.
  std::vector<size_t> positions;
  std::vector<size_t> rows;
};

// `output` names an encoded output column. For classification the series
// holds that class's probability against its 0/1 indicator.
PlotSeries MakePlotSeries(const models::TrainedModel& model, const data::DataTable& table,
                          data::Split split, const std::string& output, SortMode sort);

struct GoodnessOfFit {
  std::string output;
  std::vector<double> prediction;
  std::vector<double> ground_truth;
  std::vector<bool> outlier;
  std::vector<size_t> rows;
  double residual_std = 0.0;
};

// Flags |pred - gt| > 3 * std(pred - gt) (population std).
std::vector<bool> FlagOutliers(const std::vector<double>& prediction,
                               const std::vector<double>& ground_truth, double* residual_std = nullptr);

GoodnessOfFit MakeGoodnessOfFit(const models::TrainedModel& model, const data::DataTable& table,
                                data::Split split, const std::string& output);

}  // namespace tabsense::evaluation
