#include "tabsense/lsa/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabsense/core/error.hpp"
#include "tabsense/core/format.hpp"
#include "tabsense/data/normalization.hpp"

namespace tabsense::lsa {

std::string_view ExplainMethodName(ExplainMethod method) {
  return method == ExplainMethod::kLime ? "lime" : "shap";
}

ExplainMethod ParseExplainMethod(std::string_view name) {
  if (name == "lime") return ExplainMethod::kLime;
  if (name == "shap") return ExplainMethod::kShap;
  Fail(ErrorCode::kInvalidArgument, "unknown explanation method '" + std::string(name) + "'");
}

namespace {

struct Prepared {
  ExplainContext context;
  LocalExplanation explanation;
};

Prepared Prepare(const models::TrainedModel& model, const data::DataTable& table,
                 const ExplainRequest& request) {
  const data::EncodedDataset encoded = models::EncodeForModel(model, table);
  const std::vector<size_t> rows = encoded.RowsIn(request.split);
  const std::string split_name(data::SplitName(request.split));
  Require(!rows.empty(), ErrorCode::kPrecondition, "split '" + split_name + "' has no rows");
  Require(request.sample_index < rows.size(), ErrorCode::kNotFound,
          "sample index " + std::to_string(request.sample_index) + " is out of range [0, " +
              std::to_string(rows.size()) + ") for split '" + split_name + "'");
  const std::vector<size_t> train_rows = encoded.RowsIn(data::Split::kTrain);
  Require(!train_rows.empty(), ErrorCode::kPrecondition,
          "explanations need rows in the train split");

  const auto r = static_cast<Eigen::Index>(rows[request.sample_index]);
  Prepared p;
  p.context.train = data::SelectRows(encoded.inputs.values, train_rows);
  p.context.groups = data::GroupsOf(encoded.inputs, encoded.input_features);
  p.context.instance = encoded.inputs.values.row(r).transpose();

  LocalExplanation& e = p.explanation;
  e.split = request.split;
  e.sample_index = request.sample_index;
  e.table_row = encoded.source_rows[static_cast<size_t>(r)];

  const Matrix probe = model.PredictRaw(p.context.instance.transpose());
  const auto& outputs = model.fingerprint.output_columns;
  Eigen::Index target = 0;
  if (request.target) {
    const auto it = std::find(outputs.begin(), outputs.end(), *request.target);
    Require(it != outputs.end(), ErrorCode::kNotFound, "unknown output '" + *request.target + "'");
    target = static_cast<Eigen::Index>(it - outputs.begin());
  } else if (model.spec.task == data::Task::kClassification) {
    probe.row(0).maxCoeff(&target);
  }
  e.target = outputs[static_cast<size_t>(target)];
  e.prediction = probe(0, target);
  e.ground_truth = encoded.outputs.values(r, target);
  if (model.spec.task == data::Task::kClassification) {
    e.class_names = outputs;
    for (Eigen::Index c = 0; c < probe.cols(); ++c) e.class_probabilities.push_back(probe(0, c));
    Eigen::Index actual = 0;
    encoded.outputs.values.row(r).maxCoeff(&actual);
    const auto& cats = encoded.schema.outputs.front().categories;
    e.ground_truth_label = cats.at(static_cast<size_t>(actual));
  } else {
    e.ground_truth_label = FormatDouble(e.ground_truth);
  }

  const data::NormalizationParams display =
      data::FitNormalizer(encoded.inputs.values, train_rows, model.fingerprint.normalization);
  for (size_t c = 0; c < encoded.inputs.cols(); ++c) {
    const double raw = p.context.instance(static_cast<Eigen::Index>(c));
    e.feature_values.push_back({encoded.inputs.column_names[c], raw, display.Apply(c, raw)});
  }

  const models::TrainedModel* m = &model;
  p.context.function = [m, target](const Matrix& x) -> Vector { return m->PredictRaw(x).col(target); };
  return p;
}

}  // namespace

LocalExplanation ExplainLime(const models::TrainedModel& model, const data::DataTable& table,
                             const ExplainRequest& request, const LimeConfig& config) {
  Prepared p = Prepare(model, table, request);
  const LimeResult lime = Lime(p.context, config);
  LocalExplanation& e = p.explanation;
  e.method = ExplainMethod::kLime;
  e.intercept = lime.intercept;
  e.warnings = lime.warnings;
  for (const auto& f : lime.features) {
    e.attributions.push_back(
        {p.context.groups[f.group].name, f.coefficient, f.condition, f.lower, f.upper});
  }
  return e;
}

LocalExplanation ExplainShap(const models::TrainedModel& model, const data::DataTable& table,
                             const ExplainRequest& request, const ShapConfig& config) {
  Prepared p = Prepare(model, table, request);
  const ShapResult shap = KernelShap(p.context, config);
  LocalExplanation& e = p.explanation;
  e.method = ExplainMethod::kShap;
  e.base_value = shap.base_value;
  e.exact = shap.exact;
  std::vector<size_t> order(shap.phi.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return std::abs(shap.phi[a]) > std::abs(shap.phi[b]); });
  for (size_t g : order) {
    Attribution a;
    a.feature = p.context.groups[g].name;
    a.value = shap.phi[g];
    e.attributions.push_back(a);
  }
  return e;
}

nlohmann::json ExplanationPayload(const LocalExplanation& e, bool normalized) {
  nlohmann::json attributions = nlohmann::json::array();
  for (const auto& a : e.attributions) {
    nlohmann::json item{{"feature", a.feature},
                        {"attribution", a.value},
                        {"direction", a.value >= 0.0 ? "positive" : "negative"}};
    if (e.method == ExplainMethod::kLime) {
      item["condition"] = a.condition;
      item["lower"] = std::isnan(a.lower) ? nlohmann::json(nullptr) : nlohmann::json(a.lower);
      item["upper"] = std::isnan(a.upper) ? nlohmann::json(nullptr) : nlohmann::json(a.upper);
    }
    attributions.push_back(std::move(item));
  }
  nlohmann::json columns = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::array();
  for (const auto& f : e.feature_values) {
    columns.push_back(f.column);
    values.push_back(normalized ? f.normalized : f.raw);
  }
  nlohmann::json j{
      {"method", ExplainMethodName(e.method)},
      {"split", data::SplitName(e.split)},
      {"sample_index", e.sample_index},
      {"table_row", e.table_row},
      {"target", e.target},
      {"prediction", e.prediction},
      {"ground_truth", e.ground_truth},
      {"ground_truth_label", e.ground_truth_label},
      {"attributions", std::move(attributions)},
      {"feature_values",
       {{"space", normalized ? "normalized" : "raw"}, {"columns", columns}, {"values", values}}},
      {"warnings", e.warnings},
  };
  if (!e.class_names.empty()) {
    j["class_names"] = e.class_names;
    j["class_probabilities"] = e.class_probabilities;
  }
  if (e.method == ExplainMethod::kShap) {
    j["base_value"] = e.base_value;
    j["exact"] = e.exact;
  } else {
    j["intercept"] = e.intercept;
  }
  return j;
}

}  // namespace tabsense::lsa
