#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabsense/core/matrix.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/models/model.hpp"

namespace tabsense::lsa {

// Model output being explained, evaluated on a batch of encoded rows.
using ScalarFunction = std::function<Vector(const Matrix&)>;

// What the explainers see: the encoded train rows (for bins, category
// frequencies and the background), the feature groups that act as the
// explained features, and the instance.
struct ExplainContext {
  Matrix train;
  std::vector<data::FeatureGroup> groups;
  Vector instance;
  ScalarFunction function;
};

struct LimeConfig {
  int num_samples = 5000;
  int num_features = 6;
  // Default 0.75 * sqrt(number of features).
  std::optional<double> kernel_width;
  double ridge = 1.0;
  uint64_t seed = 0;
};

struct ShapConfig {
  int background_size = 100;
  int max_exact_dim = 12;
  int num_coalitions = 2048;
  uint64_t seed = 0;
};

struct LimeFeature {
  size_t group = 0;
  double coefficient = 0.0;
  // Bin edges of the instance (train min / max for the outer bins); NaN for
  // categorical features.
  double lower = 0.0;
  double upper = 0.0;
  std::string condition;
};

struct LimeResult {
  // Top features by |coefficient|, descending.
  std::vector<LimeFeature> features;
  std::vector<double> all_coefficients;
  double intercept = 0.0;
  double local_prediction = 0.0;
  double score = 0.0;
  std::vector<std::string> warnings;
};

LimeResult Lime(const ExplainContext& context, const LimeConfig& config);

struct ShapResult {
  // One value per group, in group order.
  std::vector<double> phi;
  double base_value = 0.0;
  double prediction = 0.0;
  bool exact = true;
};

// Exact enumeration when the group count is at most max_exact_dim, otherwise
// paired kernel sampling with the efficiency constraint.
ShapResult KernelShap(const ExplainContext& context, const ShapConfig& config);

// Quartile cut points of a train column, deduplicated.
std::vector<double> QuartileEdges(const std::vector<double>& values);

enum class ExplainMethod { kLime, kShap };

std::string_view ExplainMethodName(ExplainMethod method);
ExplainMethod ParseExplainMethod(std::string_view name);

struct Attribution {
  std::string feature;
  double value = 0.0;
  // LIME only.
  std::string condition;
  double lower = 0.0;
  double upper = 0.0;
};

struct FeatureValue {
  std::string column;
  double raw = 0.0;
  double normalized = 0.0;
};

struct LocalExplanation {
  ExplainMethod method = ExplainMethod::kLime;
  data::Split split = data::Split::kTest;
  size_t sample_index = 0;
  size_t table_row = 0;
  // Encoded output column explained.
  std::string target;
  double prediction = 0.0;
  double ground_truth = 0.0;
  std::string ground_truth_label;
  std::vector<std::string> class_names;
  std::vector<double> class_probabilities;
  std::vector<Attribution> attributions;
  double base_value = 0.0;
  double intercept = 0.0;
  bool exact = false;
  std::vector<FeatureValue> feature_values;
  std::vector<std::string> warnings;
};

struct ExplainRequest {
  data::Split split = data::Split::kTest;
  // Position within the split.
  size_t sample_index = 0;
  // Encoded output column; defaults to the predicted class (classification)
  // or the first output.
  std::optional<std::string> target;
};

LocalExplanation ExplainLime(const models::TrainedModel& model, const data::DataTable& table,
                             const ExplainRequest& request, const LimeConfig& config = {});
LocalExplanation ExplainShap(const models::TrainedModel& model, const data::DataTable& table,
                             const ExplainRequest& request, const ShapConfig& config = {});

// Wire payload; feature values in the normalized or raw space, everything
// else identical.
nlohmann::json ExplanationPayload(const LocalExplanation& explanation, bool normalized);

}  // namespace tabsense::lsa
