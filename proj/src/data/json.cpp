#include "tabsense/data/json.hpp"

#include "tabsense/core/error.hpp"

namespace tabsense {

using nlohmann::json;

json MatrixToJson(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix MatrixFromJson(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  Require(rows >= 0 && cols >= 0 && static_cast<Eigen::Index>(data.size()) == rows * cols,
          ErrorCode::kFormat, "matrix payload has the wrong size");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json VectorToJson(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector VectorFromJson(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

}  // namespace tabsense

namespace tabsense::data {

namespace {

std::string_view KindName(FeatureKind kind) {
  return kind == FeatureKind::kNumeric ? "numeric" : "categorical";
}

std::string_view RoleName(FeatureRole role) {
  switch (role) {
    case FeatureRole::kInput: return "input";
    case FeatureRole::kOutput: return "output";
    case FeatureRole::kIgnored: return "ignored";
  }
  return "ignored";
}

}  // namespace

void to_json(json& j, const FeatureSpec& spec) {
  j = {{"name", spec.name},
       {"kind", KindName(spec.kind)},
       {"role", RoleName(spec.role)},
       {"categories", spec.categories}};
}

void from_json(const json& j, FeatureSpec& spec) {
  spec.name = j.at("name").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  Require(kind == "numeric" || kind == "categorical", ErrorCode::kFormat, "bad feature kind");
  spec.kind = kind == "numeric" ? FeatureKind::kNumeric : FeatureKind::kCategorical;
  const auto role = j.value("role", std::string("ignored"));
  spec.role = role == "input" ? FeatureRole::kInput
              : role == "output" ? FeatureRole::kOutput
                                 : FeatureRole::kIgnored;
  spec.categories = j.value("categories", std::vector<std::string>{});
}

void to_json(json& j, const EncodingSchema& schema) {
  j = {{"task", TaskName(schema.task)}, {"inputs", schema.inputs}, {"outputs", schema.outputs}};
}

void from_json(const json& j, EncodingSchema& schema) {
  schema.task = ParseTask(j.at("task").get<std::string>());
  schema.inputs = j.at("inputs").get<std::vector<FeatureSpec>>();
  schema.outputs = j.at("outputs").get<std::vector<FeatureSpec>>();
}

void to_json(json& j, const NormalizationParams& params) {
  j = {{"method", NormalizationName(params.method)},
       {"offset", params.offset},
       {"scale", params.scale}};
}

void from_json(const json& j, NormalizationParams& params) {
  params.method = ParseNormalization(j.at("method").get<std::string>());
  params.offset = j.at("offset").get<std::vector<double>>();
  params.scale = j.at("scale").get<std::vector<double>>();
  Require(params.offset.size() == params.scale.size(), ErrorCode::kFormat,
          "normalization offset/scale size mismatch");
}

void to_json(json& j, const PcaModel& pca) {
  j = {{"mean", VectorToJson(pca.mean)},
       {"loadings", MatrixToJson(pca.loadings)},
       {"eigenvalues", VectorToJson(pca.eigenvalues)},
       {"retained", pca.retained}};
}

void from_json(const json& j, PcaModel& pca) {
  pca.mean = VectorFromJson(j.at("mean"));
  pca.loadings = MatrixFromJson(j.at("loadings"));
  pca.eigenvalues = VectorFromJson(j.at("eigenvalues"));
  pca.retained = j.at("retained").get<size_t>();
}

void to_json(json& j, const BalanceReport& report) {
  j = json::array();
  for (const auto& f : report.features) {
    json entries = json::array();
    for (const auto& e : f.entries) {
      entries.push_back({{"label", e.label}, {"count", e.count}, {"fraction", e.fraction}});
    }
    j.push_back({{"feature", f.feature},
                 {"entries", entries},
                 {"imbalance_ratio", std::isfinite(f.imbalance_ratio) ? json(f.imbalance_ratio)
                                                                      : json(nullptr)}});
  }
}

void to_json(json& j, const CorrelationReport& report) {
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"first", p.first}, {"second", p.second}, {"pearson_r", p.pearson_r}});
  }
  j = {{"pairs", pairs}, {"constant_columns", report.constant_columns}};
}

}  // namespace tabsense::data
