#include "tabsense/models/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "tabsense/core/checksum.hpp"
#include "tabsense/core/error.hpp"
#include "tabsense/data/json.hpp"
#include "tabsense/data/table.hpp"

namespace tabsense::models {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "TABSENSE-MODEL";

json TreeToJson(const Tree& tree) {
  std::vector<int32_t> feature, left, right;
  std::vector<double> threshold;
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
  }
  return {{"out_dim", tree.out_dim}, {"feature", feature}, {"threshold", threshold},
          {"left", left},            {"right", right},     {"values", tree.values}};
}

Tree TreeFromJson(const json& j) {
  Tree tree;
  tree.out_dim = j.at("out_dim").get<int>();
  const auto feature = j.at("feature").get<std::vector<int32_t>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int32_t>>();
  const auto right = j.at("right").get<std::vector<int32_t>>();
  tree.values = j.at("values").get<std::vector<double>>();
  const size_t n = feature.size();
  Require(n > 0 && threshold.size() == n && left.size() == n && right.size() == n &&
              tree.values.size() == n * static_cast<size_t>(tree.out_dim),
          ErrorCode::kFormat, "malformed tree");
  tree.nodes.resize(n);
  for (size_t i = 0; i < n; ++i) {
    tree.nodes[i] = {feature[i], threshold[i], left[i], right[i]};
    if (feature[i] >= 0) {
      Require(left[i] > 0 && right[i] > 0 && static_cast<size_t>(left[i]) < n &&
                  static_cast<size_t>(right[i]) < n,
              ErrorCode::kFormat, "tree child index out of range");
    }
  }
  return tree;
}

json ParametersToJson(const ModelParameters& params) {
  if (const auto* forest = std::get_if<ForestState>(&params)) {
    json trees = json::array();
    for (const auto& t : forest->trees) trees.push_back(TreeToJson(t));
    return {{"kind", "forest"}, {"out_dim", forest->out_dim}, {"trees", trees}};
  }
  if (const auto* boosted = std::get_if<BoostedState>(&params)) {
    json ensembles = json::array();
    for (const auto& e : boosted->ensembles) {
      json trees = json::array();
      for (const auto& t : e.trees) trees.push_back(TreeToJson(t));
      ensembles.push_back({{"base_score", e.base_score}, {"trees", trees}});
    }
    return {{"kind", "boosted"},
            {"task", data::TaskName(boosted->task)},
            {"classes", boosted->classes},
            {"ensembles", ensembles}};
  }
  const auto& net = std::get<NetworkState>(params);
  json layers = json::array();
  for (const auto& l : net.layers) {
    layers.push_back({{"weight", MatrixToJson(l.weight)}, {"bias", VectorToJson(l.bias)}});
  }
  return {{"kind", "network"},
          {"architecture", net.architecture == Architecture::kMlp ? "mlp" : "resnet"},
          {"task", data::TaskName(net.task)},
          {"blocks", net.blocks},
          {"dropout", net.dropout},
          {"layers", layers}};
}

ModelParameters ParametersFromJson(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "forest") {
    ForestState state;
    state.out_dim = j.at("out_dim").get<int>();
    for (const auto& t : j.at("trees")) state.trees.push_back(TreeFromJson(t));
    return state;
  }
  if (kind == "boosted") {
    BoostedState state;
    state.task = data::ParseTask(j.at("task").get<std::string>());
    state.classes = j.at("classes").get<int>();
    for (const auto& e : j.at("ensembles")) {
      BoostedEnsemble ensemble;
      ensemble.base_score = e.at("base_score").get<double>();
      for (const auto& t : e.at("trees")) ensemble.trees.push_back(TreeFromJson(t));
      state.ensembles.push_back(std::move(ensemble));
    }
    return state;
  }
  Require(kind == "network", ErrorCode::kFormat, "unknown parameter kind '" + kind + "'");
  NetworkState net;
  net.architecture =
      j.at("architecture").get<std::string>() == "mlp" ? Architecture::kMlp : Architecture::kResnet;
  net.task = data::ParseTask(j.at("task").get<std::string>());
  net.blocks = j.at("blocks").get<int>();
  net.dropout = j.at("dropout").get<double>();
  for (const auto& l : j.at("layers")) {
    net.layers.push_back({MatrixFromJson(l.at("weight")), VectorFromJson(l.at("bias"))});
  }
  return net;
}

std::string HexCrc(std::string_view bytes) {
  char hex[9];
  std::snprintf(hex, sizeof(hex), "%08x", Crc32(bytes));
  return hex;
}

// Reads one '\n'-terminated line starting at `pos`.
std::string_view NextLine(std::string_view bytes, size_t& pos) {
  const size_t end = bytes.find('\n', pos);
  Require(end != std::string_view::npos, ErrorCode::kChecksum, "model file is truncated");
  std::string_view line = bytes.substr(pos, end - pos);
  pos = end + 1;
  return line;
}

}  // namespace

json FingerprintToJson(const FeatureFingerprint& fp) {
  return {{"input_columns", fp.input_columns},
          {"output_columns", fp.output_columns},
          {"normalization", data::NormalizationName(fp.normalization)},
          {"schema_hash", fp.schema_hash}};
}

FeatureFingerprint FingerprintFromJson(const json& j) {
  FeatureFingerprint fp;
  fp.input_columns = j.at("input_columns").get<std::vector<std::string>>();
  fp.output_columns = j.at("output_columns").get<std::vector<std::string>>();
  fp.normalization = data::ParseNormalization(j.at("normalization").get<std::string>());
  fp.schema_hash = j.at("schema_hash").get<std::string>();
  return fp;
}

std::string SerializeModel(const TrainedModel& model) {
  json doc = {
      {"fingerprint", FingerprintToJson(model.fingerprint)},
      {"spec",
       {{"family", FamilyName(model.spec.family)},
        {"task", data::TaskName(model.spec.task)},
        {"hyperparameters", model.spec.hyperparameters},
        {"seed", model.spec.seed}}},
      {"schema", model.schema},
      {"pca", model.pca ? json(*model.pca) : json(nullptr)},
      {"input_normalization", model.input_normalization},
      {"output_normalization", model.output_normalization},
      {"training_history", model.training_history},
      {"parameters", ParametersToJson(model.parameters)},
  };
  const std::string head =
      std::string(kMagic) + "\nformat_version=" + std::to_string(kModelFormatVersion) + "\n";
  const std::string payload = doc.dump() + "\n";
  return head + "crc32=" + HexCrc(head + payload) + "\n" + payload;
}

TrainedModel DeserializeModel(std::string_view bytes) {
  size_t pos = 0;
  Require(bytes.substr(0, kMagic.size()) == kMagic, ErrorCode::kFormat, "not a model file");
  const std::string_view magic = NextLine(bytes, pos);
  Require(magic == kMagic, ErrorCode::kFormat, "not a model file");
  const std::string_view version_line = NextLine(bytes, pos);
  constexpr std::string_view kVersionKey = "format_version=";
  Require(version_line.substr(0, kVersionKey.size()) == kVersionKey, ErrorCode::kFormat,
          "model file has no format version");
  int version = 0;
  const auto digits = version_line.substr(kVersionKey.size());
  const auto parsed = std::from_chars(digits.data(), digits.data() + digits.size(), version);
  Require(parsed.ec == std::errc() && parsed.ptr == digits.data() + digits.size(),
          ErrorCode::kFormat, "model file has a malformed format version");
  Require(version == kModelFormatVersion, ErrorCode::kVersion,
          "unsupported model format version " + std::to_string(version) + " (this build reads " +
              std::to_string(kModelFormatVersion) + ")");
  const size_t head_end = pos;
  const std::string_view crc_line = NextLine(bytes, pos);
  Require(crc_line.substr(0, 6) == "crc32=", ErrorCode::kFormat, "model file has no checksum");
  std::string covered(bytes.substr(0, head_end));
  covered.append(bytes.substr(pos));
  Require(HexCrc(covered) == crc_line.substr(6), ErrorCode::kChecksum,
          "model file checksum mismatch (corrupted or truncated)");

  json doc;
  try {
    doc = json::parse(bytes.substr(pos));
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("model payload is not valid JSON: ") + e.what());
  }
  Require(doc.contains("fingerprint") && doc["fingerprint"].is_object(), ErrorCode::kFormat,
          "model file has no fingerprint");
  try {
    TrainedModel model;
    model.fingerprint = FingerprintFromJson(doc.at("fingerprint"));
    const auto& spec = doc.at("spec");
    model.spec = ModelSpec::Make(ParseFamily(spec.at("family").get<std::string>()),
                                 data::ParseTask(spec.at("task").get<std::string>()),
                                 spec.at("hyperparameters"), spec.at("seed").get<uint64_t>());
    model.schema = doc.at("schema").get<data::EncodingSchema>();
    if (!doc.at("pca").is_null()) model.pca = doc.at("pca").get<data::PcaModel>();
    model.input_normalization = doc.at("input_normalization").get<data::NormalizationParams>();
    model.output_normalization = doc.at("output_normalization").get<data::NormalizationParams>();
    model.training_history = doc.at("training_history").get<std::vector<double>>();
    model.parameters = ParametersFromJson(doc.at("parameters"));
    return model;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("malformed model payload: ") + e.what());
  }
}

void SaveModel(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIo, "cannot write model file '" + path.string() + "'");
  const std::string bytes = SerializeModel(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  Require(out.good(), ErrorCode::kIo, "failed writing model file '" + path.string() + "'");
}

TrainedModel LoadModel(const std::filesystem::path& path) {
  return DeserializeModel(data::ReadTextFile(path));
}

}  // namespace tabsense::models
