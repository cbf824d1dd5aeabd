#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tabsense/models/model.hpp"

namespace tabsense::models {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json FingerprintToJson(const FeatureFingerprint& fp);
FeatureFingerprint FingerprintFromJson(const nlohmann::json& j);

// Text container:
//   TABSENSE-MODEL
//   format_version=<int>
//   crc32=<8 hex digits over every byte except this line>
//   <JSON document: fingerprint, spec, schema, normalization, parameters>
std::string SerializeModel(const TrainedModel& model);
TrainedModel DeserializeModel(std::string_view bytes);

void SaveModel(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel LoadModel(const std::filesystem::path& path);

}  // namespace tabsense::models
