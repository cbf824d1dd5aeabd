#pragma once

#include <json.hpp>

#include "tabsense/core/matrix.hpp"
#include "tabsense/data/balance.hpp"
#include "tabsense/data/correlation.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/data/normalization.hpp"
#include "tabsense/data/pca.hpp"

// JSON mappings shared by the model file format and the wire protocol.
namespace tabsense {

nlohmann::json MatrixToJson(const Matrix& m);
Matrix MatrixFromJson(const nlohmann::json& j);
nlohmann::json VectorToJson(const Vector& v);
Vector VectorFromJson(const nlohmann::json& j);

}  // namespace tabsense

namespace tabsense::data {

void to_json(nlohmann::json& j, const FeatureSpec& spec);
void from_json(const nlohmann::json& j, FeatureSpec& spec);
void to_json(nlohmann::json& j, const EncodingSchema& schema);
void from_json(const nlohmann::json& j, EncodingSchema& schema);
void to_json(nlohmann::json& j, const NormalizationParams& params);
void from_json(const nlohmann::json& j, NormalizationParams& params);
void to_json(nlohmann::json& j, const PcaModel& pca);
void from_json(const nlohmann::json& j, PcaModel& pca);
void to_json(nlohmann::json& j, const BalanceReport& report);
void to_json(nlohmann::json& j, const CorrelationReport& report);

}  // namespace tabsense::data
