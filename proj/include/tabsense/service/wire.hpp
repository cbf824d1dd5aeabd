#pragma once

#include <string>

#include <json.hpp>

#include "tabsense/evaluation/evaluation.hpp"
#include "tabsense/gsa/efast.hpp"

namespace tabsense::service {

// Version of every JSON payload the service and the pipeline emit.
inline constexpr int kSchemaVersion = 1;

nlohmann::json ToJson(const evaluation::EvaluationReport& report);
nlohmann::json ToJson(const gsa::SobolResult& result);
nlohmann::json ToJson(const evaluation::PlotSeries& series, evaluation::SortMode sort);
nlohmann::json ToJson(const evaluation::GoodnessOfFit& fit);

// Columns: model_id,family,error.
std::string ErrorReportCsv(const evaluation::EvaluationReport& report);

}  // namespace tabsense::service
