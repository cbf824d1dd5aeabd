#include "tabsense/service/wire.hpp"

#include <sstream>

#include "tabsense/core/format.hpp"
#include "tabsense/models/model_io.hpp"

namespace tabsense::service {

using nlohmann::json;

json ToJson(const evaluation::EvaluationReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"model_id", e.model_id}, {"family", models::FamilyName(e.family)}, {"error", e.error}});
  }
  json excluded = json::array();
  for (const auto& e : report.excluded) excluded.push_back({{"model_id", e.model_id}, {"reason", e.reason}});
  return {{"split", data::SplitName(report.split)},
          {"loss", metrics::LossName(report.loss)},
          {"fingerprint", models::FingerprintToJson(report.fingerprint)},
          {"rows", report.rows},
          {"entries", std::move(entries)},
          {"excluded", std::move(excluded)},
          {"best_model_id", report.best_model_id}};
}

json ToJson(const gsa::SobolResult& result) {
  json outputs = json::array();
  for (const auto& out : result.outputs) {
    json inputs = json::array();
    json s1 = json::array();
    json st = json::array();
    for (const auto& idx : out.indices) {
      inputs.push_back(idx.input);
      s1.push_back(idx.s1);
      st.push_back(idx.st);
    }
    outputs.push_back({{"output", out.output},
                       {"total_variance", out.total_variance},
                       {"inputs", std::move(inputs)},
                       {"s1", std::move(s1)},
                       {"st", std::move(st)}});
  }
  return {{"outputs", std::move(outputs)}, {"warnings", result.warnings}};
}

json ToJson(const evaluation::PlotSeries& series, evaluation::SortMode sort) {
  return {{"mode", "series"},
          {"output", series.output},
          {"sort", evaluation::SortModeName(sort)},
          {"ground_truth", series.ground_truth},
          {"prediction", series.prediction},
          {"positions", series.positions},
          {"rows", series.rows}};
}

json ToJson(const evaluation::GoodnessOfFit& fit) {
  return {{"mode", "goodness_of_fit"},
          {"output", fit.output},
          {"prediction", fit.prediction},
          {"ground_truth", fit.ground_truth},
          {"outlier", fit.outlier},
          {"rows", fit.rows},
          {"residual_std", fit.residual_std}};
}

std::string ErrorReportCsv(const evaluation::EvaluationReport& report) {
  std::ostringstream out;
  out << "model_id,family,error\n";
  for (const auto& e : report.entries) {
    out << CsvField(e.model_id) << ',' << models::FamilyName(e.family) << ',' << FormatDouble(e.error)
        << '\n';
  }
  return out.str();
}

}  // namespace tabsense::service
