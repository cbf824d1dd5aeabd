#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "tabsense/core/error.hpp"

namespace tabsense::service {

// Failure of one pipeline stage: config, dataset, configure, train, evaluate,
// gsa, explain or write.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCode code, const std::string& message)
      : Error(code, message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineOptions {
  // Relative dataset paths resolve against this directory.
  std::filesystem::path base_dir;
  // Replaces the config's seed when set.
  std::optional<uint64_t> seed;
};

// Runs dataset -> configure -> train* -> evaluate -> GSA -> explain from a
// config whose sections are the API request bodies, writing into `out_dir`:
//   models/<id>.model, errors.csv, evaluation.json, gsa.csv, gsa.json,
//   explanations/<n>_<method>.json, manifest.json
// The manifest is written even when a stage fails; the StageError is then
// rethrown.
nlohmann::json RunPipeline(const nlohmann::json& config, const std::filesystem::path& out_dir,
                           const PipelineOptions& options = {});

}  // namespace tabsense::service
