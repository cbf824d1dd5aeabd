#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabsense/data/balance.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/data/normalization.hpp"
#include "tabsense/data/pca.hpp"
#include "tabsense/data/table.hpp"
#include "tabsense/models/model.hpp"
#include "tabsense/service/jobs.hpp"

namespace tabsense::service {

// Feature selection and preprocessing choices of a session (the configure
// payload).
struct FeatureConfig {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  data::Task task = data::Task::kRegression;
  data::NormalizationMethod normalization = data::NormalizationMethod::kNone;
  data::SplitFractions fractions;
  bool pca = false;
  double pca_variance = 0.99;
  std::vector<std::string> balance_targets;
  data::BinSpec balance_bins;

  // Rejects unknown keys.
  static FeatureConfig FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

struct PreparedData {
  // Split, role-assigned and (optionally) balanced table.
  std::shared_ptr<const data::DataTable> table;
  data::EncodedDataset encoded;
  std::optional<data::PcaModel> pca;
  models::FeatureFingerprint fingerprint;
};

// Split (single-file data only), assign roles, balance, encode, PCA.
PreparedData PrepareData(const data::DataTable& raw, const FeatureConfig& config, uint64_t seed);

// What a second mutation does while one is in flight.
enum class ConflictPolicy { kReject, kQueue };

struct ServiceOptions {
  // Worker threads for jobs; 0 picks max(2, hardware threads).
  size_t workers = 0;
  ConflictPolicy conflict = ConflictPolicy::kReject;
  // Sessions' configuration and models are mirrored here when set.
  std::filesystem::path data_dir;
};

// Transport-independent session API. Every payload carries schema_version and
// the session's revision at response time. Failures throw tabsense::Error.
class Workbench {
 public:
  explicit Workbench(ServiceOptions options = {});
  ~Workbench();
  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  nlohmann::json CreateSession(const nlohmann::json& body);
  nlohmann::json GetSession(const std::string& sid) const;
  nlohmann::json ListSessions() const;

  // Body: {"csv": text, "role": hint} | {"files": {split: text}} |
  // {"path": file} | {"paths": {split: file}}.
  nlohmann::json UploadDataset(const std::string& sid, const nlohmann::json& body);
  nlohmann::json Configure(const std::string& sid, const nlohmann::json& body);

  // Starts a training job; the session stays locked for mutations until it ends.
  nlohmann::json TrainModel(const std::string& sid, const nlohmann::json& body);
  nlohmann::json ListModels(const std::string& sid) const;
  nlohmann::json GetModel(const std::string& sid, const std::string& mid) const;
  std::string DownloadModel(const std::string& sid, const std::string& mid) const;
  nlohmann::json UploadModel(const std::string& sid, const std::string& bytes);

  // Evaluates and enqueues GSA on the best model.
  nlohmann::json Evaluate(const std::string& sid, const nlohmann::json& body);
  nlohmann::json GetEvaluation(const std::string& sid) const;
  nlohmann::json GetPlot(const std::string& sid, const nlohmann::json& query) const;

  // `pending` is set when the result is still being computed.
  nlohmann::json GetGsa(const std::string& sid, bool* pending = nullptr) const;
  nlohmann::json StartGsa(const std::string& sid, const nlohmann::json& body);

  nlohmann::json Explain(const std::string& sid, const nlohmann::json& body);

  nlohmann::json Balance(const std::string& sid, const nlohmann::json& body) const;
  nlohmann::json Correlation(const std::string& sid, const nlohmann::json& body) const;

  // `sid` restricts the lookup to one session when non-empty.
  nlohmann::json GetJob(const std::string& jid, const std::string& sid = {}) const;
  bool WaitJob(const std::string& jid,
               std::chrono::milliseconds timeout = std::chrono::milliseconds::max()) const;

  uint64_t Revision(const std::string& sid) const;

 private:
  struct Session;
  class MutationToken;

  std::shared_ptr<Session> Find(const std::string& sid) const;
  std::shared_ptr<MutationToken> BeginMutation(const std::shared_ptr<Session>& session);
  nlohmann::json Envelope(const Session& session, nlohmann::json payload) const;
  std::string EnqueueGsa(const std::shared_ptr<Session>& session,
                         std::shared_ptr<const models::TrainedModel> model,
                         const std::string& model_id, data::Split split, const nlohmann::json& body);
  void Persist(const Session& session) const;
  void Restore();

  ServiceOptions options_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  uint64_t next_session_ = 1;
  // Declared last so workers stop before sessions are destroyed.
  std::unique_ptr<JobManager> jobs_;
};

}  // namespace tabsense::service
