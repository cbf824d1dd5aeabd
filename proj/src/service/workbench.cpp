#include "tabsense/service/workbench.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <set>
#include <thread>

#include "tabsense/core/error.hpp"
#include "tabsense/core/format.hpp"
#include "tabsense/data/correlation.hpp"
#include "tabsense/data/json.hpp"
#include "tabsense/evaluation/evaluation.hpp"
#include "tabsense/gsa/efast.hpp"
#include "tabsense/lsa/explain.hpp"
#include "tabsense/models/model_io.hpp"
#include "tabsense/service/wire.hpp"

namespace tabsense::service {

using nlohmann::json;

namespace {

void CheckKeys(const json& body, std::initializer_list<std::string_view> allowed,
               std::string_view what) {
  Require(body.is_object(), ErrorCode::kInvalidArgument, std::string(what) + " must be a JSON object");
  for (const auto& item : body.items()) {
    const bool known = std::find(allowed.begin(), allowed.end(), item.key()) != allowed.end();
    Require(known, ErrorCode::kInvalidArgument,
            "unknown key '" + item.key() + "' in " + std::string(what));
  }
}

template <typename T>
T Field(const json& body, const char* key, T fallback) {
  if (!body.contains(key) || body.at(key).is_null()) return fallback;
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    Fail(ErrorCode::kInvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

std::string RequiredString(const json& body, const char* key) {
  Require(body.contains(key) && body.at(key).is_string(), ErrorCode::kInvalidArgument,
          std::string("field '") + key + "' (string) is required");
  return body.at(key).get<std::string>();
}

json DatasetSummary(const data::DataTable& table) {
  json features = json::array();
  for (size_t f = 0; f < table.schema.size(); ++f) {
    const auto& spec = table.schema[f];
    size_t missing = 0;
    for (size_t r = 0; r < table.rows(); ++r) missing += table.columns[f].IsMissing(r) ? 1 : 0;
    features.push_back({{"name", spec.name},
                        {"kind", spec.kind == data::FeatureKind::kNumeric ? "numeric" : "categorical"},
                        {"categories", spec.categories},
                        {"missing", missing}});
  }
  return {{"rows", table.rows()},
          {"source", table.source == data::DataSource::kSeparateFiles ? "separate_files"
                                                                      : "single_file_split"},
          {"features", std::move(features)}};
}

json SplitCounts(const data::EncodedDataset& ds) {
  return {{"train", ds.RowsIn(data::Split::kTrain).size()},
          {"validation", ds.RowsIn(data::Split::kValidation).size()},
          {"test", ds.RowsIn(data::Split::kTest).size()}};
}

void WriteFileAtomically(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    Require(out.good(), ErrorCode::kIo, "cannot write '" + tmp + "'");
    out << bytes;
    Require(out.good(), ErrorCode::kIo, "cannot write '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

lsa::LimeConfig LimeConfigFrom(const json& j, uint64_t seed) {
  CheckKeys(j, {"num_samples", "num_features", "kernel_width", "ridge"}, "lime options");
  lsa::LimeConfig c;
  c.num_samples = Field(j, "num_samples", c.num_samples);
  c.num_features = Field(j, "num_features", c.num_features);
  if (j.contains("kernel_width") && !j.at("kernel_width").is_null()) {
    c.kernel_width = Field(j, "kernel_width", 0.0);
  }
  c.ridge = Field(j, "ridge", c.ridge);
  c.seed = seed;
  return c;
}

lsa::ShapConfig ShapConfigFrom(const json& j, uint64_t seed) {
  CheckKeys(j, {"background_size", "max_exact_dim", "num_coalitions"}, "shap options");
  lsa::ShapConfig c;
  c.background_size = Field(j, "background_size", c.background_size);
  c.max_exact_dim = Field(j, "max_exact_dim", c.max_exact_dim);
  c.num_coalitions = Field(j, "num_coalitions", c.num_coalitions);
  c.seed = seed;
  return c;
}

}  // namespace

FeatureConfig FeatureConfig::FromJson(const json& j) {
  CheckKeys(j, {"inputs", "outputs", "task", "normalization", "split", "pca", "balance"},
            "feature configuration");
  FeatureConfig c;
  c.inputs = Field(j, "inputs", std::vector<std::string>{});
  c.outputs = Field(j, "outputs", std::vector<std::string>{});
  c.task = data::ParseTask(Field<std::string>(j, "task", "regression"));
  c.normalization = data::ParseNormalization(Field<std::string>(j, "normalization", "none"));
  if (j.contains("split")) {
    const json& s = j.at("split");
    CheckKeys(s, {"train", "validation", "test"}, "split fractions");
    c.fractions.train = Field(s, "train", c.fractions.train);
    c.fractions.validation = Field(s, "validation", c.fractions.validation);
    c.fractions.test = Field(s, "test", c.fractions.test);
  }
  if (j.contains("pca")) {
    const json& p = j.at("pca");
    CheckKeys(p, {"enabled", "variance_kept"}, "pca options");
    c.pca = Field(p, "enabled", false);
    c.pca_variance = Field(p, "variance_kept", c.pca_variance);
  }
  if (j.contains("balance")) {
    const json& b = j.at("balance");
    CheckKeys(b, {"targets", "bins"}, "balance options");
    c.balance_targets = Field(b, "targets", std::vector<std::string>{});
    c.balance_bins = Field(b, "bins", data::BinSpec{});
  }
  Require(!c.inputs.empty(), ErrorCode::kInvalidArgument, "select at least one input feature");
  Require(!c.outputs.empty(), ErrorCode::kInvalidArgument, "select at least one output feature");
  return c;
}

json FeatureConfig::ToJson() const {
  return {{"inputs", inputs},
          {"outputs", outputs},
          {"task", data::TaskName(task)},
          {"normalization", data::NormalizationName(normalization)},
          {"split", {{"train", fractions.train}, {"validation", fractions.validation}, {"test", fractions.test}}},
          {"pca", {{"enabled", pca}, {"variance_kept", pca_variance}}},
          {"balance", {{"targets", balance_targets}, {"bins", balance_bins}}}};
}

PreparedData PrepareData(const data::DataTable& raw, const FeatureConfig& config, uint64_t seed) {
  data::DataTable table = raw.source == data::DataSource::kSingleFileSplit
                              ? data::SplitRandom(raw, config.fractions, seed)
                              : raw;
  table = data::AssignRoles(table, config.inputs, config.outputs);
  if (!config.balance_targets.empty()) {
    table = data::ApplyBalancing(table, config.balance_targets, config.balance_bins, seed);
  }
  PreparedData prepared;
  const data::EncodingSchema schema = data::MakeEncodingSchema(table, config.task);
  prepared.encoded = data::Encode(table, schema);
  if (config.pca) {
    const auto train = prepared.encoded.RowsIn(data::Split::kTrain);
    Require(train.size() >= 2, ErrorCode::kPrecondition, "PCA needs at least 2 train rows");
    prepared.pca = data::FitPca(data::SelectRows(prepared.encoded.inputs.values, train),
                                config.pca_variance);
    prepared.encoded = data::ApplyPca(prepared.encoded, *prepared.pca);
  }
  prepared.fingerprint = models::MakeFingerprint(
      schema, prepared.encoded.inputs.column_names, prepared.encoded.outputs.column_names,
      config.normalization, prepared.pca ? &*prepared.pca : nullptr);
  prepared.table = std::make_shared<const data::DataTable>(std::move(table));
  return prepared;
}

struct ModelRecord {
  std::string id;
  models::Family family = models::Family::kGradientBoostedTrees;
  // training | ready | failed
  std::string status;
  std::string job_id;
  std::string error;
  bool uploaded = false;
  std::shared_ptr<const models::TrainedModel> model;
};

struct Workbench::Session {
  std::string id;
  uint64_t seed = 0;

  mutable std::mutex mutex;
  std::condition_variable idle;
  bool busy = false;

  uint64_t revision = 0;
  std::shared_ptr<const data::DataTable> raw;
  std::optional<FeatureConfig> config;
  std::shared_ptr<const PreparedData> prepared;
  std::vector<ModelRecord> models;
  uint64_t next_model = 1;
  std::optional<evaluation::EvaluationReport> evaluation;
  // Bumped whenever evaluation results are replaced or invalidated.
  uint64_t epoch = 0;
  std::optional<gsa::SobolResult> gsa;
  std::string gsa_job;
  std::string gsa_model;
  data::Split gsa_split = data::Split::kValidation;

  ModelRecord* FindModel(const std::string& mid) {
    for (auto& m : models) {
      if (m.id == mid) return &m;
    }
    return nullptr;
  }

  // Caller holds `mutex`.
  void Invalidate() {
    evaluation.reset();
    gsa.reset();
    gsa_job.clear();
    gsa_model.clear();
    ++epoch;
  }
};

// Holds a session's single mutation slot until released or destroyed.
class Workbench::MutationToken {
 public:
  explicit MutationToken(std::shared_ptr<Session> session) : session_(std::move(session)) {}
  ~MutationToken() { Release(); }
  MutationToken(const MutationToken&) = delete;
  MutationToken& operator=(const MutationToken&) = delete;

  void Release() {
    if (!session_) return;
    {
      std::lock_guard lock(session_->mutex);
      session_->busy = false;
    }
    session_->idle.notify_all();
    session_.reset();
  }

 private:
  std::shared_ptr<Session> session_;
};

Workbench::Workbench(ServiceOptions options) : options_(std::move(options)) {
  size_t workers = options_.workers;
  if (workers == 0) workers = std::max<size_t>(2, std::thread::hardware_concurrency());
  jobs_ = std::make_unique<JobManager>(workers);
  if (!options_.data_dir.empty()) Restore();
}

Workbench::~Workbench() { jobs_.reset(); }

std::shared_ptr<Workbench::Session> Workbench::Find(const std::string& sid) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(sid);
  Require(it != sessions_.end(), ErrorCode::kNotFound, "unknown session '" + sid + "'");
  return it->second;
}

std::shared_ptr<Workbench::MutationToken> Workbench::BeginMutation(
    const std::shared_ptr<Session>& session) {
  std::unique_lock lock(session->mutex);
  if (session->busy) {
    Require(options_.conflict == ConflictPolicy::kQueue, ErrorCode::kConflict,
            "another mutating operation is in flight for this session");
    session->idle.wait(lock, [&] { return !session->busy; });
  }
  session->busy = true;
  return std::make_shared<MutationToken>(session);
}

json Workbench::Envelope(const Session& session, json payload) const {
  std::lock_guard lock(session.mutex);
  payload["schema_version"] = kSchemaVersion;
  payload["session_id"] = session.id;
  payload["revision"] = session.revision;
  return payload;
}

uint64_t Workbench::Revision(const std::string& sid) const {
  auto session = Find(sid);
  std::lock_guard lock(session->mutex);
  return session->revision;
}

json Workbench::CreateSession(const json& body) {
  const json b = body.is_null() ? json::object() : body;
  CheckKeys(b, {"seed"}, "session request");
  auto session = std::make_shared<Session>();
  session->seed = Field<uint64_t>(b, "seed", 0);
  {
    std::lock_guard lock(sessions_mutex_);
    session->id = "s" + std::to_string(next_session_++);
    sessions_[session->id] = session;
  }
  Persist(*session);
  return Envelope(*session, {{"seed", session->seed}});
}

json Workbench::ListSessions() const {
  json list = json::array();
  std::lock_guard lock(sessions_mutex_);
  for (const auto& [id, s] : sessions_) {
    std::lock_guard slock(s->mutex);
    list.push_back({{"session_id", id}, {"revision", s->revision}});
  }
  return {{"schema_version", kSchemaVersion}, {"sessions", std::move(list)}};
}

json Workbench::GetSession(const std::string& sid) const {
  auto session = Find(sid);
  json out;
  {
    std::lock_guard lock(session->mutex);
    out["seed"] = session->seed;
    out["dataset"] = session->raw ? DatasetSummary(*session->raw) : json(nullptr);
    out["config"] = session->config ? session->config->ToJson() : json(nullptr);
    out["fingerprint"] = session->prepared ? models::FingerprintToJson(session->prepared->fingerprint)
                                           : json(nullptr);
    out["models"] = session->models.size();
    out["best_model_id"] = session->evaluation ? json(session->evaluation->best_model_id) : json(nullptr);
    out["gsa_available"] = session->gsa.has_value();
    out["busy"] = session->busy;
  }
  return Envelope(*session, std::move(out));
}

json Workbench::UploadDataset(const std::string& sid, const json& body) {
  auto session = Find(sid);
  CheckKeys(body, {"csv", "role", "files", "path", "paths"}, "dataset upload");
  auto token = BeginMutation(session);

  data::DataTable table;
  auto load_parts = [&](const json& parts, bool paths) {
    CheckKeys(parts, {"train", "validation", "test"}, paths ? "dataset paths" : "dataset files");
    std::vector<data::CsvDocument> docs;
    std::vector<data::RoleHint> hints;
    for (const char* role : {"train", "validation", "test"}) {
      if (!parts.contains(role)) continue;
      const std::string value = RequiredString(parts, role);
      docs.push_back(data::ParseCsvDocument(paths ? data::ReadTextFile(value) : value));
      hints.push_back(data::ParseRoleHint(role));
    }
    Require(!docs.empty(), ErrorCode::kInvalidArgument, "no dataset files given");
    return data::BuildTable(docs, hints);
  };
  if (body.contains("csv")) {
    table = data::ParseCsv(RequiredString(body, "csv"),
                           data::ParseRoleHint(Field<std::string>(body, "role", "all")));
  } else if (body.contains("path")) {
    table = data::LoadCsv(RequiredString(body, "path"),
                          data::ParseRoleHint(Field<std::string>(body, "role", "all")));
  } else if (body.contains("files")) {
    table = load_parts(body.at("files"), false);
  } else if (body.contains("paths")) {
    table = load_parts(body.at("paths"), true);
  } else {
    Fail(ErrorCode::kInvalidArgument, "dataset upload needs 'csv', 'files', 'path' or 'paths'");
  }
  auto raw = std::make_shared<const data::DataTable>(std::move(table));

  // A configuration kept from before (or restored from disk) is re-applied.
  std::optional<FeatureConfig> config;
  {
    std::lock_guard lock(session->mutex);
    config = session->config;
  }
  std::shared_ptr<const PreparedData> prepared;
  json warnings = json::array();
  if (config) {
    try {
      prepared = std::make_shared<const PreparedData>(PrepareData(*raw, *config, session->seed));
    } catch (const Error& e) {
      warnings.push_back(std::string("previous feature configuration no longer applies: ") + e.what());
      config.reset();
    }
  }
  {
    std::lock_guard lock(session->mutex);
    session->raw = raw;
    session->config = config;
    session->prepared = prepared;
    session->Invalidate();
    ++session->revision;
  }
  token->Release();
  return Envelope(*session, {{"dataset", DatasetSummary(*raw)},
                             {"configured", prepared != nullptr},
                             {"warnings", std::move(warnings)}});
}

json Workbench::Configure(const std::string& sid, const json& body) {
  auto session = Find(sid);
  const FeatureConfig config = FeatureConfig::FromJson(body);
  auto token = BeginMutation(session);
  std::shared_ptr<const data::DataTable> raw;
  {
    std::lock_guard lock(session->mutex);
    raw = session->raw;
  }
  Require(raw != nullptr, ErrorCode::kPrecondition, "upload a dataset before configuring features");
  auto prepared = std::make_shared<const PreparedData>(PrepareData(*raw, config, session->seed));

  json warnings = json::array();
  const auto train = prepared->encoded.RowsIn(data::Split::kTrain);
  if (train.size() >= 2) {
    const auto corr = data::CheckCorrelation(data::SelectRows(prepared->encoded.inputs.values, train),
                                             prepared->encoded.inputs.column_names);
    for (const auto& p : corr.pairs) {
      warnings.push_back("inputs '" + p.first + "' and '" + p.second + "' are correlated (r = " +
                         FormatDouble(p.pearson_r) + ")");
    }
  }
  {
    std::lock_guard lock(session->mutex);
    session->config = config;
    session->prepared = prepared;
    session->Invalidate();
    ++session->revision;
  }
  token->Release();
  Persist(*session);

  json out{{"fingerprint", models::FingerprintToJson(prepared->fingerprint)},
           {"rows", SplitCounts(prepared->encoded)},
           {"dropped_rows", prepared->encoded.dropped_rows},
           {"warnings", std::move(warnings)}};
  if (prepared->pca) {
    out["pca"] = {{"components", prepared->pca->retained},
                  {"explained_fraction", prepared->pca->ExplainedFraction(prepared->pca->retained)}};
  }
  return Envelope(*session, std::move(out));
}

json Workbench::TrainModel(const std::string& sid, const json& body) {
  auto session = Find(sid);
  CheckKeys(body, {"family", "hyperparameters", "seed"}, "train request");
  std::shared_ptr<const PreparedData> prepared;
  std::optional<FeatureConfig> config;
  {
    std::lock_guard lock(session->mutex);
    prepared = session->prepared;
    config = session->config;
  }
  Require(prepared != nullptr, ErrorCode::kPrecondition, "configure features before training");
  const auto family = models::ParseFamily(RequiredString(body, "family"));
  const json hyper = Field(body, "hyperparameters", json::object());
  const auto spec = models::ModelSpec::Make(family, config->task, hyper,
                                            Field<uint64_t>(body, "seed", session->seed));

  auto token = BeginMutation(session);
  std::string mid;
  {
    std::lock_guard lock(session->mutex);
    // The configuration may have changed while waiting for the slot.
    prepared = session->prepared;
    config = session->config;
    Require(prepared != nullptr && config && config->task == spec.task, ErrorCode::kPrecondition,
            "feature configuration changed; resubmit the training request");
    mid = "m" + std::to_string(session->next_model++);
    ModelRecord record;
    record.id = mid;
    record.family = family;
    record.status = "training";
    session->models.push_back(std::move(record));
    ++session->revision;
  }

  auto trained = std::make_shared<std::shared_ptr<const models::TrainedModel>>();
  const auto normalization = config->normalization;
  const std::string job = jobs_->Submit(
      JobKind::kTrain, sid,
      [prepared, spec, normalization, trained, mid](JobContext& ctx) -> json {
        ctx.SetProgress(0.0);
        auto model = std::make_shared<const models::TrainedModel>(
            models::TrainOnDataset(spec, prepared->encoded, normalization, prepared->pca));
        *trained = model;
        json out{{"model_id", mid}, {"history", model->training_history}};
        return out;
      },
      [this, session, trained, mid, token](const JobSnapshot& outcome) {
        {
          std::lock_guard lock(session->mutex);
          if (ModelRecord* record = session->FindModel(mid)) {
            if (outcome.status == JobStatus::kDone) {
              record->status = "ready";
              record->model = *trained;
            } else {
              record->status = "failed";
              record->error = outcome.error;
            }
          }
          ++session->revision;
        }
        Persist(*session);
        token->Release();
      });
  {
    std::lock_guard lock(session->mutex);
    if (ModelRecord* record = session->FindModel(mid)) record->job_id = job;
  }
  return Envelope(*session, {{"job_id", job}, {"model_id", mid}});
}

json Workbench::ListModels(const std::string& sid) const {
  auto session = Find(sid);
  json list = json::array();
  {
    std::lock_guard lock(session->mutex);
    for (const auto& m : session->models) {
      json item{{"model_id", m.id},
                {"family", models::FamilyName(m.family)},
                {"status", m.status},
                {"job_id", m.job_id},
                {"uploaded", m.uploaded}};
      if (!m.error.empty()) item["error"] = m.error;
      if (m.model) {
        item["comparable"] = session->prepared && m.model->fingerprint == session->prepared->fingerprint;
        item["hyperparameters"] = m.model->spec.hyperparameters;
        item["seed"] = m.model->spec.seed;
        item["task"] = data::TaskName(m.model->spec.task);
      }
      list.push_back(std::move(item));
    }
  }
  return Envelope(*session, {{"models", std::move(list)}});
}

json Workbench::GetModel(const std::string& sid, const std::string& mid) const {
  auto session = Find(sid);
  json out;
  {
    std::lock_guard lock(session->mutex);
    ModelRecord* m = session->FindModel(mid);
    Require(m != nullptr, ErrorCode::kNotFound, "unknown model '" + mid + "'");
    out = {{"model_id", m->id}, {"family", models::FamilyName(m->family)}, {"status", m->status},
           {"job_id", m->job_id}};
    if (m->model) {
      out["fingerprint"] = models::FingerprintToJson(m->model->fingerprint);
      out["hyperparameters"] = m->model->spec.hyperparameters;
      out["seed"] = m->model->spec.seed;
      out["training_history"] = m->model->training_history;
    }
    if (!m->error.empty()) out["error"] = m->error;
  }
  return Envelope(*session, std::move(out));
}

std::string Workbench::DownloadModel(const std::string& sid, const std::string& mid) const {
  auto session = Find(sid);
  std::shared_ptr<const models::TrainedModel> model;
  {
    std::lock_guard lock(session->mutex);
    ModelRecord* m = session->FindModel(mid);
    Require(m != nullptr, ErrorCode::kNotFound, "unknown model '" + mid + "'");
    Require(m->model != nullptr, ErrorCode::kPrecondition, "model '" + mid + "' is not trained");
    model = m->model;
  }
  return models::SerializeModel(*model);
}

json Workbench::UploadModel(const std::string& sid, const std::string& bytes) {
  auto session = Find(sid);
  auto model = std::make_shared<const models::TrainedModel>(models::DeserializeModel(bytes));
  auto token = BeginMutation(session);
  std::string mid;
  bool comparable = false;
  {
    std::lock_guard lock(session->mutex);
    mid = "m" + std::to_string(session->next_model++);
    ModelRecord record;
    record.id = mid;
    record.family = model->spec.family;
    record.status = "ready";
    record.uploaded = true;
    record.model = model;
    session->models.push_back(std::move(record));
    comparable = session->prepared && model->fingerprint == session->prepared->fingerprint;
    ++session->revision;
  }
  token->Release();
  Persist(*session);
  return Envelope(*session, {{"model_id", mid},
                             {"family", models::FamilyName(model->spec.family)},
                             {"comparable", comparable}});
}

std::string Workbench::EnqueueGsa(const std::shared_ptr<Session>& session,
                                  std::shared_ptr<const models::TrainedModel> model,
                                  const std::string& model_id, data::Split split, const json& body) {
  CheckKeys(body, {"model_id", "split", "samples", "interference", "seed"}, "gsa request");
  gsa::EfastConfig config;
  config.samples = Field(body, "samples", config.samples);
  config.interference = Field(body, "interference", config.interference);
  config.seed = Field<uint64_t>(body, "seed", session->seed);
  gsa::ValidateConfig(config);

  // Held across Submit so the finish hook cannot run before the job is
  // recorded.
  std::lock_guard lock(session->mutex);
  const std::shared_ptr<const data::DataTable> table = session->prepared->table;
  const uint64_t epoch = session->epoch;
  auto computed = std::make_shared<gsa::SobolResult>();
  const std::string job = jobs_->Submit(
      JobKind::kGsa, session->id,
      [model, table, split, config, model_id, computed](JobContext&) -> json {
        *computed = gsa::RunGsa(*model, *table, split, config);
        return {{"model_id", model_id}, {"split", data::SplitName(split)}, {"result", ToJson(*computed)},
                {"csv", gsa::SobolCsv(*computed)}};
      },
      [session, epoch, computed](const JobSnapshot& outcome) {
        if (outcome.status != JobStatus::kDone) return;
        std::lock_guard lock(session->mutex);
        // Results for a superseded evaluation are dropped.
        if (session->epoch != epoch) return;
        session->gsa = *computed;
        ++session->revision;
      });
  session->gsa.reset();
  session->gsa_job = job;
  session->gsa_model = model_id;
  session->gsa_split = split;
  return job;
}

json Workbench::Evaluate(const std::string& sid, const json& body) {
  auto session = Find(sid);
  CheckKeys(body, {"split", "loss", "gsa"}, "evaluate request");
  auto token = BeginMutation(session);
  std::shared_ptr<const PreparedData> prepared;
  std::vector<ModelRecord> records;
  data::Task task = data::Task::kRegression;
  {
    std::lock_guard lock(session->mutex);
    prepared = session->prepared;
    records = session->models;
    if (session->config) task = session->config->task;
  }
  Require(prepared != nullptr, ErrorCode::kPrecondition, "configure features before evaluating");
  const auto split = data::ParseSplit(Field<std::string>(body, "split", "validation"));
  const auto loss = metrics::ParseLoss(Field<std::string>(
      body, "loss", task == data::Task::kClassification ? "cross_entropy" : "mse"));

  std::vector<evaluation::RegisteredModel> ready;
  std::vector<evaluation::ExcludedModel> not_ready;
  for (const auto& r : records) {
    if (r.model) {
      ready.push_back({r.id, r.model.get()});
    } else {
      not_ready.push_back({r.id, "model is " + r.status});
    }
  }
  Require(!ready.empty(), ErrorCode::kPrecondition, "no trained models to evaluate");
  evaluation::EvaluationReport report =
      evaluation::EvaluateAll(ready, *prepared->table, split, loss, prepared->fingerprint);
  report.excluded.insert(report.excluded.end(), not_ready.begin(), not_ready.end());

  std::shared_ptr<const models::TrainedModel> best;
  for (const auto& r : records) {
    if (r.id == report.best_model_id) best = r.model;
  }
  {
    std::lock_guard lock(session->mutex);
    session->Invalidate();
    session->evaluation = report;
    ++session->revision;
  }
  const std::string gsa_job = EnqueueGsa(session, best, report.best_model_id, split,
                                         Field(body, "gsa", json::object()));
  token->Release();
  return Envelope(*session, {{"report", ToJson(report)}, {"gsa_job_id", gsa_job}});
}

json Workbench::GetEvaluation(const std::string& sid) const {
  auto session = Find(sid);
  json report;
  {
    std::lock_guard lock(session->mutex);
    Require(session->evaluation.has_value(), ErrorCode::kPrecondition, "no evaluation has been run");
    report = ToJson(*session->evaluation);
  }
  return Envelope(*session, {{"report", std::move(report)}});
}

json Workbench::GetPlot(const std::string& sid, const json& query) const {
  auto session = Find(sid);
  CheckKeys(query, {"model_id", "split", "output", "sort", "mode"}, "plot request");
  std::shared_ptr<const models::TrainedModel> model;
  std::shared_ptr<const PreparedData> prepared;
  std::string mid;
  data::Split split = data::Split::kValidation;
  {
    std::lock_guard lock(session->mutex);
    prepared = session->prepared;
    if (session->evaluation) {
      mid = session->evaluation->best_model_id;
      split = session->evaluation->split;
    }
    mid = Field(query, "model_id", mid);
    Require(!mid.empty(), ErrorCode::kPrecondition, "evaluate first or name a model");
    ModelRecord* m = session->FindModel(mid);
    Require(m != nullptr, ErrorCode::kNotFound, "unknown model '" + mid + "'");
    Require(m->model != nullptr, ErrorCode::kPrecondition, "model '" + mid + "' is not trained");
    model = m->model;
  }
  Require(prepared != nullptr, ErrorCode::kPrecondition, "configure features first");
  split = data::ParseSplit(Field<std::string>(query, "split", std::string(data::SplitName(split))));
  const auto& outputs = model->fingerprint.output_columns;
  const std::string default_output =
      model->spec.task == data::Task::kClassification && outputs.size() == 2 ? outputs[1] : outputs[0];
  const std::string output = Field(query, "output", default_output);
  const std::string mode = Field<std::string>(query, "mode", "series");
  json plot;
  if (mode == "series") {
    const auto sort = evaluation::ParseSortMode(Field<std::string>(query, "sort", "none"));
    plot = ToJson(evaluation::MakePlotSeries(*model, *prepared->table, split, output, sort), sort);
  } else if (mode == "goodness_of_fit") {
    plot = ToJson(evaluation::MakeGoodnessOfFit(*model, *prepared->table, split, output));
  } else {
    Fail(ErrorCode::kInvalidArgument, "unknown plot mode '" + mode + "'");
  }
  plot["model_id"] = mid;
  plot["split"] = data::SplitName(split);
  return Envelope(*session, {{"plot", std::move(plot)}});
}

json Workbench::GetGsa(const std::string& sid, bool* pending) const {
  auto session = Find(sid);
  if (pending) *pending = false;
  std::string job;
  json out;
  {
    std::lock_guard lock(session->mutex);
    Require(session->evaluation.has_value(), ErrorCode::kPrecondition,
            "global sensitivity analysis needs an evaluation of the current feature selection");
    job = session->gsa_job;
    out = {{"job_id", job}, {"model_id", session->gsa_model}, {"split", data::SplitName(session->gsa_split)}};
    if (session->gsa) {
      out["status"] = "done";
      out["result"] = ToJson(*session->gsa);
      out["csv"] = gsa::SobolCsv(*session->gsa);
    }
  }
  if (!out.contains("result")) {
    const auto snapshot = jobs_->Get(job);
    Require(snapshot.has_value(), ErrorCode::kNotFound, "GSA job is unknown");
    if (snapshot->status == JobStatus::kFailed) Fail(snapshot->error_code, snapshot->error);
    out["status"] = JobStatusName(snapshot->status);
    if (pending) *pending = true;
  }
  return Envelope(*session, std::move(out));
}

json Workbench::StartGsa(const std::string& sid, const json& body) {
  auto session = Find(sid);
  std::shared_ptr<const models::TrainedModel> model;
  std::string mid;
  data::Split split;
  {
    std::lock_guard lock(session->mutex);
    Require(session->evaluation.has_value(), ErrorCode::kPrecondition,
            "global sensitivity analysis needs an evaluation of the current feature selection");
    mid = Field(body, "model_id", session->evaluation->best_model_id);
    split = session->evaluation->split;
    ModelRecord* m = session->FindModel(mid);
    Require(m != nullptr, ErrorCode::kNotFound, "unknown model '" + mid + "'");
    Require(m->model != nullptr, ErrorCode::kPrecondition, "model '" + mid + "' is not trained");
    Require(m->model->fingerprint == session->prepared->fingerprint, ErrorCode::kFingerprintMismatch,
            "model '" + mid + "' was trained on a different feature selection");
    model = m->model;
  }
  split = data::ParseSplit(Field<std::string>(body, "split", std::string(data::SplitName(split))));
  const std::string job = EnqueueGsa(session, model, mid, split, body);
  {
    std::lock_guard lock(session->mutex);
    ++session->revision;
  }
  return Envelope(*session, {{"job_id", job}, {"model_id", mid}});
}

json Workbench::Explain(const std::string& sid, const json& body) {
  auto session = Find(sid);
  CheckKeys(body, {"model_id", "method", "split", "sample_index", "class", "normalized", "seed", "lime",
                   "shap", "async"},
            "explain request");
  std::shared_ptr<const models::TrainedModel> model;
  std::shared_ptr<const PreparedData> prepared;
  std::string mid;
  data::Split split = data::Split::kTest;
  {
    std::lock_guard lock(session->mutex);
    prepared = session->prepared;
    if (session->evaluation) {
      mid = session->evaluation->best_model_id;
      split = session->evaluation->split;
    }
    mid = Field(body, "model_id", mid);
    Require(!mid.empty(), ErrorCode::kPrecondition, "evaluate first or name a model to explain");
    ModelRecord* m = session->FindModel(mid);
    Require(m != nullptr, ErrorCode::kNotFound, "unknown model '" + mid + "'");
    Require(m->model != nullptr, ErrorCode::kPrecondition, "model '" + mid + "' is not trained");
    model = m->model;
  }
  Require(prepared != nullptr, ErrorCode::kPrecondition, "configure features first");
  Require(body.contains("sample_index"), ErrorCode::kInvalidArgument, "field 'sample_index' is required");
  const auto method = lsa::ParseExplainMethod(Field<std::string>(body, "method", "lime"));
  lsa::ExplainRequest request;
  request.split = data::ParseSplit(Field<std::string>(body, "split", std::string(data::SplitName(split))));
  const auto index = Field<long long>(body, "sample_index", 0);
  Require(index >= 0, ErrorCode::kNotFound, "sample index must be nonnegative");
  request.sample_index = static_cast<size_t>(index);
  if (body.contains("class")) request.target = RequiredString(body, "class");
  const uint64_t seed = Field<uint64_t>(body, "seed", session->seed);
  const bool normalized = Field(body, "normalized", false);
  const json lime_opts = Field(body, "lime", json::object());
  const json shap_opts = Field(body, "shap", json::object());
  const auto lime_config = LimeConfigFrom(lime_opts, seed);
  const auto shap_config = ShapConfigFrom(shap_opts, seed);

  auto run = [model, prepared, method, request, lime_config, shap_config, normalized, mid]() {
    const lsa::LocalExplanation e =
        method == lsa::ExplainMethod::kLime
            ? lsa::ExplainLime(*model, *prepared->table, request, lime_config)
            : lsa::ExplainShap(*model, *prepared->table, request, shap_config);
    json payload = lsa::ExplanationPayload(e, normalized);
    payload["model_id"] = mid;
    return payload;
  };
  if (Field(body, "async", false)) {
    const std::string job = jobs_->Submit(JobKind::kExplain, sid, [run](JobContext&) { return run(); });
    return Envelope(*session, {{"job_id", job}});
  }
  return Envelope(*session, {{"explanation", run()}});
}

json Workbench::Balance(const std::string& sid, const json& body) const {
  auto session = Find(sid);
  CheckKeys(body, {"features", "bins"}, "balance request");
  std::shared_ptr<const data::DataTable> raw;
  std::vector<std::string> features;
  {
    std::lock_guard lock(session->mutex);
    raw = session->raw;
    if (session->config) features = session->config->outputs;
  }
  Require(raw != nullptr, ErrorCode::kPrecondition, "upload a dataset first");
  features = Field(body, "features", features);
  Require(!features.empty(), ErrorCode::kInvalidArgument, "name the features to analyze");
  const auto report = data::MakeBalanceReport(*raw, features, Field(body, "bins", data::BinSpec{}));
  return Envelope(*session, {{"balance", json(report)}});
}

json Workbench::Correlation(const std::string& sid, const json& body) const {
  auto session = Find(sid);
  CheckKeys(body, {"threshold"}, "correlation request");
  std::shared_ptr<const PreparedData> prepared;
  {
    std::lock_guard lock(session->mutex);
    prepared = session->prepared;
  }
  Require(prepared != nullptr, ErrorCode::kPrecondition, "configure features first");
  const auto train = prepared->encoded.RowsIn(data::Split::kTrain);
  Require(train.size() >= 2, ErrorCode::kPrecondition, "correlation needs at least 2 train rows");
  const auto report = data::CheckCorrelation(data::SelectRows(prepared->encoded.inputs.values, train),
                                             prepared->encoded.inputs.column_names,
                                             Field(body, "threshold", 0.9));
  return Envelope(*session, {{"correlation", json(report)}});
}

json Workbench::GetJob(const std::string& jid, const std::string& sid) const {
  const auto job = jobs_->Get(jid);
  Require(job.has_value() && (sid.empty() || job->session_id == sid), ErrorCode::kNotFound,
          "unknown job '" + jid + "'");
  json out = ToJson(*job);
  out["schema_version"] = kSchemaVersion;
  std::shared_ptr<Session> session;
  {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(job->session_id);
    if (it != sessions_.end()) session = it->second;
  }
  if (session) {
    std::lock_guard lock(session->mutex);
    out["revision"] = session->revision;
  }
  return out;
}

bool Workbench::WaitJob(const std::string& jid, std::chrono::milliseconds timeout) const {
  return jobs_->Wait(jid, timeout);
}

void Workbench::Persist(const Session& session) const {
  if (options_.data_dir.empty()) return;
  const auto dir = options_.data_dir / "sessions" / session.id;
  json doc;
  std::vector<std::pair<std::string, std::shared_ptr<const models::TrainedModel>>> to_write;
  {
    std::lock_guard lock(session.mutex);
    doc = {{"schema_version", kSchemaVersion},
           {"session_id", session.id},
           {"seed", session.seed},
           {"next_model", session.next_model},
           {"config", session.config ? session.config->ToJson() : json(nullptr)}};
    json list = json::array();
    for (const auto& m : session.models) {
      if (!m.model) continue;
      list.push_back({{"model_id", m.id}, {"uploaded", m.uploaded}});
      to_write.emplace_back(m.id, m.model);
    }
    doc["models"] = std::move(list);
  }
  for (const auto& [id, model] : to_write) {
    const auto path = dir / "models" / (id + ".model");
    if (!std::filesystem::exists(path)) WriteFileAtomically(path, models::SerializeModel(*model));
  }
  WriteFileAtomically(dir / "session.json", doc.dump(2));
}

void Workbench::Restore() {
  const auto root = options_.data_dir / "sessions";
  if (!std::filesystem::exists(root)) return;
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "session.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    const json doc = json::parse(data::ReadTextFile(dir / "session.json"));
    auto session = std::make_shared<Session>();
    session->id = doc.at("session_id").get<std::string>();
    session->seed = doc.at("seed").get<uint64_t>();
    session->next_model = doc.value("next_model", uint64_t{1});
    if (!doc.at("config").is_null()) session->config = FeatureConfig::FromJson(doc.at("config"));
    for (const auto& m : doc.at("models")) {
      ModelRecord record;
      record.id = m.at("model_id").get<std::string>();
      record.uploaded = m.value("uploaded", false);
      record.model = std::make_shared<const models::TrainedModel>(
          models::LoadModel(dir / "models" / (record.id + ".model")));
      record.family = record.model->spec.family;
      record.status = "ready";
      session->models.push_back(std::move(record));
    }
    const std::string& id = session->id;
    if (id.size() > 1 && id[0] == 's') {
      try {
        next_session_ = std::max<uint64_t>(next_session_, std::stoull(id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
    sessions_[id] = session;
  }
}

}  // namespace tabsense::service
