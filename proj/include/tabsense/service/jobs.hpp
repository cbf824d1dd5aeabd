#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tabsense/core/error.hpp"

namespace tabsense::service {

enum class JobKind { kTrain, kEvaluate, kGsa, kExplain };
enum class JobStatus { kQueued, kRunning, kDone, kFailed };

std::string_view JobKindName(JobKind kind);
std::string_view JobStatusName(JobStatus status);

struct JobSnapshot {
  std::string id;
  JobKind kind = JobKind::kTrain;
  JobStatus status = JobStatus::kQueued;
  double progress = 0.0;
  std::string session_id;
  nlohmann::json result;
  ErrorCode error_code = ErrorCode::kInvalidArgument;
  std::string error;

  bool terminal() const { return status == JobStatus::kDone || status == JobStatus::kFailed; }
};

nlohmann::json ToJson(const JobSnapshot& job);

class JobManager;

class JobContext {
 public:
  void SetProgress(double fraction);

 private:
  friend class JobManager;
  JobContext(JobManager* owner, std::string id) : owner_(owner), id_(std::move(id)) {}
  JobManager* owner_;
  std::string id_;
};

// FIFO worker pool. A job's finish hook runs on the worker before the job
// turns terminal, so anyone who sees done/failed also sees its side effects.
class JobManager {
 public:
  using Work = std::function<nlohmann::json(JobContext&)>;
  // Receives the finished job (status done or failed, result or error set).
  using FinishHook = std::function<void(const JobSnapshot&)>;

  explicit JobManager(size_t workers);
  ~JobManager();
  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  std::string Submit(JobKind kind, const std::string& session_id, Work work, FinishHook on_finish = {});
  std::optional<JobSnapshot> Get(const std::string& id) const;
  // Blocks until the job is terminal; false on timeout.
  bool Wait(const std::string& id,
            std::chrono::milliseconds timeout = std::chrono::milliseconds::max()) const;

 private:
  friend class JobContext;
  struct Entry {
    JobSnapshot snapshot;
    Work work;
    FinishHook on_finish;
  };

  void WorkerLoop();

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::condition_variable queued_;
  std::map<std::string, std::shared_ptr<Entry>> jobs_;
  std::deque<std::shared_ptr<Entry>> queue_;
  uint64_t next_id_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace tabsense::service
