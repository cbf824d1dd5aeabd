#include "tabsense/service/jobs.hpp"

#include <algorithm>

namespace tabsense::service {

std::string_view JobKindName(JobKind kind) {
  switch (kind) {
    case JobKind::kTrain: return "train";
    case JobKind::kEvaluate: return "evaluate";
    case JobKind::kGsa: return "gsa";
    case JobKind::kExplain: return "explain";
  }
  return "unknown";
}

std::string_view JobStatusName(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "unknown";
}

nlohmann::json ToJson(const JobSnapshot& job) {
  nlohmann::json j{{"job_id", job.id},
                   {"kind", JobKindName(job.kind)},
                   {"status", JobStatusName(job.status)},
                   {"progress", job.progress},
                   {"session_id", job.session_id}};
  if (job.status == JobStatus::kDone) j["result"] = job.result;
  if (job.status == JobStatus::kFailed) {
    j["error"] = {{"code", ErrorCodeName(job.error_code)}, {"message", job.error}};
  }
  return j;
}

void JobContext::SetProgress(double fraction) {
  std::lock_guard lock(owner_->mutex_);
  auto it = owner_->jobs_.find(id_);
  if (it == owner_->jobs_.end() || it->second->snapshot.terminal()) return;
  it->second->snapshot.progress = std::clamp(fraction, 0.0, 1.0);
}

JobManager::JobManager(size_t workers) {
  workers = std::max<size_t>(1, workers);
  for (size_t i = 0; i < workers; ++i) workers_.emplace_back([this] { WorkerLoop(); });
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  queued_.notify_all();
  for (auto& t : workers_) t.join();
}

std::string JobManager::Submit(JobKind kind, const std::string& session_id, Work work,
                               FinishHook on_finish) {
  auto entry = std::make_shared<Entry>();
  entry->snapshot.kind = kind;
  entry->snapshot.session_id = session_id;
  entry->work = std::move(work);
  entry->on_finish = std::move(on_finish);
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = "job-" + std::to_string(next_id_++);
    entry->snapshot.id = id;
    jobs_[id] = entry;
    queue_.push_back(entry);
  }
  queued_.notify_one();
  return id;
}

std::optional<JobSnapshot> JobManager::Get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second->snapshot;
}

bool JobManager::Wait(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return false;
  auto entry = it->second;
  auto done = [&] { return entry->snapshot.terminal(); };
  if (timeout == std::chrono::milliseconds::max()) {
    changed_.wait(lock, done);
    return true;
  }
  return changed_.wait_for(lock, timeout, done);
}

void JobManager::WorkerLoop() {
  for (;;) {
    std::shared_ptr<Entry> entry;
    {
      std::unique_lock lock(mutex_);
      queued_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      entry = queue_.front();
      queue_.pop_front();
      entry->snapshot.status = JobStatus::kRunning;
    }
    changed_.notify_all();

    JobSnapshot outcome;
    {
      std::lock_guard lock(mutex_);
      outcome = entry->snapshot;
    }
    JobContext context(this, outcome.id);
    try {
      outcome.result = entry->work(context);
      outcome.status = JobStatus::kDone;
      outcome.progress = 1.0;
    } catch (const Error& e) {
      outcome.status = JobStatus::kFailed;
      outcome.error_code = e.code();
      outcome.error = e.what();
    } catch (const std::exception& e) {
      outcome.status = JobStatus::kFailed;
      outcome.error_code = ErrorCode::kInternal;
      outcome.error = e.what();
    }
    if (entry->on_finish) {
      try {
        entry->on_finish(outcome);
      } catch (const std::exception& e) {
        outcome.status = JobStatus::kFailed;
        outcome.error = e.what();
      }
    }
    {
      std::lock_guard lock(mutex_);
      entry->snapshot = outcome;
      entry->work = nullptr;
      entry->on_finish = nullptr;
    }
    changed_.notify_all();
  }
}

}  // namespace tabsense::service
