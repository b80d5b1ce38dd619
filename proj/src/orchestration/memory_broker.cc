#include <algorithm>

#include "edukg/common/error.h"
#include "edukg/orchestration/orchestration.h"

namespace edukg::orchestration {

InMemoryBroker::InMemoryBroker(BrokerOptions options) : options_(options) {}

std::string InMemoryBroker::Enqueue(std::string_view kind, std::string_view payload) {
  if (kind.empty()) throw ValidationError("job kind is empty");
  const std::string canonical = CanonicalPayload(payload);
  const std::string key = std::string(kind) + "\n" + canonical;
  const int64_t now = NowMs();
  std::lock_guard lock(mu_);
  auto dup = recent_.find(key);
  if (dup != recent_.end() && now - dup->second.second < options_.idempotency_window.count()) {
    return dup->second.first;
  }
  Slot slot;
  slot.job.job_id = NewJobId();
  slot.job.kind = std::string(kind);
  slot.job.payload = canonical;
  slot.job.max_attempts = options_.max_attempts;
  slot.job.created_at_ms = slot.job.updated_at_ms = now;
  const std::string id = slot.job.job_id;
  jobs_.emplace(id, std::move(slot));
  queue_.push_back(id);
  recent_[key] = {id, now};
  cv_.notify_one();
  return id;
}

std::optional<Job> InMemoryBroker::TakeReadyLocked() {
  const int64_t now = NowMs();
  for (auto it = queue_.begin(); it != queue_.end(); ++it) {
    Slot& slot = jobs_.at(*it);
    if (slot.available_at_ms > now) continue;
    queue_.erase(it);
    slot.job.status = JobStatus::kRunning;
    ++slot.job.attempts;
    slot.job.updated_at_ms = now;
    slot.lease_until_ms = now + options_.visibility_timeout.count();
    return slot.job;
  }
  return std::nullopt;
}

std::optional<Job> InMemoryBroker::Reserve(std::chrono::milliseconds wait) {
  const auto deadline = std::chrono::steady_clock::now() + wait;
  std::unique_lock lock(mu_);
  while (true) {
    if (auto job = TakeReadyLocked()) return job;
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    // Wake periodically so jobs held back by retry backoff are noticed.
    cv_.wait_until(lock, std::min(deadline, std::chrono::steady_clock::now() + std::chrono::milliseconds(20)));
  }
}

bool InMemoryBroker::Complete(const Job& reserved) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(reserved.job_id);
  if (it == jobs_.end()) throw NotFound("unknown job " + reserved.job_id);
  Job& job = it->second.job;
  if (job.status == JobStatus::kCompleted || job.status == JobStatus::kDead) return false;
  job.status = JobStatus::kCompleted;
  job.updated_at_ms = NowMs();
  std::erase(queue_, reserved.job_id);
  return true;
}

void InMemoryBroker::RetryOrDieLocked(Slot& slot, std::string_view error) {
  Job& job = slot.job;
  job.last_error = std::string(error);
  job.updated_at_ms = NowMs();
  if (job.attempts >= job.max_attempts) {
    job.status = JobStatus::kDead;
    return;
  }
  job.status = JobStatus::kQueued;
  slot.available_at_ms = job.updated_at_ms + options_.backoff_base.count() * (int64_t{1} << job.attempts);
  queue_.push_back(job.job_id);
  cv_.notify_one();
}

void InMemoryBroker::Fail(const Job& reserved, std::string_view error) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(reserved.job_id);
  if (it == jobs_.end()) throw NotFound("unknown job " + reserved.job_id);
  // A stale reservation (redelivered meanwhile) must not touch the new run.
  if (it->second.job.status != JobStatus::kRunning || it->second.job.attempts != reserved.attempts) return;
  RetryOrDieLocked(it->second, error);
}

void InMemoryBroker::Kill(const Job& reserved, std::string_view error) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(reserved.job_id);
  if (it == jobs_.end()) throw NotFound("unknown job " + reserved.job_id);
  Job& job = it->second.job;
  job.status = JobStatus::kDead;
  job.last_error = std::string(error);
  job.updated_at_ms = NowMs();
  std::erase(queue_, reserved.job_id);
}

Job InMemoryBroker::Status(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw NotFound("unknown job " + job_id);
  return it->second.job;
}

size_t InMemoryBroker::ReapExpired() {
  std::lock_guard lock(mu_);
  const int64_t now = NowMs();
  size_t moved = 0;
  for (auto& [id, slot] : jobs_) {
    if (slot.job.status != JobStatus::kRunning || slot.lease_until_ms > now) continue;
    RetryOrDieLocked(slot, "visibility timeout expired");
    slot.available_at_ms = now;
    ++moved;
  }
  return moved;
}

}  // namespace edukg::orchestration
