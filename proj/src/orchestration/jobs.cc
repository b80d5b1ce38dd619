#include <random>
#include <thread>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/orchestration/orchestration.h"
#include "json.hpp"

namespace edukg::orchestration {

std::string_view JobStatusName(JobStatus s) {
  switch (s) {
    case JobStatus::kQueued: return "QUEUED";
    case JobStatus::kRunning: return "RUNNING";
    case JobStatus::kCompleted: return "COMPLETED";
    case JobStatus::kFailed: return "FAILED";
    case JobStatus::kDead: return "DEAD";
  }
  return "";
}

JobStatus ParseJobStatus(std::string_view s) {
  for (JobStatus st : {JobStatus::kQueued, JobStatus::kRunning, JobStatus::kCompleted, JobStatus::kFailed,
                       JobStatus::kDead}) {
    if (JobStatusName(st) == s) return st;
  }
  throw ParseError("unknown job status: " + std::string(s));
}

std::string CanonicalPayload(std::string_view payload) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("job payload is not json: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("job payload must be a json object");
  return j.dump();
}

std::string NewJobId() {
  static std::mutex mu;
  static std::mt19937_64 rng = [] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }();
  std::lock_guard lock(mu);
  return text::Hex64(rng()) + text::Hex64(rng());
}

int64_t NowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Worker::Worker(Broker& broker, std::map<std::string, Handler> handlers, WorkerOptions options)
    : broker_(broker), handlers_(std::move(handlers)), options_(std::move(options)) {
  if (options_.poll_interval < std::chrono::milliseconds(100)) {
    throw ConfigError("worker poll interval must be at least 100ms");
  }
}

bool Worker::RunOnce() {
  broker_.ReapExpired();
  std::optional<Job> job = broker_.Reserve(options_.poll_interval);
  if (!job) return false;
  auto it = handlers_.find(job->kind);
  if (it == handlers_.end()) {
    broker_.Kill(*job, "no handler for job kind '" + job->kind + "'");
    return true;
  }
  try {
    it->second(*job);
  } catch (const std::exception& e) {
    broker_.Fail(*job, e.what());
    return true;
  }
  broker_.Complete(*job);
  return true;
}

void Worker::Run(std::stop_token stop) {
  while (!stop.stop_requested()) {
    try {
      RunOnce();
    } catch (const TransportError&) {
      // Broker unreachable; keep polling at the normal pace.
      std::this_thread::sleep_for(options_.poll_interval);
    }
  }
}

}  // namespace edukg::orchestration
