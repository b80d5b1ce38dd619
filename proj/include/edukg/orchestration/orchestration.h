#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

namespace edukg::orchestration {

enum class JobStatus { kQueued, kRunning, kCompleted, kFailed, kDead };

std::string_view JobStatusName(JobStatus s);
JobStatus ParseJobStatus(std::string_view s);

inline constexpr std::string_view kBuildKg = "build_kg";
inline constexpr std::string_view kExpandKg = "expand_kg";
inline constexpr std::string_view kPreprocessDump = "preprocess_dump";

struct Job {
  std::string job_id;
  std::string kind;
  std::string payload;  // JSON object, canonical form
  JobStatus status = JobStatus::kQueued;
  int attempts = 0;     // incremented each time the job starts running
  int max_attempts = 3;
  int64_t created_at_ms = 0;
  int64_t updated_at_ms = 0;
  std::string last_error;
};

struct BrokerOptions {
  std::chrono::milliseconds visibility_timeout{300'000};
  std::chrono::milliseconds idempotency_window{60'000};
  // A failed job waits backoff_base * 2^attempts before it is redelivered.
  std::chrono::milliseconds backoff_base{1000};
  int max_attempts = 3;
};

// Delivery is at-least-once: a reserved job that is neither completed nor
// failed before its visibility timeout is handed out again.
class Broker {
 public:
  virtual ~Broker() = default;

  // Same id for an identical (kind, payload) submitted within the
  // idempotency window. ValidationError when the payload is not a JSON object.
  virtual std::string Enqueue(std::string_view kind, std::string_view payload) = 0;
  // Takes the next ready job and marks it RUNNING; waits up to `wait`.
  virtual std::optional<Job> Reserve(std::chrono::milliseconds wait) = 0;
  // False when the job is no longer this reservation's to complete (already
  // completed, or redelivered and finished elsewhere).
  virtual bool Complete(const Job& reserved) = 0;
  // Requeues with backoff, or DEAD once attempts reach max_attempts.
  virtual void Fail(const Job& reserved, std::string_view error) = 0;
  // DEAD regardless of attempts.
  virtual void Kill(const Job& reserved, std::string_view error) = 0;
  // NotFound for unknown ids.
  virtual Job Status(const std::string& job_id) const = 0;
  // Returns jobs whose visibility timeout ran out to the queue; count moved.
  virtual size_t ReapExpired() = 0;
};

// Parses and re-serialises a payload with sorted keys.
std::string CanonicalPayload(std::string_view payload);
std::string NewJobId();
int64_t NowMs();

class InMemoryBroker : public Broker {
 public:
  explicit InMemoryBroker(BrokerOptions options = {});

  std::string Enqueue(std::string_view kind, std::string_view payload) override;
  std::optional<Job> Reserve(std::chrono::milliseconds wait) override;
  bool Complete(const Job& reserved) override;
  void Fail(const Job& reserved, std::string_view error) override;
  void Kill(const Job& reserved, std::string_view error) override;
  Job Status(const std::string& job_id) const override;
  size_t ReapExpired() override;

 private:
  struct Slot {
    Job job;
    int64_t available_at_ms = 0;
    int64_t lease_until_ms = 0;
  };
  std::optional<Job> TakeReadyLocked();
  void RetryOrDieLocked(Slot& slot, std::string_view error);

  BrokerOptions options_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Slot> jobs_;
  std::deque<std::string> queue_;
  std::map<std::string, std::pair<std::string, int64_t>> recent_;  // dedup key -> (id, created)
};

// Minimal RESP2 client over a TCP socket; one connection, serialised calls.
class RespClient {
 public:
  struct Reply {
    enum class Type { kStatus, kError, kInteger, kBulk, kNil, kArray } type = Type::kNil;
    std::string str;
    int64_t integer = 0;
    std::vector<Reply> elements;
  };

  RespClient(std::string host, int port, std::chrono::milliseconds timeout = std::chrono::seconds(5));
  ~RespClient();
  RespClient(const RespClient&) = delete;
  RespClient& operator=(const RespClient&) = delete;

  // TransportError on connection problems; error replies come back as kError.
  Reply Command(const std::vector<std::string>& args);

 private:
  void Connect();
  void Close();
  void SendAll(const std::string& data);
  char ReadByte();
  std::string ReadLine();
  Reply ReadReply();

  std::string host_;
  int port_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
  std::string buffer_;
  size_t buffer_pos_ = 0;
  std::mutex mu_;
};

// Redis-compatible broker. Keys: edukg:jobs (LPUSH / RPOPLPUSH), edukg:inflight,
// edukg:job:<id> hashes, edukg:delayed (sorted set of retry times) and
// edukg:idem:<hash> for submission dedup.
class RespBroker : public Broker {
 public:
  explicit RespBroker(const std::string& url, BrokerOptions options = {});

  std::string Enqueue(std::string_view kind, std::string_view payload) override;
  std::optional<Job> Reserve(std::chrono::milliseconds wait) override;
  bool Complete(const Job& reserved) override;
  void Fail(const Job& reserved, std::string_view error) override;
  void Kill(const Job& reserved, std::string_view error) override;
  Job Status(const std::string& job_id) const override;
  size_t ReapExpired() override;

 private:
  RespClient::Reply Call(const std::vector<std::string>& args) const;
  void PromoteDelayed();
  void Finish(const Job& reserved, JobStatus status, std::string_view error, int64_t delay_ms);

  BrokerOptions options_;
  std::unique_ptr<RespClient> client_;
};

std::unique_ptr<Broker> MakeBroker(const std::string& url, BrokerOptions options = {});

using Handler = std::function<void(const Job&)>;

struct WorkerOptions {
  std::chrono::milliseconds poll_interval{100};
  std::string worker_id;
};

// Pulls jobs and runs the handler registered for their kind. A handler that
// throws std::exception fails the attempt; anything else propagates and
// leaves the job in flight, as a crashed process would.
class Worker {
 public:
  Worker(Broker& broker, std::map<std::string, Handler> handlers, WorkerOptions options = {});

  // One poll cycle; true when a job was processed.
  bool RunOnce();
  void Run(std::stop_token stop);

 private:
  Broker& broker_;
  std::map<std::string, Handler> handlers_;
  WorkerOptions options_;
};

}  // namespace edukg::orchestration
