#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/common/url.h"
#include "edukg/orchestration/orchestration.h"

namespace edukg::orchestration {

using Reply = RespClient::Reply;

RespClient::RespClient(std::string host, int port, std::chrono::milliseconds timeout)
    : host_(std::move(host)), port_(port), timeout_(timeout) {}

RespClient::~RespClient() { Close(); }

void RespClient::Close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
  buffer_pos_ = 0;
}

void RespClient::Connect() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(port_);
  if (int rc = ::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + host_ + ": " + ::gai_strerror(rc), true);
  }
  std::string last = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw TransportError("cannot connect to " + host_ + ":" + port + ": " + last, true);
}

void RespClient::SendAll(const std::string& data) {
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      throw TransportError(std::string("broker send failed: ") + std::strerror(errno), true);
    }
    sent += static_cast<size_t>(n);
  }
}

char RespClient::ReadByte() {
  if (buffer_pos_ == buffer_.size()) {
    pollfd p{fd_, POLLIN, 0};
    int ready = ::poll(&p, 1, static_cast<int>(timeout_.count()));
    if (ready <= 0) throw TransportError("broker read timed out", true);
    char chunk[4096];
    ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) throw TransportError("broker closed the connection", true);
    buffer_.assign(chunk, static_cast<size_t>(n));
    buffer_pos_ = 0;
  }
  return buffer_[buffer_pos_++];
}

std::string RespClient::ReadLine() {
  std::string line;
  while (true) {
    char c = ReadByte();
    if (c == '\r') {
      if (ReadByte() != '\n') throw TransportError("malformed broker reply", false);
      return line;
    }
    line += c;
  }
}

Reply RespClient::ReadReply() {
  const char tag = ReadByte();
  const std::string line = ReadLine();
  Reply r;
  switch (tag) {
    case '+':
      r.type = Reply::Type::kStatus;
      r.str = line;
      return r;
    case '-':
      r.type = Reply::Type::kError;
      r.str = line;
      return r;
    case ':':
      r.type = Reply::Type::kInteger;
      r.integer = std::stoll(line);
      return r;
    case '$': {
      long long len = std::stoll(line);
      if (len < 0) return r;
      r.type = Reply::Type::kBulk;
      r.str.reserve(static_cast<size_t>(len));
      for (long long i = 0; i < len; ++i) r.str += ReadByte();
      ReadLine();
      return r;
    }
    case '*': {
      long long n = std::stoll(line);
      if (n < 0) return r;
      r.type = Reply::Type::kArray;
      for (long long i = 0; i < n; ++i) r.elements.push_back(ReadReply());
      return r;
    }
    default:
      throw TransportError("malformed broker reply", false);
  }
}

Reply RespClient::Command(const std::vector<std::string>& args) {
  std::string wire = "*" + std::to_string(args.size()) + "\r\n";
  for (const auto& a : args) wire += "$" + std::to_string(a.size()) + "\r\n" + a + "\r\n";
  std::lock_guard lock(mu_);
  // One reconnect: a dropped idle connection should not fail the call.
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      if (fd_ < 0) Connect();
      SendAll(wire);
      return ReadReply();
    } catch (const TransportError& e) {
      Close();
      if (attempt == 1 || !e.retryable()) throw;
    }
  }
  throw TransportError("unreachable", true);
}

namespace {

constexpr const char* kQueue = "edukg:jobs";
constexpr const char* kInflight = "edukg:inflight";
constexpr const char* kDelayed = "edukg:delayed";

std::string JobKey(const std::string& id) { return "edukg:job:" + id; }

}  // namespace

RespBroker::RespBroker(const std::string& url, BrokerOptions options) : options_(options) {
  Url u = ParseUrl(url);
  if (u.scheme != "redis") throw ConfigError("broker url must use redis://: " + url);
  client_ = std::make_unique<RespClient>(u.host, u.port);
}

Reply RespBroker::Call(const std::vector<std::string>& args) const {
  Reply r = client_->Command(args);
  if (r.type == Reply::Type::kError) throw TransportError("broker error: " + r.str, false);
  return r;
}

std::string RespBroker::Enqueue(std::string_view kind, std::string_view payload) {
  if (kind.empty()) throw ValidationError("job kind is empty");
  const std::string canonical = CanonicalPayload(payload);
  const std::string idem = "edukg:idem:" + text::Hex64(text::Fnv1a64(std::string(kind) + "\n" + canonical));
  const std::string id = NewJobId();
  Reply claimed = Call({"SET", idem, id, "NX", "PX", std::to_string(options_.idempotency_window.count())});
  if (claimed.type == Reply::Type::kNil) {
    Reply existing = Call({"GET", idem});
    if (existing.type == Reply::Type::kBulk) return existing.str;
  }
  const std::string now = std::to_string(NowMs());
  Call({"HSET", JobKey(id), "job_id", id, "kind", std::string(kind), "payload", canonical, "status", "QUEUED",
        "attempts", "0", "max_attempts", std::to_string(options_.max_attempts), "created_at", now, "updated_at",
        now, "last_error", ""});
  Call({"LPUSH", kQueue, id});
  return id;
}

void RespBroker::PromoteDelayed() {
  Reply due = Call({"ZRANGEBYSCORE", kDelayed, "-inf", std::to_string(NowMs())});
  for (const auto& e : due.elements) {
    // ZREM decides which of several workers moves the job.
    if (Call({"ZREM", kDelayed, e.str}).integer == 1) Call({"LPUSH", kQueue, e.str});
  }
}

std::optional<Job> RespBroker::Reserve(std::chrono::milliseconds wait) {
  const auto deadline = std::chrono::steady_clock::now() + wait;
  while (true) {
    PromoteDelayed();
    Reply id = Call({"RPOPLPUSH", kQueue, kInflight});
    if (id.type == Reply::Type::kBulk) {
      const std::string key = JobKey(id.str);
      const int64_t now = NowMs();
      Call({"HINCRBY", key, "attempts", "1"});
      Call({"HSET", key, "status", "RUNNING", "updated_at", std::to_string(now), "lease_until",
            std::to_string(now + options_.visibility_timeout.count())});
      return Status(id.str);
    }
    auto left = deadline - std::chrono::steady_clock::now();
    if (left <= std::chrono::milliseconds(0)) return std::nullopt;
    std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(left, std::chrono::milliseconds(100)));
  }
}

bool RespBroker::Complete(const Job& reserved) {
  const std::string key = JobKey(reserved.job_id);
  if (Call({"HSETNX", key, "completed_by", std::to_string(reserved.attempts)}).integer != 1) return false;
  Call({"HSET", key, "status", "COMPLETED", "updated_at", std::to_string(NowMs())});
  Call({"LREM", kInflight, "0", reserved.job_id});
  return true;
}

void RespBroker::Finish(const Job& reserved, JobStatus status, std::string_view error, int64_t delay_ms) {
  const std::string key = JobKey(reserved.job_id);
  Call({"HSET", key, "status", std::string(JobStatusName(status)), "last_error", std::string(error),
        "updated_at", std::to_string(NowMs())});
  Call({"LREM", kInflight, "0", reserved.job_id});
  if (status != JobStatus::kQueued) return;
  if (delay_ms <= 0) {
    Call({"LPUSH", kQueue, reserved.job_id});
  } else {
    Call({"ZADD", kDelayed, std::to_string(NowMs() + delay_ms), reserved.job_id});
  }
}

void RespBroker::Fail(const Job& reserved, std::string_view error) {
  Job current = Status(reserved.job_id);
  if (current.status != JobStatus::kRunning || current.attempts != reserved.attempts) return;
  if (current.attempts >= current.max_attempts) {
    Finish(current, JobStatus::kDead, error, 0);
  } else {
    Finish(current, JobStatus::kQueued, error, options_.backoff_base.count() * (int64_t{1} << current.attempts));
  }
}

void RespBroker::Kill(const Job& reserved, std::string_view error) {
  Finish(reserved, JobStatus::kDead, error, 0);
}

Job RespBroker::Status(const std::string& job_id) const {
  Reply all = Call({"HGETALL", JobKey(job_id)});
  if (all.elements.empty()) throw NotFound("unknown job " + job_id);
  std::map<std::string, std::string> f;
  for (size_t i = 0; i + 1 < all.elements.size(); i += 2) f[all.elements[i].str] = all.elements[i + 1].str;
  Job j;
  j.job_id = job_id;
  j.kind = f["kind"];
  j.payload = f["payload"];
  j.status = ParseJobStatus(f["status"]);
  j.attempts = std::stoi(f["attempts"]);
  j.max_attempts = std::stoi(f["max_attempts"]);
  j.created_at_ms = std::stoll(f["created_at"]);
  j.updated_at_ms = std::stoll(f["updated_at"]);
  j.last_error = f["last_error"];
  return j;
}

size_t RespBroker::ReapExpired() {
  Reply inflight = Call({"LRANGE", kInflight, "0", "-1"});
  const int64_t now = NowMs();
  size_t moved = 0;
  for (const auto& e : inflight.elements) {
    Reply lease = Call({"HGET", JobKey(e.str), "lease_until"});
    if (lease.type != Reply::Type::kBulk || std::stoll(lease.str) > now) continue;
    Job job = Status(e.str);
    if (job.status != JobStatus::kRunning) continue;
    // LREM decides which reaper owns the redelivery.
    if (Call({"LREM", kInflight, "1", e.str}).integer != 1) continue;
    const std::string key = JobKey(e.str);
    if (job.attempts >= job.max_attempts) {
      Call({"HSET", key, "status", "DEAD", "last_error", "visibility timeout expired", "updated_at",
            std::to_string(now)});
    } else {
      Call({"HSET", key, "status", "QUEUED", "last_error", "visibility timeout expired", "updated_at",
            std::to_string(now)});
      Call({"LPUSH", kQueue, e.str});
    }
    ++moved;
  }
  return moved;
}

std::unique_ptr<Broker> MakeBroker(const std::string& url, BrokerOptions options) {
  if (url.empty() || url == "memory" || url == "memory://") return std::make_unique<InMemoryBroker>(options);
  return std::make_unique<RespBroker>(url, options);
}

}  // namespace edukg::orchestration
