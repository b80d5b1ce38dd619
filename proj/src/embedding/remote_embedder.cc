#include <chrono>
#include <thread>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/embedding/embedding.h"
#include "httplib.h"
#include "json.hpp"

namespace edukg::embedding {

using json = nlohmann::json;

RemoteEmbedder::RemoteEmbedder(std::string endpoint, RemoteEmbedderOptions options)
    : endpoint_(std::move(endpoint)), url_(ParseUrl(endpoint_)), options_(options) {
  if (url_.scheme != "http") throw ConfigError("embedding endpoint must be http: " + endpoint_);
  if (options_.max_batch == 0 || options_.max_batch > 64) {
    throw ConfigError("embedding batch size must be in [1, 64]");
  }
}

size_t RemoteEmbedder::cache_size() const {
  std::shared_lock lock(cache_mu_);
  size_t n = 0;
  for (const auto& [_, bucket] : cache_) n += bucket.size();
  return n;
}

size_t RemoteEmbedder::requests_sent() const {
  std::lock_guard lock(stats_mu_);
  return requests_;
}

Vector RemoteEmbedder::Embed(std::string_view text) const {
  return EmbedBatch({std::string(text)}).front();
}

std::vector<Vector> RemoteEmbedder::EmbedBatch(const std::vector<std::string>& texts) const {
  std::vector<Vector> out(texts.size());
  std::vector<size_t> missing;
  {
    std::shared_lock lock(cache_mu_);
    for (size_t i = 0; i < texts.size(); ++i) {
      auto it = cache_.find(text::Fnv1a64(texts[i]));
      bool hit = false;
      if (it != cache_.end()) {
        for (const auto& [t, v] : it->second) {
          if (t == texts[i]) {
            out[i] = v;
            hit = true;
            break;
          }
        }
      }
      if (!hit) missing.push_back(i);
    }
  }
  for (size_t start = 0; start < missing.size(); start += options_.max_batch) {
    size_t stop = std::min(missing.size(), start + options_.max_batch);
    std::vector<std::string> batch;
    for (size_t k = start; k < stop; ++k) batch.push_back(texts[missing[k]]);
    std::vector<Vector> got = Fetch(batch);
    std::unique_lock lock(cache_mu_);
    for (size_t k = start; k < stop; ++k) {
      const std::string& t = texts[missing[k]];
      out[missing[k]] = got[k - start];
      auto& bucket = cache_[text::Fnv1a64(t)];
      bool present = false;
      for (const auto& entry : bucket) present = present || entry.first == t;
      if (!present) bucket.emplace_back(t, got[k - start]);
    }
  }
  return out;
}

std::vector<Vector> RemoteEmbedder::Fetch(const std::vector<std::string>& texts) const {
  json body = {{"texts", texts}};
  const std::string payload = body.dump();
  std::string last_error;
  int backoff = options_.backoff_ms;
  for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
    httplib::Client client(url_.Origin());
    client.set_connection_timeout(std::chrono::milliseconds(options_.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(options_.timeout_ms));
    {
      std::lock_guard lock(stats_mu_);
      ++requests_;
    }
    auto res = client.Post(url_.path, payload, "application/json");
    if (!res) {
      last_error = "embedding request failed: " + httplib::to_string(res.error());
    } else if (res->status >= 500) {
      last_error = "embedding service returned " + std::to_string(res->status);
    } else if (res->status != 200) {
      throw TransportError("embedding service returned " + std::to_string(res->status), false);
    } else {
      json reply;
      try {
        reply = json::parse(res->body);
      } catch (const json::exception& e) {
        throw TransportError(std::string("embedding reply is not json: ") + e.what(), false);
      }
      if (!reply.contains("vectors") || !reply["vectors"].is_array() ||
          reply["vectors"].size() != texts.size()) {
        throw TransportError("embedding reply has wrong shape", false);
      }
      std::vector<Vector> out;
      for (const auto& row : reply["vectors"]) {
        std::vector<double> values = row.get<std::vector<double>>();
        if (values.size() != options_.dimension) {
          throw ConfigError("embedding service returned dimension " +
                            std::to_string(values.size()) + ", configured " +
                            std::to_string(options_.dimension));
        }
        Vector v(std::move(values));
        v.Normalize();
        out.push_back(std::move(v));
      }
      return out;
    }
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
  }
  throw TransportError(last_error, true);
}

}  // namespace edukg::embedding
