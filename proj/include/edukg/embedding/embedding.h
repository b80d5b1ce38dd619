#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "edukg/common/url.h"

namespace edukg::embedding {

// Fixed-dimension real vector. Providers hand out either the zero vector or a
// unit-length one.
class Vector {
 public:
  Vector() = default;
  explicit Vector(size_t dim) : values_(dim, 0.0) {}
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {}

  size_t dim() const { return values_.size(); }
  double operator[](size_t i) const { return values_[i]; }
  double& operator[](size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }

  double Norm() const;
  bool IsZero() const;
  // Scales to unit length in place; zero vectors are left as they are.
  void Normalize();

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> values_;
};

// dot(u,v)/(|u||v|), 0 when either norm is 0. Throws ContractViolation on
// dimension mismatch.
double Cosine(const Vector& u, const Vector& v);

// Every provider must be deterministic: equal text gives an identical vector.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string name() const = 0;
  virtual size_t dimension() const = 0;
  virtual Vector Embed(std::string_view text) const = 0;
  virtual std::vector<Vector> EmbedBatch(const std::vector<std::string>& texts) const;
};

// Bag-of-words embedder driven by FNV-1a-64. Each token t contributes, at
// component i, (h(t ++ le64(i)) / 2^64) * 2 - 1; the sum is L2-normalized.
class HashEmbedder : public EmbeddingProvider {
 public:
  static constexpr size_t kDefaultDimension = 256;

  explicit HashEmbedder(size_t dimension = kDefaultDimension) : dimension_(dimension) {}

  std::string name() const override { return "hash-fnv1a"; }
  size_t dimension() const override { return dimension_; }
  Vector Embed(std::string_view text) const override;

  // Contribution vector of one (already lowercased) token, unnormalized.
  Vector TokenVector(std::string_view token) const;

 private:
  size_t dimension_;
};

struct RemoteEmbedderOptions {
  size_t dimension = 768;
  size_t max_batch = 64;
  int attempts = 3;
  int backoff_ms = 200;  // doubled after each failed attempt
  int timeout_ms = 10000;
};

// Client for an embedding service: POST {"texts":[...]} -> {"vectors":[[...]]}.
// Responses are cached by content hash.
class RemoteEmbedder : public EmbeddingProvider {
 public:
  RemoteEmbedder(std::string endpoint, RemoteEmbedderOptions options = {});

  std::string name() const override { return "remote:" + endpoint_; }
  size_t dimension() const override { return options_.dimension; }
  Vector Embed(std::string_view text) const override;
  std::vector<Vector> EmbedBatch(const std::vector<std::string>& texts) const override;

  size_t cache_size() const;
  size_t requests_sent() const;

 private:
  std::vector<Vector> Fetch(const std::vector<std::string>& texts) const;

  std::string endpoint_;
  Url url_;
  RemoteEmbedderOptions options_;

  mutable std::shared_mutex cache_mu_;
  mutable std::unordered_map<uint64_t, std::vector<std::pair<std::string, Vector>>> cache_;
  mutable std::mutex stats_mu_;
  mutable size_t requests_ = 0;
};

// "hash", "hash:<dim>" or an http:// endpoint of an embedding service.
std::unique_ptr<EmbeddingProvider> MakeProvider(std::string_view spec, size_t remote_dimension = 768);

}  // namespace edukg::embedding
