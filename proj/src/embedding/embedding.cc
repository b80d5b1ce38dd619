#include "edukg/embedding/embedding.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "edukg/common/error.h"
#include "edukg/common/text.h"

namespace edukg::embedding {

double Vector::Norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

bool Vector::IsZero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

void Vector::Normalize() {
  double n = Norm();
  if (n == 0.0) return;
  for (double& v : values_) v /= n;
}

double Cosine(const Vector& u, const Vector& v) {
  if (u.dim() != v.dim()) {
    throw ContractViolation("cosine of vectors with dimensions " + std::to_string(u.dim()) +
                            " and " + std::to_string(v.dim()));
  }
  double dot = 0.0;
  for (size_t i = 0; i < u.dim(); ++i) dot += u[i] * v[i];
  double denom = u.Norm() * v.Norm();
  if (denom == 0.0) return 0.0;
  return std::clamp(dot / denom, -1.0, 1.0);
}

std::vector<Vector> EmbeddingProvider::EmbedBatch(const std::vector<std::string>& texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(Embed(t));
  return out;
}

Vector HashEmbedder::TokenVector(std::string_view token) const {
  Vector out(dimension_);
  const uint64_t prefix = text::Fnv1a64(token);
  for (size_t i = 0; i < dimension_; ++i) {
    char le[8];
    uint64_t idx = i;
    for (int b = 0; b < 8; ++b) {
      le[b] = static_cast<char>(idx & 0xff);
      idx >>= 8;
    }
    uint64_t u = text::Fnv1a64(std::string_view(le, 8), prefix);
    out[i] = static_cast<double>(u) / 18446744073709551616.0 * 2.0 - 1.0;
  }
  return out;
}

Vector HashEmbedder::Embed(std::string_view input) const {
  // Counting first and summing in sorted token order makes the result exactly
  // independent of word order.
  std::map<std::string, int> bag;
  for (auto& tok : text::WordTokens(input)) ++bag[tok];
  Vector sum(dimension_);
  for (const auto& [tok, count] : bag) {
    Vector tv = TokenVector(tok);
    for (size_t i = 0; i < dimension_; ++i) sum[i] += count * tv[i];
  }
  sum.Normalize();
  return sum;
}

std::unique_ptr<EmbeddingProvider> MakeProvider(std::string_view spec, size_t remote_dimension) {
  if (spec.empty() || spec == "hash") return std::make_unique<HashEmbedder>();
  if (spec.rfind("hash:", 0) == 0) {
    return std::make_unique<HashEmbedder>(std::stoul(std::string(spec.substr(5))));
  }
  if (spec.rfind("http://", 0) == 0) {
    RemoteEmbedderOptions options;
    options.dimension = remote_dimension;
    return std::make_unique<RemoteEmbedder>(std::string(spec), options);
  }
  throw ConfigError("unknown embedder: " + std::string(spec));
}

}  // namespace edukg::embedding
