#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/embedding/embedding.h"
#include "json.hpp"
#include "mock_services.h"
#include "test_support.h"

namespace edukg::embedding {
namespace {

using edukg::testing::Embedder;
using json = nlohmann::json;

TEST(HashEmbed, MatchesIndependentGoldenVectors) {
  json golden = json::parse(edukg::testing::ReadFile(edukg::testing::Fixture("hash_embed_golden.json")));
  ASSERT_EQ(golden["dimension"].get<size_t>(), HashEmbedder::kDefaultDimension);
  for (const auto& [word, hex] : golden["fnv"].items()) {
    EXPECT_EQ(text::Hex64(text::Fnv1a64(word)), hex.get<std::string>()) << word;
  }
  for (const auto& entry : golden["vectors"]) {
    const std::string input = entry["text"];
    Vector v = Embedder().Embed(input);
    ASSERT_EQ(v.dim(), entry["values"].size());
    for (size_t i = 0; i < v.dim(); ++i) {
      const double expected = std::strtod(entry["values"][i].get<std::string>().c_str(), nullptr);
      ASSERT_EQ(v[i], expected) << input << " component " << i;
    }
  }
}

TEST(HashEmbed, EmptyTextIsZeroVector) {
  Vector v = Embedder().Embed("");
  EXPECT_EQ(v.dim(), 256u);
  EXPECT_TRUE(v.IsZero());
  EXPECT_TRUE(Embedder().Embed("  ,;. ").IsZero());
}

TEST(HashEmbed, RepeatedWordEqualsSingleWord) {
  EXPECT_EQ(Embedder().Embed("data data"), Embedder().Embed("data"));
}

TEST(HashEmbed, NonZeroVectorsHaveUnitNorm) {
  for (const char* t : {"graph", "graph theory", "The quick brown fox", "Ünïcode"}) {
    EXPECT_NEAR(Embedder().Embed(t).Norm(), 1.0, 1e-9) << t;
  }
}

TEST(HashEmbed, CaseInsensitive) {
  EXPECT_EQ(Embedder().Embed("Graph THEORY"), Embedder().Embed("graph theory"));
}

TEST(HashEmbed, PermutationInvariantOverTokens) {
  std::vector<std::string> words = {"vertices", "edges", "graph", "path", "cycle", "graph", "tree"};
  const Vector base = Embedder().Embed(text::Join(words, " "));
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(words.begin(), words.end(), rng);
    EXPECT_EQ(Embedder().Embed(text::Join(words, " ")), base);
  }
}

TEST(HashEmbed, DimensionIsConfigurable) {
  HashEmbedder small(16);
  EXPECT_EQ(small.Embed("graph").dim(), 16u);
  EXPECT_EQ(MakeProvider("hash:32")->dimension(), 32u);
  EXPECT_EQ(MakeProvider("hash")->dimension(), 256u);
  EXPECT_THROW(MakeProvider("word2vec"), ConfigError);
}

Vector Basis(size_t dim, size_t i) {
  Vector v(dim);
  v[i] = 1.0;
  return v;
}

TEST(Cosine, TrivialIdentities) {
  Vector v = Embedder().Embed("graph theory");
  std::vector<double> neg;
  for (double x : v.values()) neg.push_back(-x);
  EXPECT_NEAR(Cosine(v, v), 1.0, 1e-12);
  EXPECT_NEAR(Cosine(v, Vector(neg)), -1.0, 1e-12);
  EXPECT_EQ(Cosine(Basis(4, 0), Basis(4, 1)), 0.0);
}

TEST(Cosine, ZeroVectorGivesZero) {
  EXPECT_EQ(Cosine(Vector(8), Basis(8, 3)), 0.0);
  EXPECT_EQ(Cosine(Vector(8), Vector(8)), 0.0);
}

TEST(Cosine, DimensionMismatchIsContractViolation) {
  EXPECT_THROW(Cosine(Vector(3), Vector(4)), ContractViolation);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(32), b(32);
    for (auto& x : a) x = dist(rng);
    for (auto& x : b) x = dist(rng);
    const double alpha = 0.01 + std::fabs(dist(rng)) * 100;
    std::vector<double> scaled = a;
    for (auto& x : scaled) x *= alpha;
    EXPECT_EQ(Cosine(Vector(a), Vector(b)), Cosine(Vector(b), Vector(a)));
    EXPECT_NEAR(Cosine(Vector(scaled), Vector(b)), Cosine(Vector(a), Vector(b)), 1e-12);
    const double c = Cosine(Vector(a), Vector(b));
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

// Embedding service whose vectors are the hash embedding truncated to `dim`.
void MountEmbedService(httplib::Server& s, size_t dim, std::atomic<int>* failures_left,
                       int failure_status = 500) {
  s.Post("/embed", [=](const httplib::Request& req, httplib::Response& res) {
    if (failures_left && failures_left->fetch_sub(1) > 0) {
      res.status = failure_status;
      return;
    }
    json in = json::parse(req.body);
    json vectors = json::array();
    for (const auto& t : in["texts"]) {
      Vector v = HashEmbedder(dim).Embed(t.get<std::string>());
      vectors.push_back(std::vector<double>(v.values().begin(), v.values().end()));
    }
    res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
  });
}

// The client renormalizes what it receives, which may move the last bit.
void ExpectSameVector(const Vector& a, const Vector& b) {
  ASSERT_EQ(a.dim(), b.dim());
  for (size_t i = 0; i < a.dim(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12) << "component " << i;
}

RemoteEmbedderOptions Options(size_t dim) {
  RemoteEmbedderOptions o;
  o.dimension = dim;
  o.backoff_ms = 5;
  o.timeout_ms = 2000;
  return o;
}

TEST(RemoteEmbed, BatchPreservesOrder) {
  edukg::testing::MockServer server([](httplib::Server& s) { MountEmbedService(s, 8, nullptr); });
  RemoteEmbedder remote(server.url() + "/embed", Options(8));
  auto out = remote.EmbedBatch({"graph", "tree"});
  ASSERT_EQ(out.size(), 2u);
  ExpectSameVector(out[0], HashEmbedder(8).Embed("graph"));
  ExpectSameVector(out[1], HashEmbedder(8).Embed("tree"));
}

TEST(RemoteEmbed, RetriesServerErrorsThenSucceeds) {
  std::atomic<int> failures{2};
  edukg::testing::MockServer server([&](httplib::Server& s) { MountEmbedService(s, 8, &failures); });
  RemoteEmbedder remote(server.url() + "/embed", Options(8));
  ExpectSameVector(remote.Embed("graph"), HashEmbedder(8).Embed("graph"));
  EXPECT_EQ(remote.requests_sent(), 3u);
}

TEST(RemoteEmbed, GivesUpAfterThreeAttemptsWithRetryableError) {
  std::atomic<int> failures{100};
  edukg::testing::MockServer server([&](httplib::Server& s) { MountEmbedService(s, 8, &failures); });
  RemoteEmbedder remote(server.url() + "/embed", Options(8));
  try {
    remote.Embed("graph");
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_EQ(remote.requests_sent(), 3u);
}

TEST(RemoteEmbed, ClientErrorIsNotRetried) {
  std::atomic<int> failures{100};
  edukg::testing::MockServer server([&](httplib::Server& s) { MountEmbedService(s, 8, &failures, 400); });
  RemoteEmbedder remote(server.url() + "/embed", Options(8));
  try {
    remote.Embed("graph");
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_FALSE(e.retryable());
  }
  EXPECT_EQ(remote.requests_sent(), 1u);
}

TEST(RemoteEmbed, WrongDimensionIsConfigError) {
  edukg::testing::MockServer server([](httplib::Server& s) { MountEmbedService(s, 8, nullptr); });
  RemoteEmbedder remote(server.url() + "/embed", Options(16));
  EXPECT_THROW(remote.Embed("graph"), ConfigError);
}

TEST(RemoteEmbed, CachesByContent) {
  edukg::testing::MockServer server([](httplib::Server& s) { MountEmbedService(s, 8, nullptr); });
  RemoteEmbedder remote(server.url() + "/embed", Options(8));
  remote.EmbedBatch({"graph", "tree"});
  remote.EmbedBatch({"tree", "graph", "path"});
  EXPECT_EQ(remote.requests_sent(), 2u);
  EXPECT_EQ(remote.cache_size(), 3u);
  remote.Embed("path");
  EXPECT_EQ(remote.requests_sent(), 2u);
}

TEST(RemoteEmbed, SplitsLargeBatches) {
  edukg::testing::MockServer server([](httplib::Server& s) { MountEmbedService(s, 8, nullptr); });
  RemoteEmbedder remote(server.url() + "/embed", Options(8));
  std::vector<std::string> texts;
  for (int i = 0; i < 130; ++i) texts.push_back("word" + std::to_string(i));
  auto out = remote.EmbedBatch(texts);
  ASSERT_EQ(out.size(), 130u);
  ExpectSameVector(out[129], HashEmbedder(8).Embed("word129"));
  EXPECT_EQ(remote.requests_sent(), 3u);
}

TEST(RemoteEmbed, RejectsBadConfiguration) {
  RemoteEmbedderOptions o;
  o.max_batch = 65;
  EXPECT_THROW(RemoteEmbedder("http://127.0.0.1:1/embed", o), ConfigError);
  EXPECT_THROW(RemoteEmbedder("redis://127.0.0.1:1"), ConfigError);
}

}  // namespace
}  // namespace edukg::embedding
