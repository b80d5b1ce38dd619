#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include "edukg/kb/kb.h"

namespace httplib {
class Server;
}

namespace edukg::kb {

// Exposes a knowledge base over HTTP under /kb/... Records travel without
// embeddings. `latency` is slept before every reply (for load simulation).
void MountKnowledgeBaseRoutes(httplib::Server& server, const KnowledgeBase& kb,
                              std::chrono::milliseconds latency = std::chrono::milliseconds(0));

// Client for the routes above. Abstract and category-name embeddings are
// computed on the fly with `embedder`, one request per lookup.
class RemoteKnowledgeBase : public KnowledgeBase {
 public:
  RemoteKnowledgeBase(std::string endpoint, const embedding::EmbeddingProvider& embedder,
                      int attempts = 3);

  size_t dimension() const override { return embedder_.dimension(); }
  std::optional<KBRecord> FindTitle(std::string_view title) const override;
  KBRecord Get(PageId id) const override;
  std::vector<KBRecord> GetMany(const std::vector<PageId>& ids) const override;
  Neighborhood Neighbors(PageId id) const override;
  std::vector<CategoryRef> CategoriesOf(PageId id) const override;
  std::vector<KBRecord> DisambiguationCandidates(std::string_view title) const override;

  size_t requests_sent() const { return requests_.load(); }

 private:
  // Returns the parsed body, or nullopt on 404.
  std::optional<std::string> Fetch(const std::string& path_and_query) const;

  std::string origin_;
  std::string base_path_;
  const embedding::EmbeddingProvider& embedder_;
  int attempts_;
  mutable std::atomic<size_t> requests_{0};
};

}  // namespace edukg::kb
