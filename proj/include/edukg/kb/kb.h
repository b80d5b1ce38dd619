#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "edukg/embedding/embedding.h"

namespace edukg::kb {

using PageId = uint64_t;

struct KBRecord {
  PageId page_id = 0;
  std::string title;
  std::string abstract;
  std::vector<PageId> out_links;  // canonical targets, ascending
  std::vector<std::string> categories;
  std::optional<PageId> redirect_to;
  bool is_disambiguation = false;
  embedding::Vector abstract_embedding;

  bool is_redirect() const { return redirect_to.has_value(); }
  bool operator==(const KBRecord&) const = default;
};

struct KBStats {
  uint64_t pages = 0;            // stored records, redirects included
  uint64_t redirects = 0;
  uint64_t disambiguations = 0;
  uint64_t links = 0;            // resolved distinct out-links over all records
  uint64_t categories = 0;       // distinct category names
  uint64_t dropped_links = 0;    // link targets that resolve to no page
  uint64_t skipped_pages = 0;    // non-article namespaces, dangling redirects
  std::string build_timestamp;   // latest revision timestamp in the dump

  bool operator==(const KBStats&) const = default;
};

struct Neighborhood {
  std::vector<PageId> out_links;
  std::vector<PageId> in_links;

  // Both directions, deduplicated, ascending.
  std::vector<PageId> Pool() const;
};

struct CategoryRef {
  std::string name;
  embedding::Vector embedding;
};

// Read-only access to a knowledge base. Records handed out are canonical:
// redirects are followed before returning.
class KnowledgeBase {
 public:
  virtual ~KnowledgeBase() = default;

  virtual size_t dimension() const = 0;

  // Title match is exact except for the first character. nullopt if absent;
  // DataError on a redirect cycle or chain deeper than five.
  virtual std::optional<KBRecord> FindTitle(std::string_view title) const = 0;
  // NotFound for unknown ids.
  virtual KBRecord Get(PageId id) const = 0;
  virtual std::vector<KBRecord> GetMany(const std::vector<PageId>& ids) const;

  // Linked and linking articles, with redirects and disambiguation pages left out.
  virtual Neighborhood Neighbors(PageId id) const = 0;
  virtual std::vector<CategoryRef> CategoriesOf(PageId id) const = 0;
  // Articles listed by `title` when it is a disambiguation page, else by
  // "<title> (disambiguation)"; empty when neither exists.
  virtual std::vector<KBRecord> DisambiguationCandidates(std::string_view title) const = 0;

  KBRecord Lookup(std::string_view title) const;
};

constexpr int kMaxRedirectDepth = 5;

// On-disk store produced by PreprocessDump. Files: records.bin, titles.idx,
// offsets.idx, inlinks.idx, categories.bin, stats.json; every binary file
// starts with the magic "EKGKB01\0" and is little-endian.
class KBStore : public KnowledgeBase {
 public:
  static std::unique_ptr<KBStore> Open(const std::filesystem::path& dir);

  size_t dimension() const override { return dimension_; }
  std::optional<KBRecord> FindTitle(std::string_view title) const override;
  KBRecord Get(PageId id) const override;
  Neighborhood Neighbors(PageId id) const override;
  std::vector<CategoryRef> CategoriesOf(PageId id) const override;
  std::vector<KBRecord> DisambiguationCandidates(std::string_view title) const override;

  // Raw record without redirect resolution.
  const KBRecord& Raw(PageId id) const;
  std::vector<PageId> InLinks(PageId id) const;
  const KBStats& stats() const { return stats_; }
  const std::vector<KBRecord>& records() const { return records_; }

 private:
  KBStore() = default;
  const KBRecord& Resolve(const KBRecord& start) const;

  size_t dimension_ = 0;
  KBStats stats_;
  std::vector<KBRecord> records_;
  std::unordered_map<PageId, size_t> by_id_;
  std::map<std::string, PageId, std::less<>> by_title_;
  std::unordered_map<PageId, std::vector<PageId>> in_links_;
  std::map<std::string, embedding::Vector, std::less<>> category_embeddings_;
};

struct PreprocessOptions {
  // Overrides the timestamp taken from the dump when non-empty.
  std::string build_timestamp;
};

// Streams a MediaWiki export and writes a complete store to `out_dir`. The
// store is assembled in a sibling directory and swapped in by rename, so
// readers of an existing store never see a partial build.
KBStats PreprocessDump(std::istream& xml, const embedding::EmbeddingProvider& embedder,
                       const std::filesystem::path& out_dir, const PreprocessOptions& options = {});

}  // namespace edukg::kb
