#pragma once

#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "edukg/embedding/embedding.h"
#include "edukg/kb/kb.h"
#include "edukg/keyphrase/keyphrase.h"

namespace edukg::annotation {

constexpr double kDefaultPruneThreshold = 0.192;
constexpr size_t kMaxConceptsPerSlide = 15;

enum class LinkSource { kRemote, kLocal, kDisambiguation };

struct ConceptCandidate {
  std::string surface_form;
  kb::PageId page_id = 0;
  std::string title;
  LinkSource source = LinkSource::kLocal;
};

// A Main Concept of a slide. weight is the mean of the two cosines, which
// orders concepts exactly as their sum does while staying in [-1, 1].
struct WeightedConcept {
  kb::PageId page_id = 0;
  std::string title;
  double w_lm = 0;
  double w_slide = 0;
  double weight = 0;
  int slide_no = 0;
  bool low_confidence = false;  // abstract was empty

  bool operator==(const WeightedConcept&) const = default;
};

class EntityLinker {
 public:
  virtual ~EntityLinker() = default;
  virtual std::string name() const = 0;
  // Candidates deduplicated by page id, in order of first occurrence.
  virtual std::vector<ConceptCandidate> Link(const std::vector<keyphrase::Keyphrase>& keyphrases,
                                             std::string_view slide_text) const = 0;
};

// Matches keyphrases, and failing that their longest sub-phrases, against KB
// titles and redirects. Each phrase is tried as written, lowercased and with
// every word capitalized.
class LocalLinker : public EntityLinker {
 public:
  explicit LocalLinker(const kb::KnowledgeBase& kb) : kb_(kb) {}
  std::string name() const override { return "local"; }
  std::vector<ConceptCandidate> Link(const std::vector<keyphrase::Keyphrase>& keyphrases,
                                     std::string_view slide_text) const override;

 private:
  const kb::KnowledgeBase& kb_;
};

struct RemoteLinkerOptions {
  double confidence = 0.35;
  int attempts = 3;
  int backoff_ms = 200;
  int timeout_ms = 30000;
};

// Spotlight-style annotation service client. The request text is the
// keyphrases followed by the slide text; only resources spotted inside the
// keyphrase part are kept. At most four requests are in flight at once.
class RemoteLinker : public EntityLinker {
 public:
  RemoteLinker(std::string endpoint, const kb::KnowledgeBase& kb, RemoteLinkerOptions options = {});
  std::string name() const override { return "remote"; }
  std::vector<ConceptCandidate> Link(const std::vector<keyphrase::Keyphrase>& keyphrases,
                                     std::string_view slide_text) const override;

  static constexpr std::ptrdiff_t kMaxInFlight = 4;

 private:
  std::string origin_;
  std::string path_;
  const kb::KnowledgeBase& kb_;
  RemoteLinkerOptions options_;
  mutable std::counting_semaphore<kMaxInFlight> in_flight_{kMaxInFlight};
};

// Maps a Spotlight resource URI to a KB title: the tail after the last '/',
// percent-decoded, underscores as spaces.
std::string TitleFromResourceUri(std::string_view uri);

// w_lm and w_slide against the record's abstract embedding.
WeightedConcept WeighConcept(const kb::KBRecord& record, const embedding::Vector& slide_embedding,
                             const embedding::Vector& material_embedding, int slide_no);

WeightedConcept WeighConcept(const ConceptCandidate& candidate, std::string_view slide_text,
                             std::string_view material_text, const kb::KnowledgeBase& kb,
                             const embedding::EmbeddingProvider& embedder, int slide_no = 0);

// Replaces the concept by the best-weighted article listed on its
// disambiguation page; the original competes too. Ties go to the smallest title.
WeightedConcept Disambiguate(const WeightedConcept& mc, const embedding::Vector& slide_embedding,
                             const embedding::Vector& material_embedding, const kb::KnowledgeBase& kb);

WeightedConcept Disambiguate(const WeightedConcept& mc, std::string_view slide_text,
                             std::string_view material_text, const kb::KnowledgeBase& kb,
                             const embedding::EmbeddingProvider& embedder);

// Drops concepts whose weight is strictly below `threshold`; order kept.
std::vector<WeightedConcept> Prune(std::vector<WeightedConcept> concepts,
                                   double threshold = kDefaultPruneThreshold);

struct AnnotationConfig {
  size_t keyphrase_count = keyphrase::kDefaultCount;
  keyphrase::Method keyphrase_method = keyphrase::Method::kEmbedRank;
  double threshold = kDefaultPruneThreshold;
  bool disambiguate = true;
  size_t max_concepts = kMaxConceptsPerSlide;
};

struct AnnotationDeps {
  const kb::KnowledgeBase& kb;
  const embedding::EmbeddingProvider& embedder;
  const EntityLinker& linker;
};

std::vector<keyphrase::Keyphrase> ExtractKeyphrases(std::string_view text, const AnnotationConfig& config,
                                                    const embedding::EmbeddingProvider& embedder);

// keyphrases -> link -> weigh -> disambiguate -> prune. One concept per page
// id (highest weight), sorted by weight then title, capped at max_concepts.
std::vector<WeightedConcept> AnnotateSlide(int slide_no, std::string_view slide_text,
                                           const embedding::Vector& material_embedding,
                                           const AnnotationDeps& deps,
                                           const AnnotationConfig& config = {});

std::vector<WeightedConcept> AnnotateSlide(int slide_no, std::string_view slide_text,
                                           std::string_view material_text,
                                           const AnnotationDeps& deps,
                                           const AnnotationConfig& config = {});

}  // namespace edukg::annotation
