#include "edukg/annotation/annotation.h"

#include <algorithm>
#include <map>
#include <set>

#include "edukg/common/error.h"
#include "edukg/common/text.h"

namespace edukg::annotation {

namespace {

// "solar system" -> "Solar System"; ASCII letters only.
std::string CapitalizeWords(std::string s) {
  bool start = true;
  for (char& c : s) {
    if (start && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    start = c == ' ';
  }
  return s;
}

bool BetterConcept(const WeightedConcept& a, const WeightedConcept& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  return a.title < b.title;
}

}  // namespace

std::vector<ConceptCandidate> LocalLinker::Link(const std::vector<keyphrase::Keyphrase>& keyphrases,
                                                std::string_view slide_text) const {
  std::vector<ConceptCandidate> out;
  std::set<kb::PageId> seen;
  for (const auto& kp : keyphrases) {
    std::string surface = kp.text;
    if (kp.span.end > kp.span.begin && kp.span.end <= slide_text.size()) {
      surface = std::string(slide_text.substr(kp.span.begin, kp.span.end - kp.span.begin));
    }
    std::vector<std::string> words = text::SplitWhitespace(surface);
    size_t i = 0;
    while (i < words.size()) {
      size_t matched = 0;
      for (size_t len = words.size() - i; len >= 1 && matched == 0; --len) {
        std::vector<std::string> part(words.begin() + static_cast<long>(i),
                                      words.begin() + static_cast<long>(i + len));
        const std::string phrase = text::Join(part, " ");
        std::optional<kb::KBRecord> rec = kb_.FindTitle(phrase);
        if (!rec) rec = kb_.FindTitle(text::ToLowerAscii(phrase));
        if (!rec) rec = kb_.FindTitle(CapitalizeWords(text::ToLowerAscii(phrase)));
        if (!rec) continue;
        matched = len;
        if (seen.insert(rec->page_id).second) {
          out.push_back({phrase, rec->page_id, rec->title, LinkSource::kLocal});
        }
      }
      i += std::max<size_t>(matched, 1);
    }
  }
  return out;
}

WeightedConcept WeighConcept(const kb::KBRecord& record, const embedding::Vector& slide_embedding,
                             const embedding::Vector& material_embedding, int slide_no) {
  WeightedConcept c;
  c.page_id = record.page_id;
  c.title = record.title;
  c.slide_no = slide_no;
  c.low_confidence = record.abstract.empty();
  c.w_lm = embedding::Cosine(material_embedding, record.abstract_embedding);
  c.w_slide = embedding::Cosine(slide_embedding, record.abstract_embedding);
  c.weight = (c.w_lm + c.w_slide) / 2.0;
  return c;
}

WeightedConcept WeighConcept(const ConceptCandidate& candidate, std::string_view slide_text,
                             std::string_view material_text, const kb::KnowledgeBase& kb,
                             const embedding::EmbeddingProvider& embedder, int slide_no) {
  return WeighConcept(kb.Get(candidate.page_id), embedder.Embed(slide_text),
                      embedder.Embed(material_text), slide_no);
}

WeightedConcept Disambiguate(const WeightedConcept& mc, const embedding::Vector& slide_embedding,
                             const embedding::Vector& material_embedding, const kb::KnowledgeBase& kb) {
  std::vector<kb::KBRecord> alternatives = kb.DisambiguationCandidates(mc.title);
  if (alternatives.empty()) return mc;
  WeightedConcept best = mc;
  for (const auto& alt : alternatives) {
    WeightedConcept c = WeighConcept(alt, slide_embedding, material_embedding, mc.slide_no);
    if (BetterConcept(c, best)) best = c;
  }
  return best;
}

WeightedConcept Disambiguate(const WeightedConcept& mc, std::string_view slide_text,
                             std::string_view material_text, const kb::KnowledgeBase& kb,
                             const embedding::EmbeddingProvider& embedder) {
  return Disambiguate(mc, embedder.Embed(slide_text), embedder.Embed(material_text), kb);
}

std::vector<WeightedConcept> Prune(std::vector<WeightedConcept> concepts, double threshold) {
  concepts.erase(std::remove_if(concepts.begin(), concepts.end(),
                                [threshold](const WeightedConcept& c) { return c.weight < threshold; }),
                 concepts.end());
  return concepts;
}

std::vector<keyphrase::Keyphrase> ExtractKeyphrases(std::string_view text, const AnnotationConfig& config,
                                                    const embedding::EmbeddingProvider& embedder) {
  switch (config.keyphrase_method) {
    case keyphrase::Method::kSingleRank:
      return keyphrase::ExtractSingleRank(text, config.keyphrase_count);
    case keyphrase::Method::kEmbedRank:
      return keyphrase::ExtractEmbedRank(text, config.keyphrase_count, embedder);
  }
  return {};
}

std::vector<WeightedConcept> AnnotateSlide(int slide_no, std::string_view slide_text,
                                           const embedding::Vector& material_embedding,
                                           const AnnotationDeps& deps, const AnnotationConfig& config) {
  std::vector<keyphrase::Keyphrase> phrases = ExtractKeyphrases(slide_text, config, deps.embedder);
  if (phrases.empty()) return {};
  std::vector<ConceptCandidate> candidates = deps.linker.Link(phrases, slide_text);
  if (candidates.empty()) return {};
  const embedding::Vector slide_embedding = deps.embedder.Embed(slide_text);

  std::vector<WeightedConcept> weighed;
  for (const auto& cand : candidates) {
    WeightedConcept c = WeighConcept(deps.kb.Get(cand.page_id), slide_embedding, material_embedding, slide_no);
    if (config.disambiguate) c = Disambiguate(c, slide_embedding, material_embedding, deps.kb);
    weighed.push_back(std::move(c));
  }
  weighed = Prune(std::move(weighed), config.threshold);

  std::map<kb::PageId, WeightedConcept> best;
  for (auto& c : weighed) {
    auto it = best.find(c.page_id);
    if (it == best.end() || BetterConcept(c, it->second)) best[c.page_id] = c;
  }
  std::vector<WeightedConcept> out;
  for (auto& [_, c] : best) out.push_back(std::move(c));
  std::sort(out.begin(), out.end(), BetterConcept);
  if (out.size() > config.max_concepts) out.resize(config.max_concepts);
  return out;
}

std::vector<WeightedConcept> AnnotateSlide(int slide_no, std::string_view slide_text,
                                           std::string_view material_text, const AnnotationDeps& deps,
                                           const AnnotationConfig& config) {
  return AnnotateSlide(slide_no, slide_text, deps.embedder.Embed(material_text), deps, config);
}

}  // namespace edukg::annotation
