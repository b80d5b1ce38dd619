#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "edukg/embedding/embedding.h"

namespace edukg::keyphrase {

constexpr size_t kDefaultCount = 15;

struct Span {
  size_t begin = 0;
  size_t end = 0;  // byte offsets into the source text, end exclusive
  bool operator==(const Span&) const = default;
};

struct Keyphrase {
  std::string text;  // lowercased, single-spaced
  double score = 0;
  Span span;
};

using StopwordSet = std::set<std::string, std::less<>>;

// Standard English stopword list bundled with the library.
const StopwordSet& DefaultStopwords();
std::string_view StopwordsVersion();

struct Candidate {
  std::string text;
  Span span;
  std::vector<std::string> words;
};

constexpr size_t kMaxPhraseWords = 5;

// Maximal runs of alphabetic non-stopword tokens; runs end at punctuation,
// line breaks and digits, and are cut into pieces of at most five words.
std::vector<Candidate> SelectCandidates(std::string_view text,
                                        const StopwordSet& stopwords = DefaultStopwords());

struct SingleRankOptions {
  size_t window = 10;
  double damping = 0.85;
  double tolerance = 1e-6;
  int max_iterations = 100;
};

// Word scores of the co-occurrence graph, keyed by lowercased word.
std::map<std::string, double> SingleRankWordScores(std::string_view text,
                                                   const SingleRankOptions& options = {},
                                                   const StopwordSet& stopwords = DefaultStopwords());

std::vector<Keyphrase> ExtractSingleRank(std::string_view text, size_t n = kDefaultCount,
                                         const SingleRankOptions& options = {});

std::vector<Keyphrase> ExtractEmbedRank(std::string_view text, size_t n,
                                        const embedding::EmbeddingProvider& embedder);

enum class Method { kSingleRank, kEmbedRank };

Method ParseMethod(std::string_view name);

}  // namespace edukg::keyphrase
