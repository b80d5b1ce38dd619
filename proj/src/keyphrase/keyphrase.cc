#include "edukg/keyphrase/keyphrase.h"

#include <algorithm>
#include <cmath>

#include "edukg/common/error.h"
#include "edukg/common/text.h"

namespace edukg::keyphrase {

namespace {

struct WordToken {
  std::string lower;
  size_t begin, end;
  bool alpha;
  bool breaks_before;  // punctuation or a line break separates it from the previous token
};

std::vector<WordToken> Tokenize(std::string_view s) {
  std::vector<WordToken> out;
  bool separator = true;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (!text::IsWordByte(c)) {
      if (c != ' ' && c != '\t') separator = true;
      ++i;
      continue;
    }
    size_t j = i;
    bool alpha = true;
    while (j < s.size() && text::IsWordByte(static_cast<unsigned char>(s[j]))) {
      alpha = alpha && text::IsAlphaByte(static_cast<unsigned char>(s[j]));
      ++j;
    }
    out.push_back({text::ToLowerAscii(s.substr(i, j - i)), i, j, alpha, separator});
    separator = false;
    i = j;
  }
  return out;
}

void SortAndCap(std::vector<Keyphrase>& phrases, size_t n) {
  std::sort(phrases.begin(), phrases.end(), [](const Keyphrase& a, const Keyphrase& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  if (phrases.size() > n) phrases.resize(n);
}

}  // namespace

std::vector<Candidate> SelectCandidates(std::string_view text, const StopwordSet& stopwords) {
  std::vector<Candidate> out;
  std::vector<WordToken> run;
  auto emit = [&] {
    for (size_t start = 0; start < run.size(); start += kMaxPhraseWords) {
      size_t stop = std::min(run.size(), start + kMaxPhraseWords);
      Candidate c;
      c.span = {run[start].begin, run[stop - 1].end};
      for (size_t k = start; k < stop; ++k) c.words.push_back(run[k].lower);
      c.text = text::Join(c.words, " ");
      out.push_back(std::move(c));
    }
    run.clear();
  };
  for (auto& tok : Tokenize(text)) {
    const bool eligible = tok.alpha && !stopwords.count(tok.lower);
    if (tok.breaks_before || !eligible) emit();
    if (eligible) run.push_back(std::move(tok));
  }
  emit();
  return out;
}

std::map<std::string, double> SingleRankWordScores(std::string_view text,
                                                   const SingleRankOptions& options,
                                                   const StopwordSet& stopwords) {
  // Positions run over every word of the text; only candidate words become
  // vertices, and two vertices co-occur when fewer than `window` positions
  // apart.
  std::vector<WordToken> tokens = Tokenize(text);
  std::vector<int> in_candidate(tokens.size(), 0);
  {
    std::vector<Candidate> cands = SelectCandidates(text, stopwords);
    size_t t = 0;
    for (const auto& c : cands) {
      while (t < tokens.size() && tokens[t].begin < c.span.begin) ++t;
      while (t < tokens.size() && tokens[t].end <= c.span.end) in_candidate[t++] = 1;
    }
  }
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (in_candidate[i]) index.emplace(tokens[i].lower, 0);
  }
  size_t next = 0;
  for (auto& [_, id] : index) id = next++;
  const size_t n = index.size();
  std::map<std::string, double> scores;
  if (n == 0) return scores;

  std::vector<std::map<size_t, double>> adjacency(n);
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!in_candidate[i]) continue;
    for (size_t j = i + 1; j < tokens.size() && j < i + options.window; ++j) {
      if (!in_candidate[j] || tokens[i].lower == tokens[j].lower) continue;
      size_t a = index[tokens[i].lower], b = index[tokens[j].lower];
      adjacency[a][b] += 1.0;
      adjacency[b][a] += 1.0;
    }
  }
  std::vector<double> out_weight(n, 0.0);
  for (size_t v = 0; v < n; ++v) {
    for (const auto& [_, w] : adjacency[v]) out_weight[v] += w;
  }

  // Dangling vertices spread their mass uniformly so the scores keep summing
  // to the vertex count.
  const double d = options.damping;
  std::vector<double> score(n, 1.0), next_score(n);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double dangling = 0.0;
    for (size_t v = 0; v < n; ++v) {
      if (out_weight[v] == 0.0) dangling += score[v];
    }
    double delta = 0.0;
    for (size_t v = 0; v < n; ++v) {
      double incoming = dangling / static_cast<double>(n);
      for (const auto& [u, w] : adjacency[v]) incoming += w / out_weight[u] * score[u];
      next_score[v] = (1.0 - d) + d * incoming;
      delta = std::max(delta, std::fabs(next_score[v] - score[v]));
    }
    score.swap(next_score);
    if (delta < options.tolerance) break;
  }
  for (const auto& [word, id] : index) scores[word] = score[id];
  return scores;
}

std::vector<Keyphrase> ExtractSingleRank(std::string_view text, size_t n,
                                         const SingleRankOptions& options) {
  if (n == 0) throw ContractViolation("keyphrase count must be at least 1");
  std::map<std::string, double> words = SingleRankWordScores(text, options);
  std::map<std::string, Keyphrase> best;
  for (const auto& c : SelectCandidates(text)) {
    double score = 0.0;
    for (const auto& w : c.words) score += words.at(w);
    if (!best.count(c.text)) best[c.text] = Keyphrase{c.text, score, c.span};
  }
  std::vector<Keyphrase> out;
  for (auto& [_, k] : best) out.push_back(std::move(k));
  SortAndCap(out, n);
  return out;
}

std::vector<Keyphrase> ExtractEmbedRank(std::string_view text, size_t n,
                                        const embedding::EmbeddingProvider& embedder) {
  if (n == 0) throw ContractViolation("keyphrase count must be at least 1");
  std::vector<Candidate> cands = SelectCandidates(text);
  if (cands.empty()) return {};
  const embedding::Vector doc = embedder.Embed(text);
  std::map<std::string, Keyphrase> best;
  for (const auto& c : cands) {
    auto it = best.find(c.text);
    if (it != best.end()) continue;  // same normalized text scores the same
    double score = embedding::Cosine(embedder.Embed(c.text), doc);
    best.emplace(c.text, Keyphrase{c.text, score, c.span});
  }
  std::vector<Keyphrase> out;
  for (auto& [_, k] : best) out.push_back(std::move(k));
  SortAndCap(out, n);
  return out;
}

Method ParseMethod(std::string_view name) {
  if (name == "singlerank") return Method::kSingleRank;
  if (name == "embedrank") return Method::kEmbedRank;
  throw ConfigError("unknown keyphrase method: " + std::string(name));
}

}  // namespace edukg::keyphrase
