#include <algorithm>
#include <map>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/evaluation/evaluation.h"

namespace edukg::evaluation {

namespace {

struct Paragraph {
  std::vector<std::string> tokens;
  std::set<size_t> breaks;  // token index before which a new line starts
};

std::vector<Paragraph> SplitParagraphs(std::string_view textv) {
  std::vector<Paragraph> out;
  Paragraph current;
  bool open = false;
  size_t pos = 0;
  while (pos <= textv.size()) {
    size_t nl = textv.find('\n', pos);
    std::string_view line = textv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    std::vector<std::string> words = text::SplitWhitespace(line);
    if (words.empty()) {
      if (open) out.push_back(std::move(current));
      current = {};
      open = false;
    } else {
      if (open) current.breaks.insert(current.tokens.size());
      current.tokens.insert(current.tokens.end(), words.begin(), words.end());
      open = true;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (open) out.push_back(std::move(current));
  return out;
}

bool ParagraphsMatch(const Paragraph& a, const Paragraph& b) {
  std::map<std::string_view, long> counts;
  for (const auto& t : a.tokens) ++counts[t];
  size_t shared = 0;
  for (const auto& t : b.tokens) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++shared;
    }
  }
  const size_t longer = std::max(a.tokens.size(), b.tokens.size());
  return longer > 0 && static_cast<double>(shared) >= kParagraphMatchOverlap * static_cast<double>(longer);
}

// Longest common subsequence under `eq`; returns aligned index pairs in order.
template <typename Eq>
std::vector<std::pair<size_t, size_t>> Lcs(size_t n, size_t m, Eq eq) {
  std::vector<std::vector<size_t>> dp(n + 1, std::vector<size_t>(m + 1, 0));
  for (size_t i = n; i-- > 0;) {
    for (size_t j = m; j-- > 0;) {
      dp[i][j] = eq(i, j) ? dp[i + 1][j + 1] + 1 : std::max(dp[i + 1][j], dp[i][j + 1]);
    }
  }
  std::vector<std::pair<size_t, size_t>> pairs;
  size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (eq(i, j) && dp[i][j] == dp[i + 1][j + 1] + 1) {
      pairs.emplace_back(i++, j++);
    } else if (dp[i + 1][j] >= dp[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  return pairs;
}

void CompareParagraphs(const Paragraph& out, const Paragraph& gold, DiffMetrics& m) {
  auto anchors = Lcs(out.tokens.size(), gold.tokens.size(),
                     [&](size_t i, size_t j) { return out.tokens[i] == gold.tokens[j]; });

  // Unanchored stretches between consecutive anchors; paired positionally.
  size_t oi = 0, gi = 0;
  auto settle = [&](size_t o_end, size_t g_end) {
    size_t o_len = o_end - oi, g_len = g_end - gi;
    size_t paired = std::min(o_len, g_len);
    for (size_t k = 0; k < paired; ++k) {
      if (EditDistance(out.tokens[oi + k], gold.tokens[gi + k]) <= kMisspellingDistance) {
        ++m.w_misspelled;
      } else {
        ++m.w_plus;
        ++m.w_minus;
      }
    }
    m.w_plus += o_len - paired;
    m.w_minus += g_len - paired;
  };
  for (const auto& [a, b] : anchors) {
    settle(a, b);
    oi = a + 1;
    gi = b + 1;
  }
  settle(out.tokens.size(), gold.tokens.size());

  // Line breaks compared in gold token positions; an output break maps to
  // the gold index of the token that follows it.
  std::vector<size_t> out_to_gold(out.tokens.size() + 1, gold.tokens.size());
  {
    size_t next_gold = 0;
    size_t k = 0;
    for (size_t i = 0; i < out.tokens.size(); ++i) {
      while (k < anchors.size() && anchors[k].first < i) ++k;
      if (k < anchors.size() && anchors[k].first == i) {
        out_to_gold[i] = anchors[k].second;
        next_gold = anchors[k].second + 1;
      } else {
        out_to_gold[i] = next_gold;
      }
    }
  }
  std::set<size_t> mapped;
  for (size_t b : out.breaks) mapped.insert(out_to_gold[b]);
  for (size_t b : mapped) m.nl_plus += !gold.breaks.contains(b);
  for (size_t b : gold.breaks) m.nl_minus += !mapped.contains(b);
}

}  // namespace

size_t EditDistance(std::string_view a, std::string_view b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

DiffMetrics EvalExtractionDiff(std::string_view output, std::string_view gold) {
  const std::vector<Paragraph> out = SplitParagraphs(output);
  const std::vector<Paragraph> ref = SplitParagraphs(gold);
  DiffMetrics m;

  auto in_order = Lcs(out.size(), ref.size(), [&](size_t i, size_t j) { return ParagraphsMatch(out[i], ref[j]); });
  std::vector<bool> out_used(out.size()), ref_used(ref.size());
  for (const auto& [i, j] : in_order) {
    out_used[i] = ref_used[j] = true;
    CompareParagraphs(out[i], ref[j], m);
  }
  for (size_t i = 0; i < out.size(); ++i) {
    if (out_used[i]) continue;
    for (size_t j = 0; j < ref.size(); ++j) {
      if (ref_used[j] || !ParagraphsMatch(out[i], ref[j])) continue;
      out_used[i] = ref_used[j] = true;
      ++m.p_rearranged;
      CompareParagraphs(out[i], ref[j], m);
      break;
    }
  }
  m.p_plus = static_cast<size_t>(std::count(out_used.begin(), out_used.end(), false));
  m.p_minus = static_cast<size_t>(std::count(ref_used.begin(), ref_used.end(), false));
  return m;
}

KeyphraseScores EvalKeyphrases(const std::vector<std::string>& predicted, const std::set<std::string>& gold,
                               size_t k) {
  if (k == 0) throw ContractViolation("k must be at least 1");
  if (gold.empty()) throw ContractViolation("recall is undefined for an empty gold set");
  std::set<std::string> gold_norm;
  for (const auto& g : gold) gold_norm.insert(text::NormalizePhrase(g));
  const size_t top = std::min(k, predicted.size());
  std::set<std::string> hits;
  for (size_t i = 0; i < top; ++i) {
    std::string p = text::NormalizePhrase(predicted[i]);
    if (gold_norm.contains(p)) hits.insert(p);
  }
  KeyphraseScores s;
  if (top == 0) return s;
  s.precision = static_cast<double>(hits.size()) / static_cast<double>(top);
  s.recall = static_cast<double>(hits.size()) / static_cast<double>(gold_norm.size());
  if (s.precision + s.recall > 0) s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace edukg::evaluation
