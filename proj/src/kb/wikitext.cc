#include "edukg/kb/wikitext.h"

#include <algorithm>
#include <cctype>
#include <set>

#include "edukg/common/text.h"

namespace edukg::kb::wikitext {

namespace {

constexpr std::string_view kNamespaces[] = {
    "file",  "image", "category", "template", "wikipedia", "wp",    "help",  "portal",
    "media", "special", "user",   "talk",     "draft",     "module", "mediawiki"};

std::string LowerPrefix(std::string_view s) {
  size_t colon = s.find(':');
  if (colon == std::string_view::npos) return {};
  return text::ToLowerAscii(text::Trim(s.substr(0, colon)));
}

// Language links such as "de:Graph".
bool IsInterwikiPrefix(const std::string& prefix) {
  return !prefix.empty() && prefix.size() <= 3 &&
         std::all_of(prefix.begin(), prefix.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool IsNamespaced(std::string_view target) {
  std::string prefix = LowerPrefix(target);
  if (prefix.empty()) return false;
  for (auto ns : kNamespaces) {
    if (prefix == ns) return true;
  }
  return IsInterwikiPrefix(prefix);
}

std::string RemoveComments(std::string_view s) {
  std::string out;
  size_t i = 0;
  while (i < s.size()) {
    size_t open = s.find("<!--", i);
    if (open == std::string_view::npos) {
      out.append(s.substr(i));
      break;
    }
    out.append(s.substr(i, open - i));
    size_t close = s.find("-->", open + 4);
    if (close == std::string_view::npos) break;
    i = close + 3;
  }
  return out;
}

bool StartsWithCi(std::string_view s, size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (size_t k = 0; k < prefix.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[pos + k])) != prefix[k]) return false;
  }
  return true;
}

std::string RemoveRefs(std::string_view s) {
  std::string out;
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<' && StartsWithCi(s, i, "<ref")) {
      size_t gt = s.find('>', i);
      if (gt == std::string_view::npos) break;
      if (s[gt - 1] == '/') {
        i = gt + 1;
        continue;
      }
      size_t close = i;
      bool found = false;
      for (size_t k = gt; k < s.size(); ++k) {
        if (s[k] == '<' && StartsWithCi(s, k, "</ref")) {
          size_t end = s.find('>', k);
          close = end == std::string_view::npos ? s.size() : end + 1;
          found = true;
          break;
        }
      }
      i = found ? close : gt + 1;
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

// Finds the "]]" closing the "[[" at `open`, honoring nesting.
size_t MatchLink(std::string_view s, size_t open) {
  int depth = 0;
  for (size_t i = open; i + 1 < s.size(); ++i) {
    if (s[i] == '[' && s[i + 1] == '[') {
      ++depth;
      ++i;
    } else if (s[i] == ']' && s[i + 1] == ']') {
      if (--depth == 0) return i;
      ++i;
    }
  }
  return std::string_view::npos;
}

struct RawLink {
  std::string target;  // before '|', untrimmed
  std::string label;   // after the last '|', or the target
  size_t begin, end;   // covers "[[" .. "]]"
};

std::vector<RawLink> TopLevelLinks(std::string_view s) {
  std::vector<RawLink> out;
  size_t i = 0;
  while (true) {
    size_t open = s.find("[[", i);
    if (open == std::string_view::npos) break;
    size_t close = MatchLink(s, open);
    if (close == std::string_view::npos) break;
    std::string_view inner = s.substr(open + 2, close - open - 2);
    size_t bar = inner.find('|');
    RawLink link;
    link.target = std::string(inner.substr(0, bar));
    link.label = bar == std::string_view::npos ? link.target : std::string(inner.substr(inner.rfind('|') + 1));
    link.begin = open;
    link.end = close + 2;
    out.push_back(std::move(link));
    i = close + 2;
  }
  return out;
}

void CollectTargets(std::string_view s, std::vector<std::string>& out) {
  for (const auto& link : TopLevelLinks(s)) {
    std::string target = text::Trim(link.target);
    std::string_view inner = s.substr(link.begin + 2, link.end - link.begin - 4);
    if (!target.empty() && target[0] == ':') target = text::Trim(target.substr(1));
    if (IsNamespaced(target)) {
      // Captions of files may hold further links.
      if (LowerPrefix(target) == "file" || LowerPrefix(target) == "image") {
        CollectTargets(inner.substr(std::min(inner.size(), link.target.size())), out);
      }
      continue;
    }
    size_t hash = target.find('#');
    if (hash != std::string::npos) target = target.substr(0, hash);
    target = NormalizeTitle(target);
    if (!target.empty()) out.push_back(std::move(target));
  }
}

}  // namespace

std::string NormalizeTitle(std::string_view title) {
  std::string s(title);
  std::replace(s.begin(), s.end(), '_', ' ');
  s = text::Join(text::SplitWhitespace(s), " ");
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::optional<std::string> RedirectTarget(std::string_view raw) {
  std::string t = text::Trim(raw);
  if (!StartsWithCi(t, 0, "#redirect")) return std::nullopt;
  size_t open = t.find("[[");
  if (open == std::string::npos) return std::nullopt;
  size_t close = t.find("]]", open);
  if (close == std::string::npos) return std::nullopt;
  std::string target = t.substr(open + 2, close - open - 2);
  target = target.substr(0, target.find('|'));
  target = target.substr(0, target.find('#'));
  target = NormalizeTitle(target);
  if (target.empty()) return std::nullopt;
  return target;
}

std::vector<std::string> LinkTargets(std::string_view raw) {
  std::string s = RemoveComments(raw);
  std::vector<std::string> out;
  CollectTargets(s, out);
  return out;
}

std::vector<std::string> Categories(std::string_view raw) {
  std::string s = RemoveComments(raw);
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& link : TopLevelLinks(s)) {
    std::string target = text::Trim(link.target);
    if (LowerPrefix(target) != "category") continue;  // leading ':' means a plain link
    std::string name = NormalizeTitle(target.substr(target.find(':') + 1));
    if (!name.empty() && seen.insert(name).second) out.push_back(name);
  }
  return out;
}

bool HasDisambiguationTemplate(std::string_view raw) {
  size_t i = 0;
  while ((i = raw.find("{{", i)) != std::string_view::npos) {
    size_t k = i + 2;
    while (k < raw.size() && (raw[k] == ' ' || raw[k] == '\n')) ++k;
    if (StartsWithCi(raw, k, "disambig")) return true;
    i += 2;
  }
  return false;
}

std::string StripTemplates(std::string_view input, int max_passes) {
  std::string s(input);
  for (int pass = 0; pass < max_passes; ++pass) {
    std::string out;
    bool removed = false;
    size_t i = 0;
    while (i < s.size()) {
      if (s.compare(i, 2, "{{") == 0) {
        // Innermost: no further "{{" before the matching "}}".
        size_t close = s.find("}}", i + 2);
        size_t inner_open = s.find("{{", i + 2);
        if (close != std::string::npos &&
            (inner_open == std::string::npos || inner_open > close)) {
          i = close + 2;
          removed = true;
          continue;
        }
      }
      out.push_back(s[i++]);
    }
    s.swap(out);
    if (!removed) break;
  }
  return s;
}

std::string Abstract(std::string_view raw) {
  // Cut at the first heading line.
  std::string lead;
  size_t pos = 0;
  while (pos <= raw.size()) {
    size_t eol = raw.find('\n', pos);
    std::string_view line = raw.substr(pos, eol == std::string_view::npos ? raw.size() - pos : eol - pos);
    std::string trimmed = text::Trim(line);
    if (trimmed.size() >= 2 && trimmed.front() == '=' && trimmed.back() == '=') break;
    lead.append(line);
    lead.push_back('\n');
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  std::string s = RemoveComments(lead);
  s = RemoveRefs(s);
  s = StripTemplates(s);

  // Links: drop files and categories, keep labels otherwise.
  std::string linked;
  size_t i = 0;
  for (const auto& link : TopLevelLinks(s)) {
    linked.append(s, i, link.begin - i);
    std::string target = text::Trim(link.target);
    bool colon_link = !target.empty() && target[0] == ':';
    std::string prefix = LowerPrefix(colon_link ? target.substr(1) : target);
    bool drop = prefix == "file" || prefix == "image" ||
                (!colon_link && (prefix == "category" || IsInterwikiPrefix(prefix)));
    if (!drop) linked.append(link.label);
    i = link.end;
  }
  linked.append(s, std::min(i, s.size()));

  // External links [http://x label] keep the label.
  std::string ext;
  for (size_t k = 0; k < linked.size(); ++k) {
    if (linked[k] == '[' && (linked.compare(k + 1, 4, "http") == 0)) {
      size_t close = linked.find(']', k);
      if (close != std::string::npos) {
        size_t space = linked.find(' ', k);
        if (space != std::string::npos && space < close) ext.append(linked, space + 1, close - space - 1);
        k = close;
        continue;
      }
    }
    ext.push_back(linked[k]);
  }

  // Bold/italic quotes and leftover tags.
  std::string plain;
  for (size_t k = 0; k < ext.size(); ++k) {
    if (ext[k] == '\'' && k + 1 < ext.size() && ext[k + 1] == '\'') {
      while (k + 1 < ext.size() && ext[k + 1] == '\'') ++k;
      continue;
    }
    if (ext[k] == '<') {
      size_t close = ext.find('>', k);
      if (close != std::string::npos) {
        k = close;
        continue;
      }
    }
    plain.push_back(ext[k]);
  }
  return text::Join(text::SplitWhitespace(plain), " ");
}

}  // namespace edukg::kb::wikitext
