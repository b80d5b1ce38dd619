#include <algorithm>
#include <cmath>
#include <map>

#include "edukg/common/text.h"
#include "edukg/extraction/extraction.h"

namespace edukg::extraction {

namespace {

// Inline bullet glyphs: U+2022, U+25E6, U+25AA.
constexpr std::string_view kInlineBullets[] = {"\xE2\x80\xA2", "\xE2\x97\xA6", "\xE2\x96\xAA"};
constexpr std::string_view kEnDash = "\xE2\x80\x93";

bool IsSpace(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool StartsWithGlyphBullet(std::string_view s) {
  std::string t = text::Trim(s);
  std::string_view v = t;
  for (auto g : kInlineBullets) {
    if (v.substr(0, g.size()) == g) return true;
  }
  auto followed_by_space = [&](size_t n) { return v.size() == n || IsSpace(v[n]); };
  if (v.substr(0, kEnDash.size()) == kEnDash) return followed_by_space(kEnDash.size());
  if (!v.empty() && (v[0] == '-' || v[0] == '*')) return followed_by_space(1);
  size_t digits = 0;
  while (digits < v.size() && digits < 3 && v[digits] >= '0' && v[digits] <= '9') ++digits;
  if (digits > 0 && digits < v.size() && v[digits] == '.') return followed_by_space(digits + 1);
  if (v.size() >= 2 && text::IsAlphaByte(static_cast<unsigned char>(v[0])) &&
      static_cast<unsigned char>(v[0]) < 0x80 && v[1] == ')') {
    return followed_by_space(2);
  }
  return false;
}

// Splits at bullet glyphs that follow whitespace inside an element.
std::vector<std::string> SplitInlineBullets(const std::string& s) {
  std::vector<std::string> pieces;
  size_t start = 0;
  for (size_t i = 1; i < s.size(); ++i) {
    if (!IsSpace(s[i - 1])) continue;
    for (auto g : kInlineBullets) {
      if (std::string_view(s).substr(i, g.size()) == g) {
        pieces.push_back(text::Trim(std::string_view(s).substr(start, i - start)));
        start = i;
        break;
      }
    }
  }
  pieces.push_back(text::Trim(std::string_view(s).substr(start)));
  pieces.erase(std::remove_if(pieces.begin(), pieces.end(),
                              [](const std::string& p) { return p.empty(); }),
               pieces.end());
  return pieces;
}

size_t CodePoints(std::string_view s) {
  size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

double CharWidth(const PositionedElement& e) {
  size_t n = CodePoints(e.text);
  return n == 0 ? e.bbox.width() : e.bbox.width() / static_cast<double>(n);
}

struct Item {
  const PositionedElement* element;
  SegmentRole role;
  bool bullet_start;
};

bool ReadingOrderLess(const PositionedElement& a, const PositionedElement& b) {
  auto key = [](const PositionedElement& e) {
    return std::make_tuple(-std::lround(e.bbox.y1), e.bbox.x0, -e.bbox.y0, e.bbox.x1,
                           e.font_size, std::string_view(e.text));
  };
  return key(a) < key(b);
}

bool HasGraphicBullet(const PositionedElement& t, const std::vector<const PositionedElement*>& graphics,
                      const SegmentationConfig& cfg) {
  const double tol = cfg.bullet_baseline_tolerance;
  for (const auto* g : graphics) {
    if (!(g->bbox.area() < cfg.bullet_area_max)) continue;
    const double gap = t.bbox.x0 - g->bbox.x1;
    if (gap < -tol || gap > 2.0 * t.font_size) continue;
    if (g->bbox.y0 < t.bbox.y0 - tol || g->bbox.y1 > t.bbox.y1 + tol) continue;
    return true;
  }
  return false;
}

bool Boundary(const PositionedElement& a, const PositionedElement& b, const SegmentationConfig& cfg) {
  if (std::fabs(a.font_size - b.font_size) > cfg.font_split) return true;
  const double vertical_gap = a.bbox.y0 - b.bbox.y1;
  if (vertical_gap > 0) {
    return vertical_gap > cfg.vertical_gap_factor * std::max(a.bbox.height(), b.bbox.height());
  }
  const double horizontal_gap = b.bbox.x0 - a.bbox.x1;
  return horizontal_gap > cfg.horizontal_gap_factor * std::max(CharWidth(a), CharWidth(b));
}

}  // namespace

const char* RoleName(SegmentRole role) {
  switch (role) {
    case SegmentRole::kContent: return "content";
    case SegmentRole::kFigureCaption: return "figure_caption";
    case SegmentRole::kNoise: return "noise";
  }
  return "?";
}

NoiseKey MakeNoiseKey(const PositionedElement& e, double bucket) {
  return NoiseKey{static_cast<int>(std::lround(e.bbox.x0 / bucket)),
                  static_cast<int>(std::lround(e.bbox.y0 / bucket)),
                  static_cast<int>(std::lround(e.bbox.x1 / bucket)),
                  static_cast<int>(std::lround(e.bbox.y1 / bucket)), text::AlphaOnlyLower(e.text)};
}

NoiseSet DetectRecurringNoise(const PageSet& pages, double bucket) {
  std::map<NoiseKey, size_t> page_hits;
  for (const auto& page : pages.pages) {
    std::set<NoiseKey> seen;
    for (const auto& e : page.elements) {
      if (e.kind != ElementKind::kText) continue;
      seen.insert(MakeNoiseKey(e, bucket));
    }
    for (const auto& k : seen) ++page_hits[k];
  }
  const size_t n = pages.page_count();
  NoiseSet out;
  for (const auto& [key, k] : page_hits) {
    // A fragment seen on a single page is not recurring, whatever the page count.
    if (k >= 2 && (2 * k > n || (n < 10 && k >= 5))) out.insert(key);
  }
  return out;
}

SegmentList SegmentPage(const Page& page, const NoiseSet& noise, const SegmentationConfig& cfg) {
  std::vector<const PositionedElement*> graphics;
  std::vector<const PositionedElement*> texts;
  for (const auto& e : page.elements) {
    (e.kind == ElementKind::kGraphic ? graphics : texts).push_back(&e);
  }
  std::sort(texts.begin(), texts.end(),
            [](const auto* a, const auto* b) { return ReadingOrderLess(*a, *b); });

  std::vector<Item> items;
  for (const auto* t : texts) {
    SegmentRole role = SegmentRole::kContent;
    if (noise.count(MakeNoiseKey(*t, cfg.noise_bucket))) {
      role = SegmentRole::kNoise;
    } else {
      for (const auto* g : graphics) {
        if (g->bbox.area() >= cfg.bullet_area_max && t->bbox.Overlaps(g->bbox)) {
          role = SegmentRole::kFigureCaption;
          break;
        }
      }
    }
    bool bullet = StartsWithGlyphBullet(t->text) || HasGraphicBullet(*t, graphics, cfg);
    items.push_back({t, role, bullet});
  }

  SegmentList out;
  out.page_no = page.page_no;
  std::string current;
  SegmentRole current_role = SegmentRole::kContent;
  const PositionedElement* prev = nullptr;
  auto flush = [&] {
    if (!current.empty()) out.segments.push_back({current, current_role});
    current.clear();
    prev = nullptr;
  };
  for (const auto& item : items) {
    if (item.role == SegmentRole::kNoise) {
      flush();
      std::string t = text::Trim(item.element->text);
      if (!t.empty()) out.segments.push_back({t, SegmentRole::kNoise});
      continue;
    }
    std::vector<std::string> pieces = SplitInlineBullets(item.element->text);
    if (pieces.empty()) continue;
    const bool split = prev == nullptr || item.role != current_role || item.bullet_start ||
                       Boundary(*prev, *item.element, cfg);
    if (split) {
      flush();
      current = pieces[0];
      current_role = item.role;
    } else {
      current += " " + pieces[0];
    }
    for (size_t i = 1; i < pieces.size(); ++i) {
      flush();
      current = pieces[i];
      current_role = item.role;
    }
    prev = item.element;
  }
  flush();
  return out;
}

MaterialText ExtractMaterialText(const PageSet& pages, const NoiseSet& noise,
                                 const SegmentationConfig& cfg) {
  MaterialText out;
  for (const auto& page : pages.pages) {
    SegmentList segs = SegmentPage(page, noise, cfg);
    std::vector<std::string> lines;
    for (const auto& s : segs.segments) {
      if (s.role != SegmentRole::kNoise) lines.push_back(s.text);
    }
    out.slide_texts.push_back(text::Join(lines, "\n"));
  }
  out.material_text = text::Join(out.slide_texts, "\n");
  return out;
}

}  // namespace edukg::extraction
