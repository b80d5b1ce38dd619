#pragma once

#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace edukg::extraction {

// PDF points, y grows upward.
struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool Overlaps(const BBox& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
};

enum class ElementKind { kText, kGraphic };

struct PositionedElement {
  int page_no = 1;
  std::string text;
  BBox bbox;
  double font_size = 0;  // median glyph size; 0 for graphics
  ElementKind kind = ElementKind::kText;
};

struct Page {
  int page_no = 1;
  std::vector<PositionedElement> elements;
};

struct PageSet {
  std::vector<Page> pages;
  size_t page_count() const { return pages.size(); }
  size_t element_count() const;
};

enum class InputFormat { kPdf, kElementsJson };

InputFormat ParseInputFormat(std::string_view name);

// Loads a document. Syntax errors raise ParseError carrying the line number;
// formats without a compiled-in adapter raise ConfigError.
PageSet Ingest(std::string_view document, InputFormat format);

std::string ToElementsJson(const PageSet& pages);

// A repeated fragment: location bucket plus alphabet-only lowercased text.
struct NoiseKey {
  int x0, y0, x1, y1;
  std::string text;

  auto operator<=>(const NoiseKey&) const = default;
};

using NoiseSet = std::set<NoiseKey>;

constexpr double kDefaultBucket = 5.0;

NoiseKey MakeNoiseKey(const PositionedElement& e, double bucket = kDefaultBucket);

// Fragments that recur at one location on more than half of the pages, or on
// at least five pages when the document has fewer than ten. A fragment must
// appear on two pages or more to count as recurring.
NoiseSet DetectRecurringNoise(const PageSet& pages, double bucket = kDefaultBucket);

struct SegmentationConfig {
  double font_split = 0.5;          // points
  double vertical_gap_factor = 1.5;   // x max element height
  double horizontal_gap_factor = 1.5; // x estimated character width
  double bullet_area_max = 60.0;    // pt^2
  double bullet_baseline_tolerance = 2.0;
  double noise_bucket = kDefaultBucket;
};

enum class SegmentRole { kContent, kFigureCaption, kNoise };

const char* RoleName(SegmentRole role);

struct Segment {
  std::string text;
  SegmentRole role = SegmentRole::kContent;

  bool operator==(const Segment&) const = default;
};

struct SegmentList {
  int page_no = 1;
  std::vector<Segment> segments;

  bool operator==(const SegmentList&) const = default;
};

SegmentList SegmentPage(const Page& page, const NoiseSet& noise,
                        const SegmentationConfig& config = {});

struct MaterialText {
  std::vector<std::string> slide_texts;  // sentences separated by '\n'
  std::string material_text;             // slides separated by '\n'
};

MaterialText ExtractMaterialText(const PageSet& pages, const NoiseSet& noise,
                                 const SegmentationConfig& config = {});

}  // namespace edukg::extraction
