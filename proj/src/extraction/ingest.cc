#include <algorithm>

#include "edukg/common/error.h"
#include "edukg/extraction/extraction.h"
#include "json.hpp"

namespace edukg::extraction {

using json = nlohmann::json;

namespace {

long long LineOfOffset(std::string_view doc, size_t offset) {
  offset = std::min(offset, doc.size());
  return 1 + std::count(doc.begin(), doc.begin() + static_cast<long>(offset), '\n');
}

[[noreturn]] void Bad(const std::string& where, const std::string& what) {
  throw ParseError("elements json: " + where + ": " + what);
}

PositionedElement ParseElement(const json& j, int page_no, const std::string& where) {
  if (!j.is_object()) Bad(where, "element is not an object");
  PositionedElement e;
  e.page_no = page_no;
  std::string kind = j.value("kind", "text");
  if (kind == "text") {
    e.kind = ElementKind::kText;
  } else if (kind == "graphic") {
    e.kind = ElementKind::kGraphic;
  } else {
    Bad(where, "unknown kind '" + kind + "'");
  }
  if (j.contains("text")) {
    if (!j["text"].is_string()) Bad(where, "text is not a string");
    e.text = j["text"].get<std::string>();
  }
  if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4) {
    Bad(where, "bbox must be [x0,y0,x1,y1]");
  }
  for (const auto& v : j["bbox"]) {
    if (!v.is_number()) Bad(where, "bbox entries must be numbers");
  }
  e.bbox = {j["bbox"][0].get<double>(), j["bbox"][1].get<double>(), j["bbox"][2].get<double>(),
            j["bbox"][3].get<double>()};
  if (e.bbox.x0 > e.bbox.x1 || e.bbox.y0 > e.bbox.y1) Bad(where, "bbox corners out of order");
  if (j.contains("font_size")) {
    if (!j["font_size"].is_number()) Bad(where, "font_size is not a number");
    e.font_size = j["font_size"].get<double>();
  }
  if (e.kind == ElementKind::kText && !(e.font_size > 0)) Bad(where, "text element needs font_size > 0");
  if (e.kind == ElementKind::kGraphic && !e.text.empty()) Bad(where, "graphic element carries text");
  return e;
}

PageSet ParseElementsJson(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    long long line = LineOfOffset(document, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("elements json: syntax error at line " + std::to_string(line) + ": " +
                         e.what(),
                     line);
  }
  if (!doc.is_object() || !doc.contains("pages") || !doc["pages"].is_array()) {
    Bad("document", "expected an object with a 'pages' array");
  }
  PageSet out;
  int expected = 1;
  for (const auto& p : doc["pages"]) {
    std::string where = "page " + std::to_string(expected);
    if (!p.is_object()) Bad(where, "page is not an object");
    int page_no = p.value("page_no", expected);
    if (page_no != expected) {
      Bad(where, "page numbers must be contiguous from 1, got " + std::to_string(page_no));
    }
    Page page;
    page.page_no = page_no;
    if (p.contains("elements")) {
      if (!p["elements"].is_array()) Bad(where, "elements is not an array");
      size_t idx = 0;
      for (const auto& e : p["elements"]) {
        page.elements.push_back(
            ParseElement(e, page_no, where + " element " + std::to_string(idx++)));
      }
    }
    out.pages.push_back(std::move(page));
    ++expected;
  }
  return out;
}

}  // namespace

size_t PageSet::element_count() const {
  size_t n = 0;
  for (const auto& p : pages) n += p.elements.size();
  return n;
}

InputFormat ParseInputFormat(std::string_view name) {
  if (name == "pdf") return InputFormat::kPdf;
  if (name == "elements" || name == "elements-json" || name == "json") return InputFormat::kElementsJson;
  throw ConfigError("unsupported input format: " + std::string(name));
}

PageSet Ingest(std::string_view document, InputFormat format) {
  switch (format) {
    case InputFormat::kElementsJson:
      return ParseElementsJson(document);
    case InputFormat::kPdf:
      throw ConfigError(
          "pdf input needs the PDF adapter, which is not part of this build; "
          "convert to positioned-elements json first");
  }
  throw ConfigError("unsupported input format");
}

std::string ToElementsJson(const PageSet& pages) {
  json doc = {{"pages", json::array()}};
  for (const auto& page : pages.pages) {
    json jp = {{"page_no", page.page_no}, {"elements", json::array()}};
    for (const auto& e : page.elements) {
      json je = {{"text", e.text},
                 {"bbox", {e.bbox.x0, e.bbox.y0, e.bbox.x1, e.bbox.y1}},
                 {"font_size", e.font_size},
                 {"kind", e.kind == ElementKind::kText ? "text" : "graphic"}};
      jp["elements"].push_back(std::move(je));
    }
    doc["pages"].push_back(std::move(jp));
  }
  return doc.dump();
}

}  // namespace edukg::extraction
