#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/extraction/extraction.h"
#include "test_support.h"

namespace edukg::extraction {
namespace {

using edukg::testing::LoadPages;

PositionedElement Text(std::string s, double x0, double y0, double x1, double y1, double font) {
  PositionedElement e;
  e.text = std::move(s);
  e.bbox = {x0, y0, x1, y1};
  e.font_size = font;
  return e;
}

PositionedElement Graphic(double x0, double y0, double x1, double y1) {
  PositionedElement e;
  e.kind = ElementKind::kGraphic;
  e.bbox = {x0, y0, x1, y1};
  return e;
}

Page MakePage(std::vector<PositionedElement> elements, int page_no = 1) {
  Page p;
  p.page_no = page_no;
  for (auto& e : elements) e.page_no = page_no;
  p.elements = std::move(elements);
  return p;
}

Segment C(std::string s) { return {std::move(s), SegmentRole::kContent}; }
Segment N(std::string s) { return {std::move(s), SegmentRole::kNoise}; }
Segment F(std::string s) { return {std::move(s), SegmentRole::kFigureCaption}; }

std::vector<Segment> SegmentsOf(const Page& p, const NoiseSet& noise = {}, const SegmentationConfig& cfg = {}) {
  return SegmentPage(p, noise, cfg).segments;
}

// n pages with a unique title each and a footer on the first k pages.
PageSet FooterCorpus(int n, int k) {
  PageSet ps;
  for (int p = 1; p <= n; ++p) {
    std::vector<PositionedElement> els = {Text("Topic number " + std::string(p, 'x'), 50, 470, 300, 500, 28)};
    if (p <= k) els.push_back(Text("My Course 2024", 50, 20, 140, 32, 10));
    ps.pages.push_back(MakePage(els, p));
  }
  return ps;
}

TEST(Ingest, OnePageTwoElements) {
  PageSet ps = Ingest(R"({"pages":[{"page_no":1,"elements":[
      {"text":"Graphs","bbox":[10,10,60,30],"font_size":18,"kind":"text"},
      {"text":"","bbox":[0,0,5,5],"font_size":0,"kind":"graphic"}]}]})",
                      InputFormat::kElementsJson);
  ASSERT_EQ(ps.page_count(), 1u);
  EXPECT_EQ(ps.element_count(), 2u);
  EXPECT_EQ(ps.pages[0].elements[0].text, "Graphs");
  EXPECT_EQ(ps.pages[0].elements[1].kind, ElementKind::kGraphic);
}

TEST(Ingest, EmptyPagesArray) {
  EXPECT_EQ(Ingest(R"({"pages":[]})", InputFormat::kElementsJson).page_count(), 0u);
}

// 10 pages x (title + 3 lines + page number) + 6 footers + 8 graphic bullets.
TEST(Ingest, LayoutFixtureElementCountPreserved) {
  PageSet ps = LoadPages("slides_layout.json");
  EXPECT_EQ(ps.page_count(), 10u);
  EXPECT_EQ(ps.element_count(), 64u);
}

TEST(Ingest, SyntaxErrorCarriesLineNumber) {
  try {
    Ingest("{\n\"pages\": [\n{\"page_no\": 1,,}\n]}", InputFormat::kElementsJson);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 3);
  }
}

TEST(Ingest, RejectsStructuralViolations) {
  auto bad = [](const std::string& doc) { return Ingest(doc, InputFormat::kElementsJson); };
  EXPECT_THROW(bad(R"({"pages":[{"page_no":2,"elements":[]}]})"), ParseError);
  EXPECT_THROW(bad(R"({"pages":[{"elements":[{"text":"a","bbox":[5,0,1,1],"font_size":9}]}]})"), ParseError);
  EXPECT_THROW(bad(R"({"pages":[{"elements":[{"text":"a","bbox":[0,0,1,1]}]}]})"), ParseError);
  EXPECT_THROW(bad(R"({"pages":[{"elements":[{"text":"a","bbox":[0,0,1,1],"kind":"graphic"}]}]})"), ParseError);
  EXPECT_THROW(bad(R"({"pages":[{"elements":[{"text":"a","bbox":[0,0,1],"font_size":9}]}]})"), ParseError);
  EXPECT_THROW(bad(R"({"pages":{}})"), ParseError);
}

TEST(Ingest, UnsupportedFormatsAreConfigErrors) {
  EXPECT_THROW(Ingest("%PDF-1.7", InputFormat::kPdf), ConfigError);
  EXPECT_THROW(ParseInputFormat("docx"), ConfigError);
  EXPECT_EQ(ParseInputFormat("elements-json"), InputFormat::kElementsJson);
  EXPECT_EQ(ParseInputFormat("elements"), InputFormat::kElementsJson);
}

TEST(Ingest, ElementsJsonRoundTrip) {
  PageSet ps = LoadPages("slides_layout.json");
  PageSet again = Ingest(ToElementsJson(ps), InputFormat::kElementsJson);
  ASSERT_EQ(again.page_count(), ps.page_count());
  for (size_t p = 0; p < ps.pages.size(); ++p) {
    ASSERT_EQ(again.pages[p].elements.size(), ps.pages[p].elements.size());
    for (size_t i = 0; i < ps.pages[p].elements.size(); ++i) {
      const auto& a = ps.pages[p].elements[i];
      const auto& b = again.pages[p].elements[i];
      EXPECT_EQ(a.text, b.text);
      EXPECT_EQ(a.bbox.x0, b.bbox.x0);
      EXPECT_EQ(a.bbox.y1, b.bbox.y1);
      EXPECT_EQ(a.font_size, b.font_size);
      EXPECT_EQ(a.kind, b.kind);
    }
  }
}

TEST(Noise, FooterOnSixOfTenPagesIsNoise) {
  NoiseSet noise = DetectRecurringNoise(FooterCorpus(10, 6));
  EXPECT_EQ(noise.size(), 1u);
  EXPECT_EQ(noise.begin()->text, "mycourse");
}

TEST(Noise, FooterOnFourOfTenPagesIsKept) {
  EXPECT_TRUE(DetectRecurringNoise(FooterCorpus(10, 4)).empty());
}

TEST(Noise, FooterOnFiveOfNinePagesIsNoise) {
  EXPECT_EQ(DetectRecurringNoise(FooterCorpus(9, 5)).size(), 1u);
}

TEST(Noise, UniqueTitlesGiveEmptySet) {
  EXPECT_TRUE(DetectRecurringNoise(FooterCorpus(10, 0)).empty());
  EXPECT_TRUE(DetectRecurringNoise(PageSet{}).empty());
}

TEST(Noise, MembershipRuleIsExactForAllSmallCorpora) {
  for (int n = 1; n <= 24; ++n) {
    for (int k = 0; k <= n; ++k) {
      const bool expected = k >= 2 && (2 * k > n || (n < 10 && k >= 5));
      EXPECT_EQ(!DetectRecurringNoise(FooterCorpus(n, k)).empty(), expected) << n << " pages, " << k;
    }
  }
}

TEST(Noise, SubBucketJitterStillMatches) {
  PageSet ps = FooterCorpus(4, 0);
  for (auto& page : ps.pages) {
    double jitter = 0.3 * page.page_no;
    page.elements.push_back(Text("Page footer", 50 + jitter, 20, 140 + jitter, 32, 10));
  }
  EXPECT_EQ(DetectRecurringNoise(ps).size(), 1u);
}

TEST(Segment, FontDifferenceOfPointSixSplits) {
  Page p = MakePage({Text("Graph theory", 50, 400, 200, 420, 18.0), Text("studies graphs", 50, 380, 200, 400, 17.4)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("Graph theory"), C("studies graphs")}));
}

TEST(Segment, FontDifferenceOfPointFourMerges) {
  Page p = MakePage({Text("Graph theory", 50, 400, 200, 420, 18.0), Text("studies graphs", 50, 380, 200, 400, 17.6)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("Graph theory studies graphs")}));
}

TEST(Segment, VerticalGapOfOnePointSixHeightsSplits) {
  Page p = MakePage({Text("First line", 50, 400, 200, 420, 18), Text("second line", 50, 348, 200, 368, 18)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("First line"), C("second line")}));
}

TEST(Segment, VerticalGapOfOnePointFourHeightsMerges) {
  Page p = MakePage({Text("First line", 50, 400, 200, 420, 18), Text("second line", 50, 352, 200, 372, 18)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("First line second line")}));
}

TEST(Segment, StackedLinesOneHeightApartMerge) {
  Page p = MakePage({Text("First line", 50, 400, 200, 420, 18), Text("second line", 50, 360, 200, 380, 18)});
  EXPECT_EQ(SegmentsOf(p).size(), 1u);
}

// "abcd" is 40pt wide: 10pt per character.
TEST(Segment, HorizontalGapOfOnePointSixCharactersSplits) {
  Page p = MakePage({Text("abcd", 0, 100, 40, 120, 18), Text("efgh", 56, 100, 96, 120, 18)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("abcd"), C("efgh")}));
}

TEST(Segment, HorizontalGapOfOnePointFourCharactersMerges) {
  Page p = MakePage({Text("abcd", 0, 100, 40, 120, 18), Text("efgh", 54, 100, 94, 120, 18)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("abcd efgh")}));
}

TEST(Segment, GlyphBulletsStartSegments) {
  PageSet ps = LoadPages("bullets.json");
  EXPECT_EQ(SegmentsOf(ps.pages[0]),
            (std::vector<Segment>{C("Graph vocabulary"), C("• Vertices hold the data"),
                                  C("• Edges connect two vertices"), C("• Degrees count incident edges")}));
}

TEST(Segment, NumberedAndLetteredItemsStartSegments) {
  PageSet ps = LoadPages("bullets.json");
  EXPECT_EQ(SegmentsOf(ps.pages[1]),
            (std::vector<Segment>{C("Algorithm steps"), C("1. Mark the source vertex and set its distance to zero"),
                                  C("2. Relax every outgoing edge"), C("a) pick the closest vertex"),
                                  C("b) repeat until done")}));
}

TEST(Segment, GraphicBulletsStartSegments) {
  PageSet ps = LoadPages("bullets.json");
  EXPECT_EQ(SegmentsOf(ps.pages[2]),
            (std::vector<Segment>{C("Traversal orders"), C("Preorder visits the root first"),
                                  C("Postorder visits the root last after both subtrees"),
                                  C("Inorder sits between them")}));
}

TEST(Segment, InlineBulletsSplitOneElement) {
  Page p = MakePage({Text("• graphs • trees ◦ paths", 50, 400, 400, 420, 18)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("• graphs"), C("• trees"), C("◦ paths")}));
}

TEST(Segment, DashNeedsFollowingSpace) {
  Page p = MakePage({Text("Graphs", 50, 400, 200, 420, 18), Text("-based models", 50, 380, 200, 400, 18),
                     Text("- a bullet", 50, 360, 200, 380, 18)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("Graphs -based models"), C("- a bullet")}));
}

TEST(Segment, LargeGraphicOverlapMakesFigureCaption) {
  Page p = MakePage({Graphic(300, 100, 600, 300), Text("Figure of a tree", 320, 110, 500, 126, 12),
                     Text("Trees have no cycle", 50, 400, 280, 420, 18)});
  EXPECT_EQ(SegmentsOf(p), (std::vector<Segment>{C("Trees have no cycle"), F("Figure of a tree")}));
}

TEST(Segment, LayoutFixturePageOne) {
  PageSet ps = LoadPages("slides_layout.json");
  NoiseSet noise = DetectRecurringNoise(ps);
  EXPECT_EQ(SegmentsOf(ps.pages[0], noise),
            (std::vector<Segment>{C("Graphs and networks"),
                                  C("A graph joins vertices with edges and models pairwise relations."),
                                  C("Networks are graphs with weights."), N("My Course 2024"), N("1")}));
}

TEST(Segment, LayoutFixturePageSevenHasGraphicBullets) {
  PageSet ps = LoadPages("slides_layout.json");
  NoiseSet noise = DetectRecurringNoise(ps);
  EXPECT_EQ(SegmentsOf(ps.pages[6], noise),
            (std::vector<Segment>{C("Matching"), C("A matching pairs vertices"), C("without shared endpoints."),
                                  C("Bipartite graphs allow fast matching."), N("7")}));
}

TEST(Segment, AllNoisePageHasOnlyNoiseSegments) {
  NoiseSet noise = DetectRecurringNoise(FooterCorpus(10, 10));
  Page only_footer = MakePage({Text("My Course 2024", 50, 20, 140, 32, 10)});
  EXPECT_EQ(SegmentsOf(only_footer, noise), (std::vector<Segment>{N("My Course 2024")}));
}

std::vector<Page> AllFixturePages() {
  std::vector<Page> out;
  for (const char* f : {"slides_layout.json", "bullets.json", "course_slides.json"}) {
    for (auto& p : LoadPages(f).pages) out.push_back(p);
  }
  return out;
}

TEST(SegmentProperty, ElementOrderDoesNotMatter) {
  PageSet layout = LoadPages("slides_layout.json");
  NoiseSet noise = DetectRecurringNoise(layout);
  std::mt19937_64 rng(3);
  for (const Page& page : AllFixturePages()) {
    const SegmentList expected = SegmentPage(page, noise);
    Page shuffled = page;
    for (int trial = 0; trial < 10; ++trial) {
      std::shuffle(shuffled.elements.begin(), shuffled.elements.end(), rng);
      EXPECT_EQ(SegmentPage(shuffled, noise), expected);
    }
  }
}

std::map<std::string, int> WordBag(const std::vector<std::string>& texts) {
  std::map<std::string, int> bag;
  for (const auto& t : texts) {
    for (const auto& w : text::WordTokens(t)) ++bag[w];
  }
  return bag;
}

TEST(SegmentProperty, NoContentLoss) {
  PageSet layout = LoadPages("slides_layout.json");
  NoiseSet noise = DetectRecurringNoise(layout);
  for (const Page& page : AllFixturePages()) {
    std::vector<std::string> kept, source;
    for (const auto& s : SegmentPage(page, noise).segments) {
      if (s.role != SegmentRole::kNoise) kept.push_back(s.text);
    }
    for (const auto& e : page.elements) {
      if (e.kind == ElementKind::kText && !noise.count(MakeNoiseKey(e))) source.push_back(e.text);
    }
    EXPECT_EQ(WordBag(kept), WordBag(source)) << "page " << page.page_no;
  }
}

TEST(SegmentProperty, RaisingFontThresholdNeverAddsSegments) {
  std::vector<PositionedElement> els;
  const double fonts[] = {18, 17.2, 16.9, 18.3, 14, 14.4, 15.5, 12, 12.1, 20};
  for (int i = 0; i < 10; ++i) {
    els.push_back(Text("line " + std::to_string(i), 50, 400 - 20.0 * i, 200, 420 - 20.0 * i, fonts[i]));
  }
  std::vector<Page> pages = AllFixturePages();
  pages.push_back(MakePage(els));
  for (const Page& page : pages) {
    size_t previous = SIZE_MAX;
    for (double t = 0.0; t <= 12.0; t += 0.1) {
      SegmentationConfig cfg;
      cfg.font_split = t;
      size_t count = SegmentPage(page, {}, cfg).segments.size();
      EXPECT_LE(count, previous) << "threshold " << t;
      previous = count;
    }
  }
}

TEST(MaterialText, SinglePageSingleSegment) {
  PageSet ps;
  ps.pages.push_back(MakePage({Text("Graphs model relations", 50, 400, 300, 420, 18)}));
  MaterialText t = ExtractMaterialText(ps, DetectRecurringNoise(ps));
  EXPECT_EQ(t.material_text, "Graphs model relations");
  EXPECT_EQ(t.slide_texts, (std::vector<std::string>{"Graphs model relations"}));
}

TEST(MaterialText, ZeroPagesGiveEmptyText) {
  MaterialText t = ExtractMaterialText(PageSet{}, {});
  EXPECT_TRUE(t.slide_texts.empty());
  EXPECT_EQ(t.material_text, "");
}

TEST(MaterialText, FooterAbsentFromLayoutFixture) {
  PageSet ps = LoadPages("slides_layout.json");
  MaterialText t = ExtractMaterialText(ps, DetectRecurringNoise(ps));
  ASSERT_EQ(t.slide_texts.size(), 10u);
  EXPECT_EQ(t.material_text.find("My Course"), std::string::npos);
  EXPECT_NE(t.material_text.find("Maximum flow equals minimum cut."), std::string::npos);
  EXPECT_EQ(t.slide_texts[0],
            "Graphs and networks\nA graph joins vertices with edges and models pairwise relations.\n"
            "Networks are graphs with weights.");
}

TEST(MaterialText, FigureCaptionsAreKept) {
  PageSet ps;
  ps.pages.push_back(MakePage({Graphic(300, 100, 600, 300), Text("Figure of a tree", 320, 110, 500, 126, 12)}));
  EXPECT_EQ(ExtractMaterialText(ps, {}).material_text, "Figure of a tree");
}

}  // namespace
}  // namespace edukg::extraction
