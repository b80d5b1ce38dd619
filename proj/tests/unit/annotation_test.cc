#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>

#include "edukg/annotation/annotation.h"
#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "json.hpp"
#include "mock_services.h"
#include "test_support.h"

namespace edukg::annotation {
namespace {

using edukg::testing::Embedder;
using edukg::testing::MockServer;
using edukg::testing::TempDir;
using json = nlohmann::json;
using keyphrase::Keyphrase;

class SmallKb : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    store_ = edukg::testing::BuildKb("kb_small.xml", dir_->path() / "kb").release();
  }
  static void TearDownTestSuite() {
    delete store_;
    delete dir_;
  }
  static const kb::KBStore& kb() { return *store_; }

  static TempDir* dir_;
  static kb::KBStore* store_;
};

TempDir* SmallKb::dir_ = nullptr;
kb::KBStore* SmallKb::store_ = nullptr;

Keyphrase K(std::string text) { return Keyphrase{std::move(text), 1.0, {}}; }

std::vector<kb::PageId> Ids(const std::vector<ConceptCandidate>& cs) {
  std::vector<kb::PageId> out;
  for (const auto& c : cs) out.push_back(c.page_id);
  return out;
}

double PlainCosine(const embedding::Vector& a, const embedding::Vector& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.dim(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return na == 0 || nb == 0 ? 0.0 : dot / std::sqrt(na * nb);
}

TEST_F(SmallKb, LocalLinkerMatchesTitlesAndRedirects) {
  LocalLinker linker(kb());
  auto out = linker.Link({K("united states"), K("usa"), K("north america")}, "");
  EXPECT_EQ(Ids(out), (std::vector<kb::PageId>{10, 12}));
  EXPECT_EQ(out[0].title, "United States");
  EXPECT_EQ(out[0].source, LinkSource::kLocal);
}

TEST_F(SmallKb, LocalLinkerFallsBackToSubPhrases) {
  LocalLinker linker(kb());
  auto out = linker.Link({K("sun and solar system")}, "");
  EXPECT_EQ(Ids(out), (std::vector<kb::PageId>{17, 18}));
  EXPECT_EQ(out[1].surface_form, "solar system");
  EXPECT_TRUE(linker.Link({K("jupiter moons")}, "").empty());
}

TEST_F(SmallKb, LocalLinkerUsesSourceSpanWhenPresent) {
  LocalLinker linker(kb());
  const std::string slide = "Orbits of the Solar System";
  Keyphrase kp{"solar system", 1.0, {14, 26}};
  auto out = linker.Link({kp}, slide);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].surface_form, "Solar System");
}

TEST(ResourceUri, TailIsDecodedTitle) {
  EXPECT_EQ(TitleFromResourceUri("http://dbpedia.org/resource/Mercury_%28planet%29"), "Mercury (planet)");
  EXPECT_EQ(TitleFromResourceUri("Solar_System"), "Solar System");
}

RemoteLinkerOptions Fast() {
  RemoteLinkerOptions o;
  o.backoff_ms = 1;
  o.timeout_ms = 2000;
  return o;
}

// Canned reply: two resources in the keyphrase prefix, one duplicate, one
// unknown to the KB and one spotted in the slide body.
TEST_F(SmallKb, RemoteLinkerKeepsPrefixResourcesKnownToKb) {
  std::mutex mu;
  std::string seen_text, seen_confidence;
  MockServer server([&](httplib::Server& s) {
    s.Post("/rest/annotate", [&](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard<std::mutex> lock(mu);
        seen_text = req.get_param_value("text");
        seen_confidence = req.get_param_value("confidence");
      }
      json reply = {{"@text", seen_text},
                    {"Resources",
                     {{{"@URI", "http://dbpedia.org/resource/Sun"}, {"@surfaceForm", "sun"}, {"@offset", "0"}},
                      {{"@URI", "http://dbpedia.org/resource/Solar_System"},
                       {"@surfaceForm", "solar system"},
                       {"@offset", "5"}},
                      {{"@URI", "http://dbpedia.org/resource/Sun"}, {"@surfaceForm", "sun"}, {"@offset", 3}},
                      {{"@URI", "http://dbpedia.org/resource/Jupiter"}, {"@surfaceForm", "x"}, {"@offset", "1"}},
                      {{"@URI", "http://dbpedia.org/resource/Astronomy"},
                       {"@surfaceForm", "astronomy"},
                       {"@offset", "20"}}}}};
      res.set_content(reply.dump(), "application/json");
    });
  });
  RemoteLinker linker(server.url() + "/rest/annotate", kb(), Fast());
  auto out = linker.Link({K("sun"), K("solar system")}, "Astronomy of the sun");
  EXPECT_EQ(Ids(out), (std::vector<kb::PageId>{17, 18}));
  EXPECT_EQ(out[0].source, LinkSource::kRemote);
  EXPECT_EQ(seen_text, "sun, solar system\nAstronomy of the sun");
  EXPECT_DOUBLE_EQ(std::stod(seen_confidence), 0.35);
}

TEST_F(SmallKb, RemoteLinkerWithoutResourcesReturnsNothing) {
  MockServer server([](httplib::Server& s) {
    s.Post("/rest/annotate", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"@text":"x"})", "application/json");
    });
  });
  RemoteLinker linker(server.url(), kb(), Fast());
  EXPECT_TRUE(linker.Link({K("sun")}, "sun").empty());
  EXPECT_TRUE(linker.Link({}, "sun").empty());
}

TEST_F(SmallKb, RemoteLinkerAgreesWithSpotlightMock) {
  MockServer server([](httplib::Server& s) { edukg::testing::MountSpotlight(s, kb()); });
  RemoteLinker remote(server.url() + "/rest/annotate", kb(), Fast());
  LocalLinker local(kb());
  std::vector<Keyphrase> kps = {K("solar system"), K("usa"), K("chemical element"), K("orbit")};
  EXPECT_EQ(Ids(remote.Link(kps, "")), Ids(local.Link(kps, "")));
}

TEST_F(SmallKb, RemoteLinkerRetriesServerErrors) {
  std::atomic<int> failures{2};
  MockServer server([&](httplib::Server& s) {
    s.Post("/rest/annotate", [&](const httplib::Request&, httplib::Response& res) {
      if (failures.fetch_sub(1) > 0) {
        res.status = 503;
        return;
      }
      res.set_content(
          R"({"Resources":[{"@URI":"http://dbpedia.org/resource/Sun","@surfaceForm":"sun","@offset":"0"}]})",
          "application/json");
    });
  });
  RemoteLinker linker(server.url(), kb(), Fast());
  EXPECT_EQ(Ids(linker.Link({K("sun")}, "")), (std::vector<kb::PageId>{17}));
  EXPECT_EQ(server.requests(), 3u);
}

TEST_F(SmallKb, RemoteLinkerGivesUpAfterAttempts) {
  MockServer server([](httplib::Server& s) {
    s.Post("/rest/annotate", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  });
  RemoteLinker linker(server.url(), kb(), Fast());
  EXPECT_THROW(linker.Link({K("sun")}, ""), LinkerUnavailable);
  EXPECT_EQ(server.requests(), 3u);
}

TEST_F(SmallKb, RemoteLinkerDoesNotRetryClientErrorsOrGarbage) {
  MockServer bad_request([](httplib::Server& s) {
    s.Post("/rest/annotate", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  });
  EXPECT_THROW(RemoteLinker(bad_request.url(), kb(), Fast()).Link({K("sun")}, ""), LinkerUnavailable);
  EXPECT_EQ(bad_request.requests(), 1u);

  MockServer garbage([](httplib::Server& s) {
    s.Post("/rest/annotate", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>", "text/html");
    });
  });
  EXPECT_THROW(RemoteLinker(garbage.url(), kb(), Fast()).Link({K("sun")}, ""), LinkerUnavailable);
}

TEST_F(SmallKb, RemoteLinkerRejectsBadEndpoints) {
  EXPECT_THROW(RemoteLinker("redis://127.0.0.1:1", kb()), ConfigError);
  RemoteLinkerOptions o;
  o.attempts = 0;
  EXPECT_THROW(RemoteLinker("http://127.0.0.1:1", kb(), o), ConfigError);
}

kb::KBRecord RecordWithEmbedding(std::vector<double> v, std::string abstract = "x") {
  kb::KBRecord r;
  r.page_id = 1;
  r.title = "T";
  r.abstract = std::move(abstract);
  r.abstract_embedding = embedding::Vector(std::move(v));
  return r;
}

TEST(Weigh, SelfSimilarityGivesOne) {
  kb::KBRecord r = RecordWithEmbedding({0.6, 0.8});
  WeightedConcept c = WeighConcept(r, r.abstract_embedding, r.abstract_embedding, 3);
  EXPECT_NEAR(c.weight, 1.0, 1e-12);
  EXPECT_EQ(c.slide_no, 3);
  EXPECT_FALSE(c.low_confidence);
}

TEST(Weigh, WeightIsMeanOfBothCosines) {
  kb::KBRecord r = RecordWithEmbedding({1.0, 0.0});
  embedding::Vector material({0.6, 0.8});
  embedding::Vector slide({0.2, std::sqrt(0.96)});
  WeightedConcept c = WeighConcept(r, slide, material, 0);
  EXPECT_NEAR(c.w_lm, 0.6, 1e-12);
  EXPECT_NEAR(c.w_slide, 0.2, 1e-12);
  EXPECT_NEAR(c.weight, 0.4, 1e-12);
}

TEST(Weigh, EmptyAbstractIsLowConfidence) {
  kb::KBRecord r = RecordWithEmbedding({0.0, 0.0}, "");
  WeightedConcept c = WeighConcept(r, embedding::Vector({1.0, 0.0}), embedding::Vector({1.0, 0.0}), 0);
  EXPECT_TRUE(c.low_confidence);
  EXPECT_EQ(c.weight, 0.0);
}

TEST_F(SmallKb, WeightsAgreeWithPlainCosine) {
  const std::string slide = "The Sun and the planets of the Solar System";
  const std::string material = slide + "\nChemical elements such as mercury";
  const auto se = Embedder().Embed(slide);
  const auto me = Embedder().Embed(material);
  for (const auto& r : kb().records()) {
    if (r.is_redirect()) continue;
    ConceptCandidate cand{r.title, r.page_id, r.title, LinkSource::kLocal};
    WeightedConcept c = WeighConcept(cand, slide, material, kb(), Embedder(), 2);
    const auto ae = Embedder().Embed(r.abstract);
    EXPECT_NEAR(c.w_lm, PlainCosine(me, ae), 1e-12) << r.title;
    EXPECT_NEAR(c.w_slide, PlainCosine(se, ae), 1e-12) << r.title;
    EXPECT_NEAR(c.weight, (c.w_lm + c.w_slide) / 2, 1e-15);
    EXPECT_GE(c.weight, -1.0);
    EXPECT_LE(c.weight, 1.0);
  }
}

WeightedConcept DisambiguationPageConcept(const kb::KnowledgeBase& kb, const std::string& slide,
                                          const std::string& material) {
  ConceptCandidate cand{"mercury", 16, "Mercury (disambiguation)", LinkSource::kLocal};
  return WeighConcept(cand, slide, material, kb, Embedder());
}

TEST_F(SmallKb, DisambiguationPicksArticleFittingTheSlide) {
  const std::string planet = "Mercury is the first planet from the Sun, its orbit takes 88 days";
  const std::string element = "Mercury is a chemical element with symbol Hg and atomic number 80";
  WeightedConcept p = Disambiguate(DisambiguationPageConcept(kb(), planet, planet), planet, planet, kb(), Embedder());
  EXPECT_EQ(p.title, "Mercury (planet)");
  EXPECT_EQ(p.page_id, 13u);
  WeightedConcept e =
      Disambiguate(DisambiguationPageConcept(kb(), element, element), element, element, kb(), Embedder());
  EXPECT_EQ(e.page_id, 14u);
}

TEST_F(SmallKb, DisambiguationNeverLowersWeight) {
  for (const char* slide : {"Mercury", "Roman god messenger travellers", "first planet", "liquid metal",
                            "unrelated words entirely", ""}) {
    WeightedConcept mc = DisambiguationPageConcept(kb(), slide, slide);
    WeightedConcept out = Disambiguate(mc, slide, slide, kb(), Embedder());
    EXPECT_GE(out.weight, mc.weight) << slide;
  }
}

TEST_F(SmallKb, DisambiguationLeavesOrdinaryConceptsAlone) {
  ConceptCandidate cand{"sun", 17, "Sun", LinkSource::kLocal};
  WeightedConcept mc = WeighConcept(cand, "the sun", "the sun", kb(), Embedder());
  EXPECT_EQ(Disambiguate(mc, "the sun", "the sun", kb(), Embedder()), mc);
}

std::string XmlPage(int id, const std::string& title, const std::string& body) {
  return "<page><title>" + title + "</title><ns>0</ns><id>" + std::to_string(id) +
         "</id><revision><timestamp>2024-01-01T00:00:00Z</timestamp><text>" + body + "</text></revision></page>";
}

TEST(Disambiguation, TiesGoToSmallestTitle) {
  TempDir dir;
  std::istringstream xml("<mediawiki>" + XmlPage(1, "Alpha (b)", "Shared abstract text.") +
                         XmlPage(2, "Alpha (a)", "Shared abstract text.") +
                         XmlPage(3, "Alpha", "Alpha may mean [[Alpha (b)]] or [[Alpha (a)]]. {{disambiguation}}") +
                         "</mediawiki>");
  kb::PreprocessDump(xml, Embedder(), dir / "kb");
  auto store = kb::KBStore::Open(dir / "kb");
  const std::string slide = "Shared abstract text.";
  WeightedConcept mc = WeighConcept(ConceptCandidate{"alpha", 3, "Alpha", LinkSource::kLocal}, slide, slide,
                                    *store, Embedder());
  WeightedConcept out = Disambiguate(mc, slide, slide, *store, Embedder());
  EXPECT_EQ(out.title, "Alpha (a)");
  EXPECT_NEAR(out.weight, 1.0, 1e-12);
}

WeightedConcept W(std::string title, double weight) {
  WeightedConcept c;
  c.title = std::move(title);
  c.weight = weight;
  return c;
}

TEST(Prune, KeepsWeightsAtOrAboveThreshold) {
  auto out = Prune({W("a", 0.5), W("b", 0.192), W("c", 0.1)});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].title, "a");
  EXPECT_EQ(out[1].title, "b");
  EXPECT_TRUE(Prune({}).empty());
  EXPECT_EQ(Prune({W("a", -0.9)}, -1.0).size(), 1u);
}

TEST(Prune, KeepsOrderAndFiltersExactly) {
  std::vector<WeightedConcept> in;
  for (int i = 0; i < 50; ++i) in.push_back(W("t" + std::to_string(i), std::sin(i * 1.7)));
  auto out = Prune(in, 0.192);
  size_t j = 0;
  for (const auto& c : in) {
    if (c.weight < 0.192) continue;
    ASSERT_LT(j, out.size());
    EXPECT_EQ(out[j++].title, c.title);
  }
  EXPECT_EQ(j, out.size());
}

void ExpectWellFormed(const std::vector<WeightedConcept>& mcs, double threshold, size_t cap) {
  EXPECT_LE(mcs.size(), cap);
  std::set<kb::PageId> ids;
  for (size_t i = 0; i < mcs.size(); ++i) {
    EXPECT_GE(mcs[i].weight, threshold) << mcs[i].title;
    EXPECT_TRUE(ids.insert(mcs[i].page_id).second) << mcs[i].title;
    if (i > 0) {
      EXPECT_TRUE(mcs[i - 1].weight > mcs[i].weight ||
                  (mcs[i - 1].weight == mcs[i].weight && mcs[i - 1].title < mcs[i].title));
    }
  }
}

TEST_F(SmallKb, AnnotateSlideProducesPrunedSortedUniqueConcepts) {
  LocalLinker linker(kb());
  AnnotationDeps deps{kb(), Embedder(), linker};
  const std::string slide = "The Sun is the star at the centre of the Solar System, orbited by Mercury";
  const std::string material = slide + "\nNorth America and the United States";
  auto mcs = AnnotateSlide(4, slide, material, deps);
  ExpectWellFormed(mcs, kDefaultPruneThreshold, kMaxConceptsPerSlide);
  ASSERT_FALSE(mcs.empty());
  const auto se = Embedder().Embed(slide);
  const auto me = Embedder().Embed(material);
  for (const auto& c : mcs) {
    EXPECT_EQ(c.slide_no, 4);
    const kb::KBRecord r = kb().Get(c.page_id);
    EXPECT_NEAR(c.weight, (PlainCosine(se, r.abstract_embedding) + PlainCosine(me, r.abstract_embedding)) / 2,
                1e-12);
  }
}

TEST_F(SmallKb, AnnotateSlideThresholdOnlyRemoves) {
  LocalLinker linker(kb());
  AnnotationDeps deps{kb(), Embedder(), linker};
  const std::string slide = "Sun, Solar System, United States, North America, Chemical element, Astronomy";
  AnnotationConfig loose;
  loose.threshold = -1.0;
  auto all = AnnotateSlide(1, slide, "Planets", deps, loose);
  auto kept = AnnotateSlide(1, slide, "Planets", deps);
  std::set<kb::PageId> all_ids;
  for (const auto& c : all) all_ids.insert(c.page_id);
  for (const auto& c : kept) EXPECT_TRUE(all_ids.count(c.page_id)) << c.title;
  size_t expected = 0;
  for (const auto& c : all) expected += c.weight >= kDefaultPruneThreshold;
  EXPECT_EQ(kept.size(), expected);
}

TEST_F(SmallKb, StopwordsOnlySlideHasNoConcepts) {
  LocalLinker linker(kb());
  AnnotationDeps deps{kb(), Embedder(), linker};
  EXPECT_TRUE(AnnotateSlide(1, "it is of the and to be", "it is", deps).empty());
  EXPECT_TRUE(AnnotateSlide(1, "", "", deps).empty());
}

TEST(AnnotateCap, DenseSlideIsCappedAtFifteen) {
  const kb::KBStore& kb = edukg::testing::CourseKb();
  std::vector<std::string> titles;
  for (const auto& r : kb.records()) {
    if (!r.is_redirect() && !r.is_disambiguation && titles.size() < 40) titles.push_back(r.title);
  }
  const std::string slide = text::Join(titles, "\n");
  LocalLinker linker(kb);
  AnnotationDeps deps{kb, Embedder(), linker};
  AnnotationConfig cfg;
  cfg.threshold = -1.0;
  cfg.keyphrase_count = 60;
  cfg.max_concepts = 1000;
  auto uncapped = AnnotateSlide(1, slide, slide, deps, cfg);
  ASSERT_GT(uncapped.size(), kMaxConceptsPerSlide);
  cfg.max_concepts = kMaxConceptsPerSlide;
  auto capped = AnnotateSlide(1, slide, slide, deps, cfg);
  ASSERT_EQ(capped.size(), kMaxConceptsPerSlide);
  ExpectWellFormed(capped, -1.0, kMaxConceptsPerSlide);
  for (size_t i = 0; i < capped.size(); ++i) EXPECT_EQ(capped[i], uncapped[i]);
}

TEST_F(SmallKb, AnnotateSlideIsDeterministic) {
  LocalLinker linker(kb());
  AnnotationDeps deps{kb(), Embedder(), linker};
  const std::string slide = "Mercury orbits the Sun in the Solar System";
  EXPECT_EQ(AnnotateSlide(1, slide, slide, deps), AnnotateSlide(1, slide, slide, deps));
}

}  // namespace
}  // namespace edukg::annotation
