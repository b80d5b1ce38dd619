#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "edukg/common/error.h"
#include "edukg/graph/graph.h"
#include "edukg/kb/xml_reader.h"
#include "test_support.h"

namespace edukg::graph {
namespace {

using annotation::WeightedConcept;
using edukg::testing::TempDir;

WeightedConcept Mc(kb::PageId id, std::string title, double weight) {
  WeightedConcept c;
  c.page_id = id;
  c.title = std::move(title);
  c.weight = weight;
  return c;
}

const Material kMaterial{"m1", "Graphs & Trees"};

EduKG Slide1() { return BuildSlideKg(kMaterial, 1, "Paths and trees", {Mc(1, "Path", 0.3), Mc(2, "Tree", 0.6)}); }
EduKG Slide2() { return BuildSlideKg(kMaterial, 2, "Paths and cycles", {Mc(1, "Path", 0.5), Mc(3, "Cycle", 0.25)}); }

expansion::Expansion SmallExpansion() {
  expansion::Expansion x;
  x.related[1] = {expansion::RelatedConcept{10, "Walk", 0.7, 1}};
  expansion::WeightedCategory cat;
  cat.name = "Graph theory";
  cat.weight = 0.3;
  x.categories[2] = {cat};
  return x;
}

EduKG Merged() { return Merge({Slide1(), Slide2()}, SmallExpansion()); }

TEST(SlideKg, NodesAndEdges) {
  EduKG kg = Slide1();
  EXPECT_EQ(kg.node_count(), 4u);
  EXPECT_EQ(kg.edge_count(), 5u);
  const Node* slide = kg.FindNode(SlideNodeId("m1", 1));
  ASSERT_NE(slide, nullptr);
  EXPECT_EQ(slide->slide_no, 1);
  EXPECT_EQ(slide->text_hash, TextHash("Paths and trees"));
  EXPECT_EQ(kg.FindEdge(EdgeType::kContains, "material:m1", "slide:m1:1")->weight, 1.0);
  EXPECT_EQ(kg.FindEdge(EdgeType::kContains, "slide:m1:1", "page:2")->weight, 0.6);
  EXPECT_EQ(kg.FindEdge(EdgeType::kHasConcept, "material:m1", "page:2")->weight, 0.6);
  EXPECT_EQ(kg.material_id(), "m1");
  EXPECT_NO_THROW(Validate(kg));
}

TEST(SlideKg, EmptySlideHasMaterialAndSlideOnly) {
  EduKG kg = BuildSlideKg(kMaterial, 7, "", {});
  EXPECT_EQ(kg.node_count(), 2u);
  EXPECT_EQ(kg.edge_count(), 1u);
}

TEST(SlideKg, RejectsDuplicateConceptsAndBadIds) {
  EXPECT_THROW(BuildSlideKg(kMaterial, 1, "x", {Mc(1, "Path", 0.3), Mc(1, "Path", 0.4)}), ContractViolation);
  EXPECT_THROW(BuildSlideKg({"bad id/..", "x"}, 1, "x", {}), ValidationError);
}

TEST(MaterialId, Charset) {
  EXPECT_TRUE(IsValidMaterialId("course-01_v2.pdf"));
  EXPECT_FALSE(IsValidMaterialId(""));
  EXPECT_FALSE(IsValidMaterialId(".."));
  EXPECT_FALSE(IsValidMaterialId("a/b"));
  EXPECT_FALSE(IsValidMaterialId("a b"));
  EXPECT_FALSE(IsValidMaterialId(std::string(129, 'a')));
  EXPECT_TRUE(IsValidMaterialId(std::string(128, 'a')));
}

TEST(Merge, CountsAndMaxRule) {
  EduKG kg = Merged();
  EXPECT_EQ(kg.node_count(), 8u);
  EXPECT_EQ(kg.edge_count(), 11u);
  EXPECT_EQ(kg.FindEdge(EdgeType::kHasConcept, "material:m1", "page:1")->weight, 0.5);
  EXPECT_EQ(kg.FindEdge(EdgeType::kContains, "slide:m1:1", "page:1")->weight, 0.3);
  EXPECT_EQ(kg.FindEdge(EdgeType::kContains, "slide:m1:2", "page:1")->weight, 0.5);
  EXPECT_EQ(kg.FindEdge(EdgeType::kRelatedTo, "page:1", "page:10")->weight, 0.7);
  EXPECT_EQ(kg.FindEdge(EdgeType::kBelongsTo, "page:2", "category:Graph theory")->weight, 0.3);
  EXPECT_EQ(kg.FindNode("page:10")->kind, ConceptKind::kRC);
  EXPECT_NO_THROW(Validate(kg));
}

TEST(Merge, MeanRule) {
  EduKG kg = Merge({Slide1(), Slide2()}, {}, MergeRule::kMean);
  EXPECT_DOUBLE_EQ(kg.FindEdge(EdgeType::kHasConcept, "material:m1", "page:1")->weight, 0.4);
  EXPECT_EQ(ParseMergeRule("mean"), MergeRule::kMean);
  EXPECT_THROW(ParseMergeRule("sum"), ConfigError);
}

TEST(Merge, OrderIndependent) {
  EXPECT_EQ(Merge({Slide2(), Slide1()}, SmallExpansion()), Merged());
  EXPECT_EQ(Export(Merge({Slide2(), Slide1()}, SmallExpansion()), ExportFormat::kJsonl),
            Export(Merged(), ExportFormat::kJsonl));
}

TEST(Merge, RelatedConceptSeenAsMainConceptStaysMain) {
  expansion::Expansion x;
  x.related[1] = {expansion::RelatedConcept{2, "Tree", 0.9, 1}};
  EduKG kg = Merge({Slide1()}, x);
  EXPECT_EQ(kg.FindNode("page:2")->kind, ConceptKind::kMC);
  EXPECT_NO_THROW(Validate(kg));
}

TEST(Merge, RejectsMixedMaterialsAndRepeatedSlides) {
  EduKG other = BuildSlideKg({"m2", "Other"}, 1, "x", {});
  EXPECT_THROW(Merge({Slide1(), other}), ContractViolation);
  EXPECT_THROW(Merge({Slide1(), Slide1()}), ConflictError);
  expansion::Expansion x;
  x.related[99] = {};
  EXPECT_THROW(Merge({Slide1()}, x), ContractViolation);
  EXPECT_TRUE(Merge({}).empty());
}

TEST(Validate, CatchesBrokenGraphs) {
  EduKG dangling = Slide1();
  dangling.AddEdge({EdgeType::kRelatedTo, "page:1", "page:404", 0.2});
  EXPECT_THROW(Validate(dangling), ValidationError);

  EduKG nan = Slide1();
  nan.AddEdge({EdgeType::kContains, "slide:m1:1", "page:1", std::numeric_limits<double>::quiet_NaN()});
  EXPECT_THROW(Validate(nan), ValidationError);

  EduKG wrong_type = Slide1();
  wrong_type.AddEdge({EdgeType::kBelongsTo, "page:1", "page:2", 0.2});
  EXPECT_THROW(Validate(wrong_type), ValidationError);

  EduKG missing;
  for (const auto& n : Slide1().Nodes()) missing.AddNode(n);
  for (const auto& e : Slide1().Edges()) {
    if (e.type != EdgeType::kHasConcept) missing.AddEdge(e);
  }
  EXPECT_THROW(Validate(missing), ValidationError);
}

TEST(Export, JsonlHasOneLinePerNodeAndEdge) {
  EduKG kg = Merged();
  const std::string out = Export(kg, ExportFormat::kJsonl);
  EXPECT_EQ(static_cast<size_t>(std::count(out.begin(), out.end(), '\n')), kg.node_count() + kg.edge_count());
  EXPECT_EQ(out.substr(0, out.find('\n')),
            R"({"t":"node","type":"Category","id":"category:Graph theory","name":"Graph theory"})");
  EXPECT_EQ(out, Export(Merged(), ExportFormat::kJsonl));
}

TEST(Export, JsonlRoundTripsExactly) {
  EduKG kg = Merged();
  kg.AddEdge({EdgeType::kRelatedTo, "page:1", "page:10", 0.1 + 0.2});
  EduKG back = ParseJsonl(Export(kg, ExportFormat::kJsonl));
  EXPECT_EQ(back, kg);
  EXPECT_EQ(Export(back, ExportFormat::kJsonl), Export(kg, ExportFormat::kJsonl));
}

TEST(Export, MalformedJsonlReportsLine) {
  const std::string good = Export(Slide1(), ExportFormat::kJsonl);
  try {
    ParseJsonl(good.substr(0, good.find('\n') + 1) + "{not json}\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 2);
  }
  EXPECT_THROW(ParseJsonl(R"({"t":"hyperedge"})"), ParseError);
  EXPECT_THROW(ParseJsonl(R"({"t":"node","type":"Planet","id":"x"})"), ParseError);
}

TEST(Export, GraphmlIsWellFormedAndComplete) {
  EduKG kg = Merged();
  const std::string xml = Export(kg, ExportFormat::kGraphml);
  std::istringstream in(xml);
  kb::XmlReader reader(in);
  size_t nodes = 0, edges = 0;
  std::string label_text;
  bool in_label = false;
  for (auto ev = reader.Next(); ev != kb::XmlReader::Event::kEof; ev = reader.Next()) {
    if (ev == kb::XmlReader::Event::kStart) {
      nodes += reader.name() == "node";
      edges += reader.name() == "edge";
      in_label = reader.name() == "data" && reader.attributes().at("key") == "label";
    } else if (ev == kb::XmlReader::Event::kText && in_label) {
      label_text += reader.text() + "|";
    } else if (ev == kb::XmlReader::Event::kEnd) {
      in_label = false;
    }
  }
  EXPECT_EQ(nodes, kg.node_count());
  EXPECT_EQ(edges, kg.edge_count());
  EXPECT_NE(label_text.find("Graphs & Trees|"), std::string::npos);
  EXPECT_THROW(ParseExportFormat("rdf"), ConfigError);
}

TEST(Triples, ProvenanceForSlideEdges) {
  auto triples = AllTriples(Merged());
  ASSERT_EQ(triples.size(), 11u);
  size_t with_provenance = 0;
  for (const auto& t : triples) {
    if (t.provenance != 0) {
      ++with_provenance;
      EXPECT_EQ(t.predicate, EdgeType::kContains);
      EXPECT_EQ(t.subject, "slide:m1:" + std::to_string(t.provenance));
    }
  }
  EXPECT_EQ(with_provenance, 4u);
}

TEST(Sampling, WithoutReplacementIsDistinct) {
  EduKG kg = Merged();
  auto s = SampleTriples(kg, 6, 42);
  ASSERT_EQ(s.size(), 6u);
  std::set<Triple> unique(s.begin(), s.end());
  EXPECT_EQ(unique.size(), 6u);
  EXPECT_EQ(SampleTriples(kg, 6, 42), s);
  EXPECT_NE(SampleTriples(kg, 6, 43), s);
}

TEST(Sampling, OversizedRequestReturnsEveryEdge) {
  EduKG kg = Merged();
  auto s = SampleTriples(kg, 1000, 7);
  std::sort(s.begin(), s.end());
  auto all = AllTriples(kg);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(s, all);
}

TEST(Sampling, EmptyGraphThrows) {
  EXPECT_THROW(SampleTriples(EduKG{}, 3, 1), EmptyGraph);
  EXPECT_THROW(SampleTriplesWithReplacement(EduKG{}, 3, 1), EmptyGraph);
  std::mt19937_64 rng(1);
  EXPECT_THROW(UniformIndex(rng, 0), ContractViolation);
}

TEST(Sampling, UniformIndexStaysInRange) {
  std::mt19937_64 rng(5);
  for (uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 1}) {
    for (int i = 0; i < 200; ++i) ASSERT_LT(UniformIndex(rng, bound), bound);
  }
}

// Pearson chi-square with 4 degrees of freedom; 13.277 is the 1% critical value.
double ChiSquare(const std::vector<size_t>& counts, double expected) {
  double chi = 0;
  for (size_t c : counts) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

EduKG FiveEdges() {
  return BuildSlideKg(kMaterial, 1, "x", {Mc(1, "A", 0.1), Mc(2, "B", 0.2)});
}

TEST(Sampling, WithReplacementIsUniform) {
  EduKG kg = FiveEdges();
  auto all = AllTriples(kg);
  ASSERT_EQ(all.size(), 5u);
  auto draws = SampleTriplesWithReplacement(kg, 10000, 2024);
  std::vector<size_t> counts(5, 0);
  for (const auto& t : draws) counts[std::find(all.begin(), all.end(), t) - all.begin()]++;
  EXPECT_LT(ChiSquare(counts, 2000.0), 13.277);
}

TEST(Sampling, FirstDrawWithoutReplacementIsUniform) {
  EduKG kg = FiveEdges();
  auto all = AllTriples(kg);
  std::vector<size_t> counts(5, 0);
  for (uint64_t seed = 0; seed < 5000; ++seed) {
    auto s = SampleTriples(kg, 2, seed);
    counts[std::find(all.begin(), all.end(), s[0]) - all.begin()]++;
  }
  EXPECT_LT(ChiSquare(counts, 1000.0), 13.277);
}

void ExerciseStore(GraphStore& store) {
  EXPECT_EQ(store.State("m1"), MaterialState::kUnknown);
  EXPECT_THROW(store.PutSlide("m1", 1, Slide1()), ContractViolation);
  store.BeginMaterial("m1");
  EXPECT_EQ(store.State("m1"), MaterialState::kBuilding);
  store.PutSlide("m1", 1, Slide1());
  EXPECT_THROW(store.PutSlide("m1", 1, Slide1()), ConflictError);
  store.PutSlide("m1", 2, Slide2());
  EXPECT_EQ(store.SlideNumbers("m1"), (std::vector<int>{1, 2}));
  EXPECT_EQ(*store.GetSlide("m1", 2), Slide2());
  EXPECT_FALSE(store.GetSlide("m1", 3).has_value());
  EXPECT_FALSE(store.GetMaterial("m1").has_value());
  store.PublishMaterial("m1", Merged());
  EXPECT_EQ(store.State("m1"), MaterialState::kPublished);
  EXPECT_EQ(*store.GetMaterial("m1"), Merged());
  EXPECT_THROW(store.BeginMaterial("../etc"), ValidationError);
}

TEST(GraphStore, InMemoryLifecycle) {
  GraphStore store;
  ExerciseStore(store);
}

TEST(GraphStore, OnDiskLifecycleSurvivesReopen) {
  TempDir dir;
  {
    GraphStore store(dir.path());
    ExerciseStore(store);
  }
  GraphStore reopened(dir.path());
  EXPECT_EQ(reopened.State("m1"), MaterialState::kPublished);
  EXPECT_EQ(*reopened.GetMaterial("m1"), Merged());
  EXPECT_EQ(reopened.SlideFragments("m1").size(), 2u);
}

TEST(GraphStore, RebuildKeepsPublishedGraphVisible) {
  TempDir dir;
  {
    GraphStore store(dir.path());
    store.BeginMaterial("m1");
    store.PutSlide("m1", 1, Slide1());
    store.PublishMaterial("m1", Merge({Slide1()}));
    store.BeginMaterial("m1");
    EXPECT_EQ(store.State("m1"), MaterialState::kBuilding);
    EXPECT_TRUE(store.SlideNumbers("m1").empty());
    EXPECT_EQ(*store.GetMaterial("m1"), Merge({Slide1()}));
    store.PutSlide("m1", 2, Slide2());
  }
  // An interrupted build is still marked as building after a restart.
  GraphStore reopened(dir.path());
  EXPECT_EQ(reopened.State("m1"), MaterialState::kBuilding);
  EXPECT_EQ(reopened.SlideNumbers("m1"), (std::vector<int>{2}));
  EXPECT_EQ(*reopened.GetMaterial("m1"), Merge({Slide1()}));
}

}  // namespace
}  // namespace edukg::graph
