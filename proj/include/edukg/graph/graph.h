#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "edukg/annotation/annotation.h"
#include "edukg/expansion/expansion.h"
#include "edukg/kb/kb.h"

namespace edukg::graph {

enum class NodeType { kLearningMaterial, kSlide, kConcept, kCategory };
enum class ConceptKind { kMC, kRC };
enum class EdgeType { kContains, kHasConcept, kRelatedTo, kBelongsTo };

std::string_view NodeTypeName(NodeType t);
std::string_view EdgeTypeName(EdgeType t);
std::string_view ConceptKindName(ConceptKind k);
NodeType ParseNodeType(std::string_view s);
EdgeType ParseEdgeType(std::string_view s);
ConceptKind ParseConceptKind(std::string_view s);

std::string MaterialNodeId(std::string_view material_id);
std::string SlideNodeId(std::string_view material_id, int slide_no);
std::string ConceptNodeId(kb::PageId page_id);
std::string CategoryNodeId(std::string_view name);

struct Node {
  NodeType type = NodeType::kConcept;
  std::string id;
  std::string label;  // material name, concept title or category name
  std::string material_id;
  int slide_no = 0;
  std::string text_hash;
  kb::PageId page_id = 0;
  ConceptKind kind = ConceptKind::kMC;

  bool operator==(const Node&) const = default;
};

struct Edge {
  EdgeType type = EdgeType::kContains;
  std::string from;
  std::string to;
  double weight = 1.0;

  bool operator==(const Edge&) const = default;
};

struct Material {
  std::string id;
  std::string name;
};

// Typed property graph. Nodes are keyed by id; at most one edge per
// (type, from, to).
class EduKG {
 public:
  // A concept first seen as RC and later as MC becomes MC; other fields of an
  // existing node are kept.
  void AddNode(const Node& node);
  // Replaces the weight of an existing edge with the same key.
  void AddEdge(const Edge& edge);

  const Node* FindNode(std::string_view id) const;
  const Edge* FindEdge(EdgeType type, std::string_view from, std::string_view to) const;

  // Sorted by (type name, id).
  std::vector<Node> Nodes() const;
  // Sorted by (type name, from, to).
  std::vector<Edge> Edges() const;

  size_t node_count() const { return nodes_.size(); }
  size_t edge_count() const { return edges_.size(); }
  bool empty() const { return nodes_.empty() && edges_.empty(); }

  // Material id of the LearningMaterial node, empty when absent.
  std::string material_id() const;

  bool operator==(const EduKG&) const = default;

 private:
  std::map<std::string, Node, std::less<>> nodes_;
  std::map<std::tuple<EdgeType, std::string, std::string>, Edge> edges_;
};

std::string TextHash(std::string_view slide_text);

EduKG BuildSlideKg(const Material& material, int slide_no, std::string_view slide_text,
                   const std::vector<annotation::WeightedConcept>& mcs);

enum class MergeRule { kMax, kMean };
MergeRule ParseMergeRule(std::string_view s);

// Unions slide fragments of one material and attaches the expansion.
EduKG Merge(const std::vector<EduKG>& fragments, const expansion::Expansion& expansion = {},
            MergeRule rule = MergeRule::kMax);

// Throws ValidationError on dangling edges, non-finite weights, wrong endpoint
// types, or a slide concept without a material-level edge.
void Validate(const EduKG& kg);

enum class ExportFormat { kJsonl, kGraphml };
ExportFormat ParseExportFormat(std::string_view s);

std::string Export(const EduKG& kg, ExportFormat format);
EduKG ParseJsonl(std::string_view jsonl);

struct Triple {
  std::string subject;
  EdgeType predicate = EdgeType::kContains;
  std::string object;
  double weight = 0;
  // Slide number for Slide-CONTAINS edges; 0 for material-level edges.
  int provenance = 0;

  bool operator==(const Triple&) const = default;
  auto operator<=>(const Triple&) const = default;
};

std::vector<Triple> AllTriples(const EduKG& kg);

// Unbiased integer in [0, bound) from a 64-bit engine.
uint64_t UniformIndex(std::mt19937_64& rng, uint64_t bound);

// Uniform sample without replacement, in draw order; all edges when n exceeds
// the edge count. Throws EmptyGraph.
std::vector<Triple> SampleTriples(const EduKG& kg, size_t n, uint64_t seed);
std::vector<Triple> SampleTriplesWithReplacement(const EduKG& kg, size_t n, uint64_t seed);

enum class MaterialState { kUnknown, kBuilding, kPublished };

// Persists slide fragments as they complete and the merged material graph in
// one atomic step. With an empty root everything stays in memory; otherwise
// files live under root/<material>/ and are written via rename.
class GraphStore {
 public:
  explicit GraphStore(std::filesystem::path root = {});

  // Starts (or restarts) a build: drops the material's slide fragments. A
  // previously published material graph stays visible until replaced.
  void BeginMaterial(const std::string& material_id);
  // ConflictError when the slide is already stored for this build.
  void PutSlide(const std::string& material_id, int slide_no, const EduKG& fragment);
  void PublishMaterial(const std::string& material_id, const EduKG& kg);

  MaterialState State(const std::string& material_id) const;
  std::vector<int> SlideNumbers(const std::string& material_id) const;
  std::optional<EduKG> GetSlide(const std::string& material_id, int slide_no) const;
  std::optional<EduKG> GetMaterial(const std::string& material_id) const;
  std::vector<EduKG> SlideFragments(const std::string& material_id) const;

 private:
  struct Entry {
    bool building = false;
    std::map<int, EduKG> slides;
    std::optional<EduKG> material;
  };
  void Load();
  std::filesystem::path MaterialDir(const std::string& material_id) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
};

// Material ids become file and node names: [A-Za-z0-9._-], 1..128 chars.
bool IsValidMaterialId(std::string_view id);

}  // namespace edukg::graph
