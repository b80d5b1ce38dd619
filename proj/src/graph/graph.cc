#include "edukg/graph/graph.h"

#include <algorithm>
#include <cmath>

#include "edukg/common/error.h"
#include "edukg/common/text.h"

namespace edukg::graph {

std::string_view NodeTypeName(NodeType t) {
  switch (t) {
    case NodeType::kLearningMaterial: return "LearningMaterial";
    case NodeType::kSlide: return "Slide";
    case NodeType::kConcept: return "Concept";
    case NodeType::kCategory: return "Category";
  }
  return "";
}

std::string_view EdgeTypeName(EdgeType t) {
  switch (t) {
    case EdgeType::kContains: return "CONTAINS";
    case EdgeType::kHasConcept: return "HAS_CONCEPT";
    case EdgeType::kRelatedTo: return "RELATED_TO";
    case EdgeType::kBelongsTo: return "BELONGS_TO";
  }
  return "";
}

std::string_view ConceptKindName(ConceptKind k) { return k == ConceptKind::kMC ? "MC" : "RC"; }

NodeType ParseNodeType(std::string_view s) {
  for (NodeType t : {NodeType::kLearningMaterial, NodeType::kSlide, NodeType::kConcept, NodeType::kCategory}) {
    if (NodeTypeName(t) == s) return t;
  }
  throw ParseError("unknown node type: " + std::string(s));
}

EdgeType ParseEdgeType(std::string_view s) {
  for (EdgeType t : {EdgeType::kContains, EdgeType::kHasConcept, EdgeType::kRelatedTo, EdgeType::kBelongsTo}) {
    if (EdgeTypeName(t) == s) return t;
  }
  throw ParseError("unknown edge type: " + std::string(s));
}

ConceptKind ParseConceptKind(std::string_view s) {
  if (s == "MC") return ConceptKind::kMC;
  if (s == "RC") return ConceptKind::kRC;
  throw ParseError("unknown concept kind: " + std::string(s));
}

std::string MaterialNodeId(std::string_view material_id) { return "material:" + std::string(material_id); }

std::string SlideNodeId(std::string_view material_id, int slide_no) {
  return "slide:" + std::string(material_id) + ":" + std::to_string(slide_no);
}

std::string ConceptNodeId(kb::PageId page_id) { return "page:" + std::to_string(page_id); }

std::string CategoryNodeId(std::string_view name) { return "category:" + std::string(name); }

void EduKG::AddNode(const Node& node) {
  auto it = nodes_.find(node.id);
  if (it == nodes_.end()) {
    nodes_.emplace(node.id, node);
    return;
  }
  if (it->second.type != node.type) {
    throw ContractViolation("node " + node.id + " added with two types");
  }
  if (node.type == NodeType::kConcept && node.kind == ConceptKind::kMC) it->second.kind = ConceptKind::kMC;
}

void EduKG::AddEdge(const Edge& edge) {
  edges_[{edge.type, edge.from, edge.to}] = edge;
}

const Node* EduKG::FindNode(std::string_view id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const Edge* EduKG::FindEdge(EdgeType type, std::string_view from, std::string_view to) const {
  auto it = edges_.find({type, std::string(from), std::string(to)});
  return it == edges_.end() ? nullptr : &it->second;
}

std::vector<Node> EduKG::Nodes() const {
  std::vector<Node> out;
  for (const auto& [_, n] : nodes_) out.push_back(n);
  std::stable_sort(out.begin(), out.end(), [](const Node& a, const Node& b) {
    return std::pair(NodeTypeName(a.type), a.id) < std::pair(NodeTypeName(b.type), b.id);
  });
  return out;
}

std::vector<Edge> EduKG::Edges() const {
  std::vector<Edge> out;
  for (const auto& [_, e] : edges_) out.push_back(e);
  std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) {
    return std::tuple(EdgeTypeName(a.type), a.from, a.to) < std::tuple(EdgeTypeName(b.type), b.from, b.to);
  });
  return out;
}

std::string EduKG::material_id() const {
  for (const auto& [_, n] : nodes_) {
    if (n.type == NodeType::kLearningMaterial) return n.material_id;
  }
  return "";
}

std::string TextHash(std::string_view slide_text) { return text::Hex64(text::Fnv1a64(slide_text)); }

namespace {

Node MaterialNode(const Material& m) {
  Node n;
  n.type = NodeType::kLearningMaterial;
  n.id = MaterialNodeId(m.id);
  n.label = m.name;
  n.material_id = m.id;
  return n;
}

Node ConceptNode(kb::PageId page_id, const std::string& title, ConceptKind kind) {
  Node n;
  n.type = NodeType::kConcept;
  n.id = ConceptNodeId(page_id);
  n.label = title;
  n.page_id = page_id;
  n.kind = kind;
  return n;
}

}  // namespace

EduKG BuildSlideKg(const Material& material, int slide_no, std::string_view slide_text,
                   const std::vector<annotation::WeightedConcept>& mcs) {
  if (!IsValidMaterialId(material.id)) throw ValidationError("invalid material id: " + material.id);
  EduKG kg;
  const Node lm = MaterialNode(material);
  kg.AddNode(lm);
  Node slide;
  slide.type = NodeType::kSlide;
  slide.id = SlideNodeId(material.id, slide_no);
  slide.material_id = material.id;
  slide.slide_no = slide_no;
  slide.text_hash = TextHash(slide_text);
  kg.AddNode(slide);
  kg.AddEdge({EdgeType::kContains, lm.id, slide.id, 1.0});
  for (const auto& mc : mcs) {
    Node c = ConceptNode(mc.page_id, mc.title, ConceptKind::kMC);
    if (kg.FindNode(c.id)) throw ContractViolation("slide concepts must be unique: " + c.id);
    kg.AddNode(c);
    kg.AddEdge({EdgeType::kContains, slide.id, c.id, mc.weight});
    kg.AddEdge({EdgeType::kHasConcept, lm.id, c.id, mc.weight});
  }
  return kg;
}

MergeRule ParseMergeRule(std::string_view s) {
  if (s == "max") return MergeRule::kMax;
  if (s == "mean") return MergeRule::kMean;
  throw ConfigError("unknown merge rule: " + std::string(s));
}

EduKG Merge(const std::vector<EduKG>& fragments, const expansion::Expansion& expansion, MergeRule rule) {
  EduKG out;
  if (fragments.empty()) return out;
  const std::string material_id = fragments.front().material_id();
  const std::string lm_id = MaterialNodeId(material_id);
  std::set<std::string> slides;
  std::map<std::string, std::pair<double, int>> lm_weights;  // concept id -> (max or sum, count)

  for (const auto& frag : fragments) {
    if (frag.material_id() != material_id) {
      throw ContractViolation("cannot merge fragments of materials " + material_id + " and " +
                              frag.material_id());
    }
    for (const auto& n : frag.Nodes()) {
      if (n.type == NodeType::kSlide && !slides.insert(n.id).second) {
        throw ConflictError("slide appears in two fragments: " + n.id);
      }
      out.AddNode(n);
    }
    for (const auto& e : frag.Edges()) {
      if (e.type != EdgeType::kHasConcept) {
        out.AddEdge(e);
        continue;
      }
      auto [it, fresh] = lm_weights.try_emplace(e.to, e.weight, 1);
      if (fresh) continue;
      if (rule == MergeRule::kMax) {
        it->second.first = std::max(it->second.first, e.weight);
      } else {
        it->second.first += e.weight;
      }
      ++it->second.second;
    }
  }
  for (const auto& [concept_id, acc] : lm_weights) {
    double w = rule == MergeRule::kMax ? acc.first : acc.first / acc.second;
    out.AddEdge({EdgeType::kHasConcept, lm_id, concept_id, w});
  }

  auto require_mc = [&out](kb::PageId id) {
    const Node* n = out.FindNode(ConceptNodeId(id));
    if (!n || n->kind != ConceptKind::kMC) {
      throw ContractViolation("expansion refers to unknown main concept " + ConceptNodeId(id));
    }
    return n->id;
  };
  for (const auto& [mc, related] : expansion.related) {
    const std::string mc_id = require_mc(mc);
    for (const auto& rc : related) {
      out.AddNode(ConceptNode(rc.page_id, rc.title, ConceptKind::kRC));
      out.AddEdge({EdgeType::kRelatedTo, mc_id, ConceptNodeId(rc.page_id), rc.weight});
    }
  }
  for (const auto& [mc, categories] : expansion.categories) {
    const std::string mc_id = require_mc(mc);
    for (const auto& cat : categories) {
      Node n;
      n.type = NodeType::kCategory;
      n.id = CategoryNodeId(cat.name);
      n.label = cat.name;
      out.AddNode(n);
      out.AddEdge({EdgeType::kBelongsTo, mc_id, n.id, cat.weight});
    }
  }
  return out;
}

void Validate(const EduKG& kg) {
  auto type_of = [&kg](const std::string& id) -> const Node& {
    const Node* n = kg.FindNode(id);
    if (!n) throw ValidationError("edge endpoint does not exist: " + id);
    return *n;
  };
  size_t materials = 0;
  for (const auto& n : kg.Nodes()) materials += n.type == NodeType::kLearningMaterial;
  if (materials > 1) throw ValidationError("graph holds more than one learning material");

  for (const auto& e : kg.Edges()) {
    if (!std::isfinite(e.weight)) throw ValidationError("non-finite weight on edge to " + e.to);
    const Node& from = type_of(e.from);
    const Node& to = type_of(e.to);
    bool ok = false;
    switch (e.type) {
      case EdgeType::kContains:
        ok = (from.type == NodeType::kLearningMaterial && to.type == NodeType::kSlide) ||
             (from.type == NodeType::kSlide && to.type == NodeType::kConcept && to.kind == ConceptKind::kMC);
        break;
      case EdgeType::kHasConcept:
        ok = from.type == NodeType::kLearningMaterial && to.type == NodeType::kConcept &&
             to.kind == ConceptKind::kMC;
        break;
      case EdgeType::kRelatedTo:
        ok = from.type == NodeType::kConcept && from.kind == ConceptKind::kMC &&
             to.type == NodeType::kConcept;
        break;
      case EdgeType::kBelongsTo:
        ok = from.type == NodeType::kConcept && from.kind == ConceptKind::kMC && to.type == NodeType::kCategory;
        break;
    }
    if (!ok) {
      throw ValidationError("edge " + std::string(EdgeTypeName(e.type)) + " " + e.from + " -> " + e.to +
                            " connects the wrong node types");
    }
    if (e.type == EdgeType::kContains && from.type == NodeType::kSlide) {
      if (!kg.FindEdge(EdgeType::kHasConcept, MaterialNodeId(from.material_id), e.to)) {
        throw ValidationError("slide concept " + e.to + " missing at material level");
      }
    }
  }
}

std::vector<Triple> AllTriples(const EduKG& kg) {
  std::vector<Triple> out;
  for (const auto& e : kg.Edges()) {
    Triple t{e.from, e.type, e.to, e.weight, 0};
    if (e.type == EdgeType::kContains) {
      const Node* from = kg.FindNode(e.from);
      if (from && from->type == NodeType::kSlide) t.provenance = from->slide_no;
    }
    out.push_back(std::move(t));
  }
  return out;
}

uint64_t UniformIndex(std::mt19937_64& rng, uint64_t bound) {
  if (bound == 0) throw ContractViolation("empty range");
  // Values below `threshold` would over-represent small residues.
  const uint64_t threshold = (0 - bound) % bound;
  while (true) {
    uint64_t x = rng();
    if (x >= threshold) return x % bound;
  }
}

std::vector<Triple> SampleTriples(const EduKG& kg, size_t n, uint64_t seed) {
  std::vector<Triple> all = AllTriples(kg);
  if (all.empty()) throw EmptyGraph("graph has no edges to sample");
  std::mt19937_64 rng(seed);
  const size_t take = std::min(n, all.size());
  for (size_t i = 0; i < take; ++i) {
    size_t j = i + UniformIndex(rng, all.size() - i);
    std::swap(all[i], all[j]);
  }
  all.resize(take);
  return all;
}

std::vector<Triple> SampleTriplesWithReplacement(const EduKG& kg, size_t n, uint64_t seed) {
  std::vector<Triple> all = AllTriples(kg);
  if (all.empty()) throw EmptyGraph("graph has no edges to sample");
  std::mt19937_64 rng(seed);
  std::vector<Triple> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(all[UniformIndex(rng, all.size())]);
  return out;
}

bool IsValidMaterialId(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '_' || c == '-';
  });
}

}  // namespace edukg::graph
