#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "edukg/annotation/annotation.h"
#include "edukg/embedding/embedding.h"
#include "edukg/kb/kb.h"

namespace edukg::expansion {

constexpr size_t kDefaultRelatedCount = 20;
constexpr size_t kDefaultCategoryCount = 5;

struct RelatedConcept {
  kb::PageId page_id = 0;
  std::string title;
  double weight = 0;  // cosine(material, abstract)
  kb::PageId parent = 0;

  bool operator==(const RelatedConcept&) const = default;
};

struct WeightedCategory {
  std::string name;
  double w_nc = 0;           // cosine(material, category name)
  size_t connected = 0;      // distinct material MCs carrying the category
  double w_cc = 0;
  double weight = 0;         // w_nc * w_cc
  std::vector<kb::PageId> connected_concepts;

  bool operator==(const WeightedCategory&) const = default;
};

// 1/ln(n+1) by default; the alternative reading 1/(ln n + 1) is kept selectable.
enum class ConnectedWeight { kInverseLogOfNPlusOne, kInverseOfLogNPlusOne };

double ConnectedConceptsWeight(size_t n, ConnectedWeight formula = ConnectedWeight::kInverseLogOfNPlusOne);

struct ExpansionConfig {
  size_t related_count = kDefaultRelatedCount;
  size_t category_count = kDefaultCategoryCount;
  ConnectedWeight connected_weight = ConnectedWeight::kInverseLogOfNPlusOne;
  bool prune_related = false;
  double threshold = annotation::kDefaultPruneThreshold;
};

// Top-k neighbours of `mc` by weight (ties by title), material MCs left out.
std::vector<RelatedConcept> ExpandRelated(const annotation::WeightedConcept& mc,
                                          const embedding::Vector& material_embedding,
                                          const kb::KnowledgeBase& kb,
                                          const std::set<kb::PageId>& material_mcs,
                                          const ExpansionConfig& config = {});

// Top-k categories per MC. `mcs` are the material's MCs; repeated page ids
// count once towards the connected-concepts weight.
std::map<kb::PageId, std::vector<WeightedCategory>> ExpandCategories(
    const std::vector<annotation::WeightedConcept>& mcs, const embedding::Vector& material_embedding,
    const kb::KnowledgeBase& kb, const ExpansionConfig& config = {});

struct Expansion {
  std::map<kb::PageId, std::vector<RelatedConcept>> related;
  std::map<kb::PageId, std::vector<WeightedCategory>> categories;
};

Expansion Expand(const std::vector<annotation::WeightedConcept>& mcs,
                 const embedding::Vector& material_embedding, const kb::KnowledgeBase& kb,
                 const ExpansionConfig& config = {});

}  // namespace edukg::expansion
