#include "edukg/expansion/expansion.h"

#include <algorithm>
#include <cmath>

#include "edukg/common/error.h"

namespace edukg::expansion {

double ConnectedConceptsWeight(size_t n, ConnectedWeight formula) {
  if (n == 0) throw ContractViolation("connected concept count must be positive");
  switch (formula) {
    case ConnectedWeight::kInverseLogOfNPlusOne:
      return 1.0 / std::log(static_cast<double>(n) + 1.0);
    case ConnectedWeight::kInverseOfLogNPlusOne:
      return 1.0 / (std::log(static_cast<double>(n)) + 1.0);
  }
  return 0;
}

std::vector<RelatedConcept> ExpandRelated(const annotation::WeightedConcept& mc,
                                          const embedding::Vector& material_embedding,
                                          const kb::KnowledgeBase& kb,
                                          const std::set<kb::PageId>& material_mcs,
                                          const ExpansionConfig& config) {
  std::vector<kb::PageId> pool;
  for (kb::PageId id : kb.Neighbors(mc.page_id).Pool()) {
    if (id != mc.page_id && !material_mcs.contains(id)) pool.push_back(id);
  }
  std::vector<RelatedConcept> out;
  for (const auto& rec : kb.GetMany(pool)) {
    if (rec.is_redirect() || rec.is_disambiguation) continue;
    RelatedConcept rc{rec.page_id, rec.title, embedding::Cosine(material_embedding, rec.abstract_embedding),
                      mc.page_id};
    if (config.prune_related && rc.weight < config.threshold) continue;
    out.push_back(std::move(rc));
  }
  std::sort(out.begin(), out.end(), [](const RelatedConcept& a, const RelatedConcept& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.title < b.title;
  });
  if (out.size() > config.related_count) out.resize(config.related_count);
  return out;
}

std::map<kb::PageId, std::vector<WeightedCategory>> ExpandCategories(
    const std::vector<annotation::WeightedConcept>& mcs, const embedding::Vector& material_embedding,
    const kb::KnowledgeBase& kb, const ExpansionConfig& config) {
  std::map<kb::PageId, std::vector<kb::CategoryRef>> per_mc;
  std::map<std::string, std::set<kb::PageId>> carriers;
  for (const auto& mc : mcs) {
    if (per_mc.contains(mc.page_id)) continue;
    auto& refs = per_mc[mc.page_id];
    refs = kb.CategoriesOf(mc.page_id);
    for (const auto& ref : refs) carriers[ref.name].insert(mc.page_id);
  }

  std::map<kb::PageId, std::vector<WeightedCategory>> out;
  for (const auto& [mc_id, refs] : per_mc) {
    auto& list = out[mc_id];
    for (const auto& ref : refs) {
      const auto& owners = carriers[ref.name];
      WeightedCategory c;
      c.name = ref.name;
      c.w_nc = embedding::Cosine(material_embedding, ref.embedding);
      c.connected = owners.size();
      c.w_cc = ConnectedConceptsWeight(c.connected, config.connected_weight);
      c.weight = c.w_nc * c.w_cc;
      c.connected_concepts.assign(owners.begin(), owners.end());
      list.push_back(std::move(c));
    }
    std::sort(list.begin(), list.end(), [](const WeightedCategory& a, const WeightedCategory& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return a.name < b.name;
    });
    if (list.size() > config.category_count) list.resize(config.category_count);
  }
  return out;
}

Expansion Expand(const std::vector<annotation::WeightedConcept>& mcs,
                 const embedding::Vector& material_embedding, const kb::KnowledgeBase& kb,
                 const ExpansionConfig& config) {
  std::set<kb::PageId> ids;
  for (const auto& mc : mcs) ids.insert(mc.page_id);
  Expansion out;
  for (const auto& mc : mcs) {
    if (out.related.contains(mc.page_id)) continue;
    out.related[mc.page_id] = ExpandRelated(mc, material_embedding, kb, ids, config);
  }
  out.categories = ExpandCategories(mcs, material_embedding, kb, config);
  return out;
}

}  // namespace edukg::expansion
