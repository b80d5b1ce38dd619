#include <atomic>
#include <exception>
#include <thread>

#include "edukg/common/error.h"
#include "edukg/interface/pipeline.h"

namespace edukg::interface {

BuildResult BuildMaterial(const graph::Material& material, const extraction::PageSet& pages,
                          const PipelineServices& services, const PipelineConfig& config) {
  BuildResult result;
  const extraction::NoiseSet noise = extraction::DetectRecurringNoise(pages, config.segmentation.noise_bucket);
  result.text = extraction::ExtractMaterialText(pages, noise, config.segmentation);
  const embedding::Vector material_embedding = services.embedder.Embed(result.text.material_text);
  if (services.store) services.store->BeginMaterial(material.id);

  const size_t slides = result.text.slide_texts.size();
  result.slide_concepts.resize(slides);
  std::vector<graph::EduKG> fragments(slides);
  std::vector<std::exception_ptr> errors(slides);
  std::atomic<size_t> next{0};
  const annotation::AnnotationDeps deps{services.kb, services.embedder, services.linker};

  auto work = [&] {
    for (size_t i = next++; i < slides; i = next++) {
      try {
        const int slide_no = pages.pages[i].page_no;
        const std::string& slide_text = result.text.slide_texts[i];
        result.slide_concepts[i] =
            annotation::AnnotateSlide(slide_no, slide_text, material_embedding, deps, config.annotation);
        fragments[i] = graph::BuildSlideKg(material, slide_no, slide_text, result.slide_concepts[i]);
        if (services.store) services.store->PutSlide(material.id, slide_no, fragments[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const size_t threads = std::max<size_t>(1, std::min(config.parallelism, slides));
  {
    std::vector<std::jthread> pool;
    for (size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<annotation::WeightedConcept> all_mcs;
  for (const auto& mcs : result.slide_concepts) all_mcs.insert(all_mcs.end(), mcs.begin(), mcs.end());
  result.expansion = expansion::Expand(all_mcs, material_embedding, services.kb, config.expansion);
  result.kg = graph::Merge(fragments, result.expansion, config.merge_rule);
  if (slides == 0) {
    graph::Node lm;
    lm.type = graph::NodeType::kLearningMaterial;
    lm.id = graph::MaterialNodeId(material.id);
    lm.label = material.name;
    lm.material_id = material.id;
    result.kg.AddNode(lm);
  }
  graph::Validate(result.kg);
  if (services.store) services.store->PublishMaterial(material.id, result.kg);
  return result;
}

graph::EduKG ExpandMaterial(const std::string& material_id, const std::string& material_text,
                            const PipelineServices& services, const PipelineConfig& config) {
  if (!services.store) throw ContractViolation("expansion needs a graph store");
  std::vector<graph::EduKG> fragments = services.store->SlideFragments(material_id);
  if (fragments.empty()) throw NotFound("no slide graphs stored for material " + material_id);
  std::vector<annotation::WeightedConcept> mcs;
  for (const auto& frag : fragments) {
    for (const auto& e : frag.Edges()) {
      const graph::Node* from = frag.FindNode(e.from);
      if (e.type != graph::EdgeType::kContains || from->type != graph::NodeType::kSlide) continue;
      const graph::Node* to = frag.FindNode(e.to);
      annotation::WeightedConcept c;
      c.page_id = to->page_id;
      c.title = to->label;
      c.weight = e.weight;
      c.slide_no = from->slide_no;
      mcs.push_back(c);
    }
  }
  const embedding::Vector material_embedding = services.embedder.Embed(material_text);
  expansion::Expansion exp = expansion::Expand(mcs, material_embedding, services.kb, config.expansion);
  graph::EduKG kg = graph::Merge(fragments, exp, config.merge_rule);
  graph::Validate(kg);
  services.store->PublishMaterial(material_id, kg);
  return kg;
}

}  // namespace edukg::interface
