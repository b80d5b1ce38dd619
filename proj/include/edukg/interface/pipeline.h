#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edukg/annotation/annotation.h"
#include "edukg/embedding/embedding.h"
#include "edukg/expansion/expansion.h"
#include "edukg/extraction/extraction.h"
#include "edukg/graph/graph.h"
#include "edukg/kb/kb.h"
#include "edukg/orchestration/orchestration.h"

namespace edukg::interface {

struct PipelineConfig {
  annotation::AnnotationConfig annotation;
  expansion::ExpansionConfig expansion;
  extraction::SegmentationConfig segmentation;
  graph::MergeRule merge_rule = graph::MergeRule::kMax;
  size_t parallelism = 4;  // slides annotated concurrently
};

struct PipelineServices {
  const kb::KnowledgeBase& kb;
  const embedding::EmbeddingProvider& embedder;
  const annotation::EntityLinker& linker;
  graph::GraphStore* store = nullptr;  // receives fragments as slides finish
};

struct BuildResult {
  graph::EduKG kg;
  extraction::MaterialText text;
  std::vector<std::vector<annotation::WeightedConcept>> slide_concepts;  // index = slide_no - 1
  expansion::Expansion expansion;
};

// Segmentation, per-slide annotation (in parallel), expansion and merge. With
// a store, the build restarts the material there, publishes each slide
// fragment as soon as it is ready and the merged graph at the end.
BuildResult BuildMaterial(const graph::Material& material, const extraction::PageSet& pages,
                          const PipelineServices& services, const PipelineConfig& config = {});

// Re-runs expansion and merge over the slide fragments already stored.
graph::EduKG ExpandMaterial(const std::string& material_id, const std::string& material_text,
                            const PipelineServices& services, const PipelineConfig& config = {});

// Key/value settings read from a TOML-style file ("key = value", optional
// [section] prefixes, '#' comments), then EDUKG_* environment overrides.
struct Settings {
  std::string kb_path;               // store directory or http URL
  std::string broker_url = "memory";
  std::string linker = "local";      // "local" or an annotation service URL
  std::string embedder = "hash";
  std::string data_dir = "edukg-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::string ui_dir;
  size_t workers = 2;                // in-process workers started by serve
  int linker_attempts = 3;
  double linker_confidence = 0.35;
  orchestration::BrokerOptions broker;
  PipelineConfig pipeline;

  static Settings Load(const std::filesystem::path& file = {});
  void Set(const std::string& key, const std::string& value);
  void ApplyEnvironment();
  // ValidationError when a value is out of range.
  void Validate() const;
};

// Applies per-submission overrides given as a JSON object text; the known
// keys mirror the settings keys. ValidationError for unknown keys or ranges.
PipelineConfig ApplyOverrides(const PipelineConfig& base, const std::string& overrides_json);

// Long-lived services built from settings.
class Runtime {
 public:
  explicit Runtime(const Settings& settings);

  const Settings& settings() const { return settings_; }
  const kb::KnowledgeBase& kb() const { return *kb_; }
  const embedding::EmbeddingProvider& embedder() const { return *embedder_; }
  const annotation::EntityLinker& linker() const { return *linker_; }
  std::unique_ptr<annotation::EntityLinker> MakeLinker(const std::string& spec) const;
  graph::GraphStore& store() { return *store_; }
  orchestration::Broker& broker() { return *broker_; }

  std::filesystem::path UploadPath(const std::string& material_id) const;
  std::filesystem::path TextsPath(const std::string& material_id) const;
  void SaveTexts(const std::string& material_id, const extraction::MaterialText& text) const;
  std::optional<extraction::MaterialText> LoadTexts(const std::string& material_id) const;

  // Handlers for build_kg, expand_kg and preprocess_dump jobs.
  std::map<std::string, orchestration::Handler> Handlers();

 private:
  Settings settings_;
  std::unique_ptr<embedding::EmbeddingProvider> embedder_;
  std::unique_ptr<kb::KnowledgeBase> kb_;
  std::unique_ptr<annotation::EntityLinker> linker_;
  std::unique_ptr<graph::GraphStore> store_;
  std::unique_ptr<orchestration::Broker> broker_;
};

}  // namespace edukg::interface
