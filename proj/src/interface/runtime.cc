#include <fstream>
#include <sstream>

#include "edukg/common/error.h"
#include "edukg/interface/pipeline.h"
#include "edukg/kb/kb_http.h"
#include "json.hpp"

namespace edukg::interface {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json ParsePayload(const orchestration::Job& job) {
  try {
    return json::parse(job.payload);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("job payload is not json: ") + e.what());
  }
}

}  // namespace

Runtime::Runtime(const Settings& settings) : settings_(settings) {
  embedder_ = embedding::MakeProvider(settings_.embedder);
  if (settings_.kb_path.empty()) throw ConfigError("no knowledge base configured (kb_path / EDUKG_KB_PATH)");
  if (settings_.kb_path.rfind("http://", 0) == 0) {
    kb_ = std::make_unique<kb::RemoteKnowledgeBase>(settings_.kb_path, *embedder_);
  } else {
    kb_ = kb::KBStore::Open(settings_.kb_path);
  }
  if (kb_->dimension() != embedder_->dimension()) {
    throw ConfigError("embedder dimension " + std::to_string(embedder_->dimension()) +
                      " does not match the knowledge base (" + std::to_string(kb_->dimension()) + ")");
  }
  linker_ = MakeLinker(settings_.linker);
  fs::create_directories(fs::path(settings_.data_dir) / "uploads");
  fs::create_directories(fs::path(settings_.data_dir) / "texts");
  store_ = std::make_unique<graph::GraphStore>(fs::path(settings_.data_dir) / "graphs");
  broker_ = orchestration::MakeBroker(settings_.broker_url, settings_.broker);
}

std::unique_ptr<annotation::EntityLinker> Runtime::MakeLinker(const std::string& spec) const {
  if (spec == "local") return std::make_unique<annotation::LocalLinker>(*kb_);
  if (spec.rfind("http://", 0) == 0) {
    annotation::RemoteLinkerOptions o;
    o.confidence = settings_.linker_confidence;
    o.attempts = settings_.linker_attempts;
    return std::make_unique<annotation::RemoteLinker>(spec, *kb_, o);
  }
  throw ConfigError("linker must be 'local' or an http URL, got '" + spec + "'");
}

fs::path Runtime::UploadPath(const std::string& material_id) const {
  return fs::path(settings_.data_dir) / "uploads" / (material_id + ".json");
}

fs::path Runtime::TextsPath(const std::string& material_id) const {
  return fs::path(settings_.data_dir) / "texts" / (material_id + ".json");
}

void Runtime::SaveTexts(const std::string& material_id, const extraction::MaterialText& text) const {
  json j = {{"slide_texts", text.slide_texts}, {"material_text", text.material_text}};
  const fs::path path = TextsPath(material_id);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << j.dump();
    if (!out) throw DataError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<extraction::MaterialText> Runtime::LoadTexts(const std::string& material_id) const {
  const fs::path path = TextsPath(material_id);
  if (!fs::exists(path)) return std::nullopt;
  json j = json::parse(ReadFile(path));
  extraction::MaterialText t;
  t.slide_texts = j.at("slide_texts").get<std::vector<std::string>>();
  t.material_text = j.at("material_text").get<std::string>();
  return t;
}

std::map<std::string, orchestration::Handler> Runtime::Handlers() {
  std::map<std::string, orchestration::Handler> h;
  h[std::string(orchestration::kBuildKg)] = [this](const orchestration::Job& job) {
    json p = ParsePayload(job);
    graph::Material material{p.at("material_id").get<std::string>(), p.value("name", std::string())};
    const std::string config = p.contains("config") ? p["config"].dump() : "";
    PipelineConfig pc = ApplyOverrides(settings_.pipeline, config);
    std::unique_ptr<annotation::EntityLinker> override_linker;
    if (p.contains("config") && p["config"].contains("linker")) {
      override_linker = MakeLinker(p["config"]["linker"].get<std::string>());
    }
    const fs::path source = p.contains("elements_path") ? fs::path(p["elements_path"].get<std::string>())
                                                         : UploadPath(material.id);
    extraction::PageSet pages = extraction::Ingest(ReadFile(source), extraction::InputFormat::kElementsJson);
    PipelineServices services{*kb_, *embedder_, override_linker ? *override_linker : *linker_, store_.get()};
    // Texts first: slide fragments become visible during the build and the
    // evaluation context reads slide text from here.
    const extraction::NoiseSet noise = extraction::DetectRecurringNoise(pages, pc.segmentation.noise_bucket);
    SaveTexts(material.id, extraction::ExtractMaterialText(pages, noise, pc.segmentation));
    BuildMaterial(material, pages, services, pc);
  };
  h[std::string(orchestration::kExpandKg)] = [this](const orchestration::Job& job) {
    json p = ParsePayload(job);
    const std::string id = p.at("material_id").get<std::string>();
    const std::string config = p.contains("config") ? p["config"].dump() : "";
    auto texts = LoadTexts(id);
    if (!texts) throw NotFound("no stored text for material " + id);
    PipelineServices services{*kb_, *embedder_, *linker_, store_.get()};
    ExpandMaterial(id, texts->material_text, services, ApplyOverrides(settings_.pipeline, config));
  };
  h[std::string(orchestration::kPreprocessDump)] = [this](const orchestration::Job& job) {
    json p = ParsePayload(job);
    std::ifstream in(p.at("dump_path").get<std::string>(), std::ios::binary);
    if (!in) throw NotFound("cannot read dump " + p.at("dump_path").get<std::string>());
    kb::PreprocessOptions options;
    options.build_timestamp = p.value("build_timestamp", std::string());
    kb::PreprocessDump(in, *embedder_, p.at("out_dir").get<std::string>(), options);
  };
  return h;
}

}  // namespace edukg::interface
