#include <fstream>
#include <sstream>

#include "edukg/common/error.h"
#include "edukg/graph/graph.h"

namespace edukg::graph {

namespace fs = std::filesystem;

namespace {

constexpr const char* kBuildingMarker = "BUILDING";

void WriteAtomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

GraphStore::GraphStore(fs::path root) : root_(std::move(root)) {
  if (!root_.empty()) {
    fs::create_directories(root_);
    Load();
  }
}

fs::path GraphStore::MaterialDir(const std::string& material_id) const { return root_ / material_id; }

void GraphStore::Load() {
  for (const auto& dir : fs::directory_iterator(root_)) {
    if (!dir.is_directory()) continue;
    const std::string id = dir.path().filename().string();
    if (!IsValidMaterialId(id)) continue;
    Entry& e = entries_[id];
    e.building = fs::exists(dir.path() / kBuildingMarker);
    if (fs::exists(dir.path() / "material.jsonl")) {
      e.material = ParseJsonl(ReadFile(dir.path() / "material.jsonl"));
    }
    if (fs::exists(dir.path() / "slides")) {
      for (const auto& f : fs::directory_iterator(dir.path() / "slides")) {
        if (f.path().extension() != ".jsonl") continue;
        e.slides[std::stoi(f.path().stem().string())] = ParseJsonl(ReadFile(f.path()));
      }
    }
  }
}

void GraphStore::BeginMaterial(const std::string& material_id) {
  if (!IsValidMaterialId(material_id)) throw ValidationError("invalid material id: " + material_id);
  std::lock_guard lock(mu_);
  Entry& e = entries_[material_id];
  e.building = true;
  e.slides.clear();
  if (!root_.empty()) {
    const fs::path dir = MaterialDir(material_id);
    fs::remove_all(dir / "slides");
    fs::create_directories(dir / "slides");
    WriteAtomically(dir / kBuildingMarker, "");
  }
}

void GraphStore::PutSlide(const std::string& material_id, int slide_no, const EduKG& fragment) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(material_id);
  if (it == entries_.end() || !it->second.building) {
    throw ContractViolation("material " + material_id + " is not being built");
  }
  if (it->second.slides.contains(slide_no)) {
    throw ConflictError("slide " + std::to_string(slide_no) + " of " + material_id + " already stored");
  }
  if (!root_.empty()) {
    WriteAtomically(MaterialDir(material_id) / "slides" / (std::to_string(slide_no) + ".jsonl"),
                    Export(fragment, ExportFormat::kJsonl));
  }
  it->second.slides.emplace(slide_no, fragment);
}

void GraphStore::PublishMaterial(const std::string& material_id, const EduKG& kg) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(material_id);
  if (it == entries_.end()) throw ContractViolation("material " + material_id + " was never started");
  if (!root_.empty()) {
    const fs::path dir = MaterialDir(material_id);
    WriteAtomically(dir / "material.jsonl", Export(kg, ExportFormat::kJsonl));
    fs::remove(dir / kBuildingMarker);
  }
  it->second.material = kg;
  it->second.building = false;
}

MaterialState GraphStore::State(const std::string& material_id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(material_id);
  if (it == entries_.end()) return MaterialState::kUnknown;
  if (it->second.building) return MaterialState::kBuilding;
  return it->second.material ? MaterialState::kPublished : MaterialState::kUnknown;
}

std::vector<int> GraphStore::SlideNumbers(const std::string& material_id) const {
  std::lock_guard lock(mu_);
  std::vector<int> out;
  auto it = entries_.find(material_id);
  if (it == entries_.end()) return out;
  for (const auto& [n, _] : it->second.slides) out.push_back(n);
  return out;
}

std::optional<EduKG> GraphStore::GetSlide(const std::string& material_id, int slide_no) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(material_id);
  if (it == entries_.end()) return std::nullopt;
  auto s = it->second.slides.find(slide_no);
  if (s == it->second.slides.end()) return std::nullopt;
  return s->second;
}

std::optional<EduKG> GraphStore::GetMaterial(const std::string& material_id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(material_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.material;
}

std::vector<EduKG> GraphStore::SlideFragments(const std::string& material_id) const {
  std::lock_guard lock(mu_);
  std::vector<EduKG> out;
  auto it = entries_.find(material_id);
  if (it == entries_.end()) return out;
  for (const auto& [_, kg] : it->second.slides) out.push_back(kg);
  return out;
}

}  // namespace edukg::graph
