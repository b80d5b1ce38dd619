#include <cstdlib>
#include <fstream>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/interface/pipeline.h"
#include "json.hpp"

namespace edukg::interface {

namespace {

double ToDouble(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw ValidationError(key + " must be a number, got '" + v + "'");
}

long long ToInt(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    long long n = std::stoll(v, &used);
    if (used == v.size()) return n;
  } catch (const std::logic_error&) {
  }
  throw ValidationError(key + " must be an integer, got '" + v + "'");
}

size_t ToCount(const std::string& key, const std::string& v, size_t lo, size_t hi) {
  long long n = ToInt(key, v);
  if (n < static_cast<long long>(lo) || n > static_cast<long long>(hi)) {
    throw ValidationError(key + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<size_t>(n);
}

bool ToBool(const std::string& key, const std::string& v) {
  const std::string s = text::ToLowerAscii(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError(key + " must be true or false, got '" + v + "'");
}

// Returns false when `key` is not a pipeline setting.
bool SetPipelineKey(PipelineConfig& c, const std::string& key, const std::string& v) {
  if (key == "threshold") {
    c.annotation.threshold = ToDouble(key, v);
    if (!(c.annotation.threshold >= -1.0 && c.annotation.threshold <= 1.0)) {
      throw ValidationError("threshold must be in [-1, 1]");
    }
  } else if (key == "keyphrase_count") {
    c.annotation.keyphrase_count = ToCount(key, v, 1, 100);
  } else if (key == "keyphrase_method") {
    try {
      c.annotation.keyphrase_method = keyphrase::ParseMethod(v);
    } catch (const ConfigError& e) {
      throw ValidationError(e.what());
    }
  } else if (key == "disambiguate") {
    c.annotation.disambiguate = ToBool(key, v);
  } else if (key == "max_concepts") {
    c.annotation.max_concepts = ToCount(key, v, 1, annotation::kMaxConceptsPerSlide);
  } else if (key == "related_k") {
    c.expansion.related_count = ToCount(key, v, 1, expansion::kDefaultRelatedCount);
  } else if (key == "category_k") {
    c.expansion.category_count = ToCount(key, v, 1, expansion::kDefaultCategoryCount);
  } else if (key == "connected_weight") {
    if (v == "log1p") {
      c.expansion.connected_weight = expansion::ConnectedWeight::kInverseLogOfNPlusOne;
    } else if (v == "log_plus_1") {
      c.expansion.connected_weight = expansion::ConnectedWeight::kInverseOfLogNPlusOne;
    } else {
      throw ValidationError("connected_weight must be log1p or log_plus_1");
    }
  } else if (key == "prune_related") {
    c.expansion.prune_related = ToBool(key, v);
  } else if (key == "merge_rule") {
    try {
      c.merge_rule = graph::ParseMergeRule(v);
    } catch (const ConfigError& e) {
      throw ValidationError(e.what());
    }
  } else if (key == "parallelism") {
    c.parallelism = ToCount(key, v, 1, 64);
  } else if (key == "font_split") {
    c.segmentation.font_split = ToDouble(key, v);
  } else if (key == "vertical_gap_factor") {
    c.segmentation.vertical_gap_factor = ToDouble(key, v);
  } else if (key == "horizontal_gap_factor") {
    c.segmentation.horizontal_gap_factor = ToDouble(key, v);
  } else if (key == "bullet_area_max") {
    c.segmentation.bullet_area_max = ToDouble(key, v);
  } else {
    return false;
  }
  c.expansion.threshold = c.annotation.threshold;
  return true;
}

std::string Unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return v.substr(1, v.size() - 2);
  }
  // Trailing comment on an unquoted value.
  if (size_t hash = v.find(" #"); hash != std::string::npos) v = text::Trim(v.substr(0, hash));
  return v;
}

}  // namespace

Settings Settings::Load(const std::filesystem::path& file) {
  Settings s;
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string t = text::Trim(line);
      if (t.empty() || t[0] == '#' || t[0] == '[') continue;
      size_t eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": expected key = value");
      }
      try {
        s.Set(text::Trim(t.substr(0, eq)), Unquote(text::Trim(t.substr(eq + 1))));
      } catch (const ValidationError& e) {
        throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  s.ApplyEnvironment();
  s.Validate();
  return s;
}

void Settings::Set(const std::string& full_key, const std::string& v) {
  const size_t dot = full_key.rfind('.');
  const std::string key = dot == std::string::npos ? full_key : full_key.substr(dot + 1);
  if (SetPipelineKey(pipeline, key, v)) return;
  if (key == "kb_path") {
    kb_path = v;
  } else if (key == "broker_url") {
    broker_url = v;
  } else if (key == "linker") {
    linker = v;
  } else if (key == "embedder") {
    embedder = v;
  } else if (key == "data_dir") {
    data_dir = v;
  } else if (key == "host") {
    host = v;
  } else if (key == "port") {
    port = static_cast<int>(ToCount(key, v, 0, 65535));
  } else if (key == "token") {
    token = v;
  } else if (key == "ui_dir") {
    ui_dir = v;
  } else if (key == "workers") {
    workers = ToCount(key, v, 0, 64);
  } else if (key == "linker_attempts") {
    linker_attempts = static_cast<int>(ToCount(key, v, 1, 10));
  } else if (key == "linker_confidence") {
    linker_confidence = ToDouble(key, v);
  } else if (key == "visibility_timeout_ms") {
    broker.visibility_timeout = std::chrono::milliseconds(ToCount(key, v, 1, 86'400'000));
  } else if (key == "idempotency_window_ms") {
    broker.idempotency_window = std::chrono::milliseconds(ToCount(key, v, 0, 86'400'000));
  } else if (key == "backoff_base_ms") {
    broker.backoff_base = std::chrono::milliseconds(ToCount(key, v, 0, 3'600'000));
  } else if (key == "max_attempts") {
    broker.max_attempts = static_cast<int>(ToCount(key, v, 1, 100));
  } else {
    throw ValidationError("unknown setting '" + full_key + "'");
  }
}

void Settings::ApplyEnvironment() {
  static const std::pair<const char*, const char*> kVars[] = {
      {"EDUKG_KB_PATH", "kb_path"},     {"EDUKG_BROKER_URL", "broker_url"}, {"EDUKG_LINKER", "linker"},
      {"EDUKG_THRESHOLD", "threshold"}, {"EDUKG_EMBEDDER", "embedder"},     {"EDUKG_DATA_DIR", "data_dir"},
      {"EDUKG_TOKEN", "token"},
  };
  for (const auto& [var, key] : kVars) {
    if (const char* v = std::getenv(var); v != nullptr && *v != '\0') {
      try {
        Set(key, v);
      } catch (const ValidationError& e) {
        throw ConfigError(std::string(var) + ": " + e.what());
      }
    }
  }
}

void Settings::Validate() const {
  if (!(linker_confidence >= 0.0 && linker_confidence <= 1.0)) {
    throw ValidationError("linker_confidence must be in [0, 1]");
  }
  if (!(pipeline.annotation.threshold >= -1.0 && pipeline.annotation.threshold <= 1.0)) {
    throw ValidationError("threshold must be in [-1, 1]");
  }
}

PipelineConfig ApplyOverrides(const PipelineConfig& base, const std::string& overrides_json) {
  PipelineConfig c = base;
  if (overrides_json.empty()) return c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(overrides_json);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config is not json: ") + e.what());
  }
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("config must be a json object");
  for (const auto& [key, value] : j.items()) {
    if (key == "linker" || key == "embedder") continue;
    const std::string v = value.is_string() ? value.get<std::string>() : value.dump();
    if (!SetPipelineKey(c, key, v)) throw ValidationError("unknown config key '" + key + "'");
  }
  return c;
}

}  // namespace edukg::interface
