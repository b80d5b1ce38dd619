#include <chrono>
#include <set>
#include <thread>

#include "edukg/annotation/annotation.h"
#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/common/url.h"
#include "httplib.h"
#include "json.hpp"

namespace edukg::annotation {

using json = nlohmann::json;

namespace {

size_t CodePoints(std::string_view s) {
  size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

// Spotlight encodes numbers as strings; accept both.
long long AsInteger(const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_string()) return std::stoll(v.get<std::string>());
  throw ParseError("resource offset is not a number");
}

class InFlightSlot {
 public:
  explicit InFlightSlot(std::counting_semaphore<RemoteLinker::kMaxInFlight>& sem) : sem_(sem) {
    sem_.acquire();
  }
  ~InFlightSlot() { sem_.release(); }

 private:
  std::counting_semaphore<RemoteLinker::kMaxInFlight>& sem_;
};

}  // namespace

std::string TitleFromResourceUri(std::string_view uri) {
  size_t slash = uri.rfind('/');
  std::string tail = PercentDecode(slash == std::string_view::npos ? uri : uri.substr(slash + 1));
  for (char& c : tail) {
    if (c == '_') c = ' ';
  }
  return tail;
}

RemoteLinker::RemoteLinker(std::string endpoint, const kb::KnowledgeBase& kb, RemoteLinkerOptions options)
    : kb_(kb), options_(options) {
  Url url = ParseUrl(endpoint);
  if (url.scheme != "http") throw ConfigError("linker endpoint must be http: " + endpoint);
  origin_ = url.Origin();
  path_ = url.path == "/" ? "/rest/annotate" : url.path;
  if (options_.attempts < 1) throw ConfigError("linker attempts must be positive");
}

std::vector<ConceptCandidate> RemoteLinker::Link(const std::vector<keyphrase::Keyphrase>& keyphrases,
                                                 std::string_view slide_text) const {
  if (keyphrases.empty()) return {};
  std::vector<std::string> texts;
  for (const auto& kp : keyphrases) texts.push_back(kp.text);
  const std::string prefix = text::Join(texts, ", ");
  const std::string request_text = prefix + "\n" + std::string(slide_text);
  const long long prefix_len = static_cast<long long>(CodePoints(prefix));

  httplib::Params form{{"text", request_text}, {"confidence", std::to_string(options_.confidence)}};
  httplib::Headers headers{{"Accept", "application/json"}};

  std::string last_error;
  int backoff = options_.backoff_ms;
  std::optional<json> reply;
  for (int attempt = 1; attempt <= options_.attempts && !reply; ++attempt) {
    httplib::Result res;
    {
      InFlightSlot slot(in_flight_);
      httplib::Client client(origin_);
      client.set_connection_timeout(std::chrono::milliseconds(options_.timeout_ms));
      client.set_read_timeout(std::chrono::milliseconds(options_.timeout_ms));
      res = client.Post(path_, headers, form);
    }
    if (!res) {
      last_error = "linker request failed: " + httplib::to_string(res.error());
    } else if (res->status >= 500 || res->status == 429) {
      last_error = "linker returned " + std::to_string(res->status);
    } else if (res->status != 200) {
      throw LinkerUnavailable("linker returned " + std::to_string(res->status));
    } else {
      try {
        reply = json::parse(res->body);
      } catch (const json::exception& e) {
        throw LinkerUnavailable(std::string("linker reply is not json: ") + e.what());
      }
      break;
    }
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
  }
  if (!reply) throw LinkerUnavailable(last_error);

  std::vector<ConceptCandidate> out;
  std::set<kb::PageId> seen;
  auto resources = reply->find("Resources");
  if (resources == reply->end() || !resources->is_array()) return out;
  for (const auto& r : *resources) {
    if (!r.contains("@URI") || !r.contains("@offset")) continue;
    if (AsInteger(r["@offset"]) >= prefix_len) continue;
    std::optional<kb::KBRecord> rec = kb_.FindTitle(TitleFromResourceUri(r["@URI"].get<std::string>()));
    if (!rec || !seen.insert(rec->page_id).second) continue;
    out.push_back({r.value("@surfaceForm", std::string()), rec->page_id, rec->title, LinkSource::kRemote});
  }
  return out;
}

}  // namespace edukg::annotation
