#include "edukg/kb/kb_http.h"

#include <algorithm>
#include <thread>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "edukg/common/url.h"
#include "httplib.h"
#include "json.hpp"

namespace edukg::kb {

using json = nlohmann::json;

namespace {

json RecordJson(const KBRecord& r) {
  return {{"page_id", r.page_id},
          {"title", r.title},
          {"abstract", r.abstract},
          {"out_links", r.out_links},
          {"categories", r.categories},
          {"is_disambiguation", r.is_disambiguation}};
}

PageId ParsePageId(const std::string& s) {
  try {
    size_t used = 0;
    PageId id = std::stoull(s, &used);
    if (used != s.size()) throw ValidationError("bad page id: " + s);
    return id;
  } catch (const std::logic_error&) {
    throw ValidationError("bad page id: " + s);
  }
}

template <typename Fn>
httplib::Server::Handler Wrap(std::chrono::milliseconds latency, Fn fn) {
  return [latency, fn](const httplib::Request& req, httplib::Response& res) {
    if (latency.count() > 0) std::this_thread::sleep_for(latency);
    try {
      res.set_content(fn(req).dump(), "application/json");
    } catch (const NotFound& e) {
      res.status = 404;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const ValidationError& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const DataError& e) {
      res.status = 422;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  };
}

}  // namespace

void MountKnowledgeBaseRoutes(httplib::Server& server, const KnowledgeBase& kb,
                              std::chrono::milliseconds latency) {
  server.Get("/kb/title", Wrap(latency, [&kb](const httplib::Request& req) {
               return RecordJson(kb.Lookup(req.get_param_value("title")));
             }));
  server.Get("/kb/page", Wrap(latency, [&kb](const httplib::Request& req) {
               return RecordJson(kb.Get(ParsePageId(req.get_param_value("id"))));
             }));
  server.Get("/kb/pages", Wrap(latency, [&kb](const httplib::Request& req) {
               std::vector<PageId> ids;
               for (const auto& part : text::Split(req.get_param_value("ids"), ',')) {
                 if (!part.empty()) ids.push_back(ParsePageId(part));
               }
               json out = {{"records", json::array()}};
               for (const auto& r : kb.GetMany(ids)) out["records"].push_back(RecordJson(r));
               return out;
             }));
  server.Get("/kb/neighbors", Wrap(latency, [&kb](const httplib::Request& req) {
               Neighborhood n = kb.Neighbors(ParsePageId(req.get_param_value("id")));
               return json{{"out_links", n.out_links}, {"in_links", n.in_links}};
             }));
  server.Get("/kb/categories", Wrap(latency, [&kb](const httplib::Request& req) {
               json names = json::array();
               for (const auto& c : kb.CategoriesOf(ParsePageId(req.get_param_value("id")))) {
                 names.push_back(c.name);
               }
               return json{{"categories", names}};
             }));
  server.Get("/kb/disambiguation", Wrap(latency, [&kb](const httplib::Request& req) {
               json out = {{"records", json::array()}};
               for (const auto& r : kb.DisambiguationCandidates(req.get_param_value("title"))) {
                 out["records"].push_back(RecordJson(r));
               }
               return out;
             }));
}

RemoteKnowledgeBase::RemoteKnowledgeBase(std::string endpoint,
                                         const embedding::EmbeddingProvider& embedder, int attempts)
    : embedder_(embedder), attempts_(attempts) {
  Url url = ParseUrl(endpoint);
  if (url.scheme != "http") throw ConfigError("knowledge-base endpoint must be http: " + endpoint);
  origin_ = url.Origin();
  base_path_ = url.path == "/" ? "" : url.path;
}

std::optional<std::string> RemoteKnowledgeBase::Fetch(const std::string& path_and_query) const {
  std::string last_error;
  for (int attempt = 1; attempt <= attempts_; ++attempt) {
    httplib::Client client(origin_);
    client.set_read_timeout(std::chrono::seconds(30));
    ++requests_;
    auto res = client.Get(base_path_ + path_and_query);
    if (!res) {
      last_error = "knowledge-base request failed: " + httplib::to_string(res.error());
    } else if (res->status >= 500) {
      last_error = "knowledge-base service returned " + std::to_string(res->status);
    } else if (res->status == 404) {
      return std::nullopt;
    } else if (res->status == 422) {
      throw DataError(json::parse(res->body).value("error", "knowledge-base data error"));
    } else if (res->status != 200) {
      throw TransportError("knowledge-base service returned " + std::to_string(res->status), false);
    } else {
      return res->body;
    }
  }
  throw TransportError(last_error, true);
}

namespace {

constexpr size_t kPagesPerRequest = 50;

KBRecord ParseRecord(const json& j, const embedding::EmbeddingProvider& embedder) {
  KBRecord r;
  r.page_id = j.at("page_id").get<PageId>();
  r.title = j.at("title").get<std::string>();
  r.abstract = j.at("abstract").get<std::string>();
  r.out_links = j.at("out_links").get<std::vector<PageId>>();
  r.categories = j.at("categories").get<std::vector<std::string>>();
  r.is_disambiguation = j.at("is_disambiguation").get<bool>();
  r.abstract_embedding = embedder.Embed(r.abstract);
  return r;
}

}  // namespace

std::optional<KBRecord> RemoteKnowledgeBase::FindTitle(std::string_view title) const {
  auto body = Fetch("/kb/title?title=" + PercentEncode(title));
  if (!body) return std::nullopt;
  return ParseRecord(json::parse(*body), embedder_);
}

KBRecord RemoteKnowledgeBase::Get(PageId id) const {
  auto body = Fetch("/kb/page?id=" + std::to_string(id));
  if (!body) throw NotFound("no knowledge-base page with id " + std::to_string(id));
  return ParseRecord(json::parse(*body), embedder_);
}

std::vector<KBRecord> RemoteKnowledgeBase::GetMany(const std::vector<PageId>& ids) const {
  std::vector<KBRecord> out;
  for (size_t start = 0; start < ids.size(); start += kPagesPerRequest) {
    std::string query;
    for (size_t i = start; i < std::min(ids.size(), start + kPagesPerRequest); ++i) {
      if (!query.empty()) query += ',';
      query += std::to_string(ids[i]);
    }
    auto body = Fetch("/kb/pages?ids=" + query);
    if (!body) throw NotFound("knowledge-base pages not found: " + query);
    const json page = json::parse(*body);
    for (const auto& r : page.at("records")) out.push_back(ParseRecord(r, embedder_));
  }
  return out;
}

Neighborhood RemoteKnowledgeBase::Neighbors(PageId id) const {
  auto body = Fetch("/kb/neighbors?id=" + std::to_string(id));
  if (!body) throw NotFound("no knowledge-base page with id " + std::to_string(id));
  json j = json::parse(*body);
  return {j.at("out_links").get<std::vector<PageId>>(), j.at("in_links").get<std::vector<PageId>>()};
}

std::vector<CategoryRef> RemoteKnowledgeBase::CategoriesOf(PageId id) const {
  auto body = Fetch("/kb/categories?id=" + std::to_string(id));
  if (!body) throw NotFound("no knowledge-base page with id " + std::to_string(id));
  std::vector<CategoryRef> out;
  const json j = json::parse(*body);
  for (const auto& name : j.at("categories")) {
    out.push_back({name.get<std::string>(), embedder_.Embed(name.get<std::string>())});
  }
  return out;
}

std::vector<KBRecord> RemoteKnowledgeBase::DisambiguationCandidates(std::string_view title) const {
  auto body = Fetch("/kb/disambiguation?title=" + PercentEncode(title));
  std::vector<KBRecord> out;
  if (!body) return out;
  const json j = json::parse(*body);
  for (const auto& r : j.at("records")) out.push_back(ParseRecord(r, embedder_));
  return out;
}

}  // namespace edukg::kb
