#include "edukg/interface/service.h"

#include <fstream>

#include "edukg/common/error.h"
#include "edukg/common/text.h"
#include "httplib.h"
#include "json.hpp"

namespace edukg::interface {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr size_t kSnippetBytes = 280;

json ParseBody(const std::string& body) {
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw ValidationError("request body must be a json object");
    return j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("request body is not json: ") + e.what());
  }
}

json StatsJson(const evaluation::SrsStats& s) {
  return {{"n", s.n},
          {"correct", s.correct},
          {"mu", s.mu},
          {"sigma", s.sigma},
          {"moe", s.moe},
          {"stopped", s.stopped},
          {"formatted", evaluation::FormatAccuracy(s.mu, s.sigma)}};
}

json GraphJson(const graph::EduKG& kg) {
  json nodes = json::array(), edges = json::array();
  for (const auto& line : text::Split(graph::Export(kg, graph::ExportFormat::kJsonl), '\n')) {
    if (line.empty()) continue;
    json r = json::parse(line);
    (r["t"] == "node" ? nodes : edges).push_back(std::move(r));
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

// Cuts at a UTF-8 boundary.
std::string Snippet(const std::string& s) {
  if (s.size() <= kSnippetBytes) return s;
  size_t cut = kSnippetBytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut) + "…";
}

template <typename Fn>
httplib::Server::Handler Wrap(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    auto fail = [&res](int status, const char* what) {
      res.status = status;
      res.set_content(json{{"error", what}}.dump(), "application/json");
    };
    try {
      fn(req, res);
    } catch (const ValidationError& e) {
      fail(400, e.what());
    } catch (const ParseError& e) {
      fail(400, e.what());
    } catch (const ContractViolation& e) {
      fail(400, e.what());
    } catch (const ConfigError& e) {
      fail(400, e.what());
    } catch (const NotFound& e) {
      fail(404, e.what());
    } catch (const ConflictError& e) {
      fail(409, e.what());
    } catch (const TransportError& e) {
      fail(503, e.what());
    } catch (const std::exception& e) {
      fail(500, e.what());
    }
  };
}

}  // namespace

Service::Service(Runtime& runtime) : runtime_(runtime) { fs::create_directories(SessionDir()); }

fs::path Service::SessionDir() const { return fs::path(runtime_.settings().data_dir) / "sessions"; }

void Service::Mount(httplib::Server& server) {
  const std::string token = runtime_.settings().token;
  if (!token.empty()) {
    server.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
      const bool api = req.path.rfind("/materials", 0) == 0 || req.path.rfind("/jobs", 0) == 0 ||
                       req.path.rfind("/eval", 0) == 0;
      if (!api || req.get_header_value("Authorization") == "Bearer " + token) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      res.status = 401;
      res.set_content(json{{"error", "missing or wrong token"}}.dump(), "application/json");
      return httplib::Server::HandlerResponse::Handled;
    });
  }
  server.Post("/materials", Wrap([this](const httplib::Request& req, httplib::Response& res) {
                res.status = 202;
                res.set_content(Submit(req.body), "application/json");
              }));
  server.Get(R"(/jobs/([^/]+))", Wrap([this](const httplib::Request& req, httplib::Response& res) {
               res.set_content(JobStatus(req.matches[1]), "application/json");
             }));
  server.Get(R"(/materials/([^/]+)/kg)", Wrap([this](const httplib::Request& req, httplib::Response& res) {
               std::string type;
               std::string body = GetKg(req.matches[1], req.get_param_value("level"),
                                        req.get_param_value("slide_no"), req.get_param_value("format"), type);
               res.set_content(body, type);
             }));
  server.Post("/eval/sessions", Wrap([this](const httplib::Request& req, httplib::Response& res) {
                res.status = 201;
                res.set_content(CreateSession(req.body), "application/json");
              }));
  server.Get(R"(/eval/sessions/([^/]+)/next)", Wrap([this](const httplib::Request& req, httplib::Response& res) {
               res.set_content(NextTriple(req.matches[1]), "application/json");
             }));
  server.Post(R"(/eval/sessions/([^/]+)/judgments)",
              Wrap([this](const httplib::Request& req, httplib::Response& res) {
                res.set_content(Judge(req.matches[1], req.body), "application/json");
              }));
  server.Get(R"(/eval/sessions/([^/]+)/stats)", Wrap([this](const httplib::Request& req, httplib::Response& res) {
               res.set_content(Stats(req.matches[1]), "application/json");
             }));
  const std::string& ui = runtime_.settings().ui_dir;
  if (!ui.empty() && fs::is_directory(ui)) server.set_mount_point("/", ui);
}

std::string Service::Submit(const std::string& body) {
  json req = ParseBody(body);
  const std::string id = req.value("material_id", std::string());
  if (!graph::IsValidMaterialId(id)) throw ValidationError("material_id must match [A-Za-z0-9._-]{1,128}");
  const std::string name = req.value("name", id);

  json config = req.value("config", json::object());
  if (!config.is_object()) throw ValidationError("config must be a json object");
  ApplyOverrides(runtime_.settings().pipeline, config.dump());
  if (config.contains("linker")) runtime_.MakeLinker(config["linker"].get<std::string>());
  if (config.contains("embedder") && config["embedder"] != runtime_.settings().embedder) {
    throw ValidationError("embedder must match the knowledge base's embeddings ('" +
                          runtime_.settings().embedder + "')");
  }

  std::string elements;
  if (req.contains("elements")) {
    elements = req["elements"].is_string() ? req["elements"].get<std::string>() : req["elements"].dump();
  } else if (req.contains("elements_path")) {
    std::ifstream in(req["elements_path"].get<std::string>(), std::ios::binary);
    if (!in) throw ValidationError("cannot read elements_path");
    elements.assign(std::istreambuf_iterator<char>(in), {});
  } else {
    throw ValidationError("submission needs elements or elements_path");
  }
  extraction::PageSet pages = extraction::Ingest(elements, extraction::InputFormat::kElementsJson);

  std::lock_guard lock(submit_mu_);
  const fs::path upload = runtime_.UploadPath(id);
  if (fs::exists(upload) || runtime_.store().State(id) != graph::MaterialState::kUnknown) {
    throw ConflictError("material " + id + " was already submitted");
  }
  {
    std::ofstream out(upload, std::ios::binary);
    out << extraction::ToElementsJson(pages);
    if (!out) throw DataError("cannot stage material " + id);
  }
  json payload = {{"material_id", id}, {"name", name}, {"config", config}};
  try {
    const std::string job_id = runtime_.broker().Enqueue(orchestration::kBuildKg, payload.dump());
    return json{{"job_id", job_id}, {"material_id", id}}.dump();
  } catch (...) {
    fs::remove(upload);
    throw;
  }
}

std::string Service::JobStatus(const std::string& job_id) {
  orchestration::Job j = runtime_.broker().Status(job_id);
  return json{{"job_id", j.job_id},
              {"kind", j.kind},
              {"status", orchestration::JobStatusName(j.status)},
              {"attempts", j.attempts},
              {"max_attempts", j.max_attempts},
              {"created_at_ms", j.created_at_ms},
              {"updated_at_ms", j.updated_at_ms},
              {"last_error", j.last_error}}
      .dump();
}

std::string Service::GetKg(const std::string& material_id, const std::string& level, const std::string& slide_no,
                           const std::string& format, std::string& content_type) {
  graph::GraphStore& store = runtime_.store();
  const graph::MaterialState state = store.State(material_id);
  const std::vector<int> slides = store.SlideNumbers(material_id);
  if (state == graph::MaterialState::kUnknown && slides.empty() && !store.GetMaterial(material_id)) {
    throw NotFound("unknown material " + material_id);
  }
  graph::EduKG kg;
  const std::string lvl = level.empty() ? "material" : level;
  if (lvl == "material") {
    std::optional<graph::EduKG> m = store.GetMaterial(material_id);
    if (!m) throw ConflictError("material graph for " + material_id + " is not ready");
    kg = std::move(*m);
  } else if (lvl == "slide") {
    if (!slide_no.empty()) {
      int n = 0;
      try {
        n = std::stoi(slide_no);
      } catch (const std::logic_error&) {
        throw ValidationError("slide_no must be an integer");
      }
      std::optional<graph::EduKG> s = store.GetSlide(material_id, n);
      if (!s) throw NotFound("slide " + slide_no + " of " + material_id + " is not available");
      kg = std::move(*s);
    } else {
      std::vector<graph::EduKG> fragments = store.SlideFragments(material_id);
      if (!fragments.empty()) kg = graph::Merge(fragments);
    }
  } else {
    throw ValidationError("level must be slide or material");
  }

  if (format == "jsonl" || format == "graphml") {
    content_type = format == "jsonl" ? "application/x-ndjson" : "application/xml";
    return graph::Export(kg, graph::ParseExportFormat(format));
  }
  if (!format.empty() && format != "json") throw ValidationError("format must be json, jsonl or graphml");
  content_type = "application/json";
  json out = {{"material_id", material_id},
              {"level", lvl},
              {"state", state == graph::MaterialState::kBuilding ? "building" : "published"},
              {"slides", slides},
              {"graph", GraphJson(kg)}};
  return out.dump();
}

std::string Service::CreateSession(const std::string& body) {
  json req = ParseBody(body);
  const std::string material_id = req.value("material_id", std::string());
  std::optional<graph::EduKG> kg = runtime_.store().GetMaterial(material_id);
  if (!kg) throw NotFound("no finished graph for material '" + material_id + "'");
  evaluation::SrsConfig c;
  c.seed = req.value("seed", uint64_t{1});
  c.batch_size = req.value("batch_size", evaluation::kDefaultMinSamples);
  c.moe_threshold = req.value("moe_threshold", evaluation::kDefaultMoeThreshold);
  c.min_samples = req.value("min_samples", evaluation::kDefaultMinSamples);
  c.annotator_id = req.value("annotator_id", std::string());
  if (c.batch_size == 0) throw ValidationError("batch_size must be positive");

  auto session = std::make_shared<Session>();
  session->material_id = material_id;
  const std::string id = orchestration::NewJobId();
  session->srs = std::make_unique<evaluation::SrsSession>(id, *kg, c);
  {
    std::ofstream side(SessionDir() / (id + ".material"));
    side << material_id;
  }
  session->srs->AttachLog(SessionDir() / (id + ".jsonl"));
  {
    std::lock_guard lock(sessions_mu_);
    sessions_[id] = session;
  }
  return json{{"session_id", id}, {"material_id", material_id}, {"stats", StatsJson(session->srs->stats())}}
      .dump();
}

std::shared_ptr<Service::Session> Service::FindSession(const std::string& session_id) {
  std::lock_guard lock(sessions_mu_);
  if (auto it = sessions_.find(session_id); it != sessions_.end()) return it->second;
  // Sessions survive restarts through their event logs.
  if (!graph::IsValidMaterialId(session_id)) throw NotFound("unknown session " + session_id);
  const fs::path side = SessionDir() / (session_id + ".material");
  const fs::path log = SessionDir() / (session_id + ".jsonl");
  if (!fs::exists(side) || !fs::exists(log)) throw NotFound("unknown session " + session_id);
  std::ifstream in(side);
  std::string material_id;
  std::getline(in, material_id);
  std::optional<graph::EduKG> kg = runtime_.store().GetMaterial(material_id);
  if (!kg) throw NotFound("graph of session " + session_id + " is gone");
  auto session = std::make_shared<Session>();
  session->material_id = material_id;
  session->srs = evaluation::SrsSession::Resume(*kg, log);
  sessions_[session_id] = session;
  return session;
}

std::string Service::NextTriple(const std::string& session_id) {
  auto session = FindSession(session_id);
  std::lock_guard lock(session->mu);
  std::optional<graph::Triple> t = session->srs->Next();
  json out = {{"session_id", session_id}, {"stats", StatsJson(session->srs->stats())}};
  if (!t) {
    out["triple"] = nullptr;
    return out.dump();
  }
  std::optional<graph::EduKG> kg = runtime_.store().GetMaterial(session->material_id);
  auto label = [&kg](const std::string& id) {
    const graph::Node* n = kg ? kg->FindNode(id) : nullptr;
    if (!n) return id;
    if (n->type == graph::NodeType::kSlide) return "Slide " + std::to_string(n->slide_no);
    return n->label;
  };
  out["triple"] = {{"subject", t->subject},
                   {"predicate", graph::EdgeTypeName(t->predicate)},
                   {"object", t->object},
                   {"subject_label", label(t->subject)},
                   {"object_label", label(t->object)},
                   {"provenance", t->provenance}};

  // Context: the slide the triple came from, or the first slide holding the
  // concept involved, plus the object's abstract.
  int slide = t->provenance;
  if (slide == 0 && kg) {
    const std::string concept_id = t->predicate == graph::EdgeType::kHasConcept ? t->object : t->subject;
    for (const auto& e : kg->Edges()) {
      const graph::Node* from = kg->FindNode(e.from);
      if (e.type == graph::EdgeType::kContains && e.to == concept_id && from->type == graph::NodeType::kSlide) {
        slide = from->slide_no;
        break;
      }
    }
    if (const graph::Node* obj = kg->FindNode(t->object); obj && obj->type == graph::NodeType::kSlide) {
      slide = obj->slide_no;
    }
  }
  std::string snippet;
  if (auto texts = runtime_.LoadTexts(session->material_id);
      texts && slide >= 1 && static_cast<size_t>(slide) <= texts->slide_texts.size()) {
    snippet = Snippet(texts->slide_texts[static_cast<size_t>(slide) - 1]);
  }
  std::string abstract;
  if (const graph::Node* obj = kg ? kg->FindNode(t->object) : nullptr;
      obj && obj->type == graph::NodeType::kConcept) {
    try {
      abstract = Snippet(runtime_.kb().Get(obj->page_id).abstract);
    } catch (const NotFound&) {
    }
  }
  out["context"] = {{"slide_no", slide}, {"slide_text", snippet}, {"abstract", abstract}};
  return out.dump();
}

std::string Service::Judge(const std::string& session_id, const std::string& body) {
  json req = ParseBody(body);
  auto session = FindSession(session_id);
  if (!req.contains("triple") || !req["triple"].is_object()) throw ValidationError("judgment needs a triple");
  const json& tj = req["triple"];
  graph::Triple wanted;
  try {
    wanted.subject = tj.at("subject").get<std::string>();
    wanted.predicate = graph::ParseEdgeType(tj.at("predicate").get<std::string>());
    wanted.object = tj.at("object").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad triple: ") + e.what());
  }
  const evaluation::Verdict verdict = evaluation::ParseVerdict(req.value("verdict", std::string()));
  const evaluation::JudgmentTask task = evaluation::ParseJudgmentTask(req.value("task", std::string("relation")));

  std::lock_guard lock(session->mu);
  if (session->srs->stats().stopped) throw ConflictError("session " + session_id + " has stopped");
  std::optional<graph::Triple> match;
  for (const auto& t : session->srs->sampled()) {
    if (t.subject == wanted.subject && t.predicate == wanted.predicate && t.object == wanted.object) match = t;
  }
  if (!match) throw ContractViolation("triple was not sampled in this session");
  for (const auto& j : session->srs->judgments()) {
    if (j.triple == *match) throw ConflictError("triple was already judged");
  }
  return json{{"session_id", session_id}, {"stats", StatsJson(session->srs->Judge(*match, verdict, task))}}.dump();
}

std::string Service::Stats(const std::string& session_id) {
  auto session = FindSession(session_id);
  std::lock_guard lock(session->mu);
  json out = StatsJson(session->srs->stats());
  out["session_id"] = session_id;
  return out.dump();
}

}  // namespace edukg::interface
