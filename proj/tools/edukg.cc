// Command-line front end: every verb calls the same library code as the service.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "edukg/common/error.h"
#include "edukg/evaluation/evaluation.h"
#include "edukg/interface/pipeline.h"
#include "edukg/interface/service.h"
#include "edukg/kb/kb_http.h"
#include "httplib.h"
#include "json.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace edukg;

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteOutput(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw DataError("cannot write " + path);
}

struct Common {
  std::string config;
  std::vector<std::string> sets;

  interface::Settings Load() const {
    interface::Settings s = interface::Settings::Load(config);
    for (const auto& kv : sets) {
      size_t eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      s.Set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    s.Validate();
    return s;
  }
};

json StatsJson(const kb::KBStats& s) {
  return {{"pages", s.pages},
          {"redirects", s.redirects},
          {"disambiguations", s.disambiguations},
          {"links", s.links},
          {"categories", s.categories},
          {"dropped_links", s.dropped_links},
          {"skipped_pages", s.skipped_pages},
          {"build_timestamp", s.build_timestamp}};
}

void InstallSignals() {
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Educational knowledge graph construction"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config, "settings file (key = value)");
  app.add_option("--set", common.sets, "override a setting, key=value (repeatable)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "segment a positioned-element document into slide text");
  std::string ingest_file, ingest_format = "elements";
  bool ingest_segments = false;
  ingest->add_option("file", ingest_file)->required();
  ingest->add_option("--format", ingest_format, "elements | pdf");
  ingest->add_flag("--segments", ingest_segments, "print every segment with its role");

  // build
  auto* build = app.add_subcommand("build", "build the knowledge graph of one material synchronously");
  std::string build_file, build_id, build_name, build_out, build_format = "jsonl";
  bool build_persist = false;
  build->add_option("file", build_file, "elements JSON")->required();
  build->add_option("--material-id", build_id)->required();
  build->add_option("--name", build_name);
  build->add_option("-o,--out", build_out, "output file, stdout by default");
  build->add_option("--format", build_format, "jsonl | graphml");
  build->add_flag("--persist", build_persist, "also write fragments and graph to the data directory");

  // expand
  auto* expand = app.add_subcommand("expand", "re-run expansion for a stored material");
  std::string expand_id, expand_out, expand_format = "jsonl";
  expand->add_option("--material-id", expand_id)->required();
  expand->add_option("-o,--out", expand_out);
  expand->add_option("--format", expand_format);

  // export
  auto* exp = app.add_subcommand("export", "export a stored graph");
  std::string export_id, export_level = "material", export_out, export_format = "jsonl";
  int export_slide = 0;
  exp->add_option("--material-id", export_id)->required();
  exp->add_option("--level", export_level, "material | slide");
  exp->add_option("--slide-no", export_slide);
  exp->add_option("-o,--out", export_out);
  exp->add_option("--format", export_format, "jsonl | graphml");

  // dump preprocess
  auto* dump = app.add_subcommand("dump", "knowledge-base dump tools");
  dump->require_subcommand(1);
  auto* preprocess = dump->add_subcommand("preprocess", "turn a MediaWiki XML export into a store");
  std::string dump_file, dump_out, dump_embedder, dump_timestamp;
  preprocess->add_option("file", dump_file)->required();
  preprocess->add_option("-o,--out", dump_out)->required();
  preprocess->add_option("--embedder", dump_embedder, "hash, hash:<dim> or URL (default: settings)");
  preprocess->add_option("--timestamp", dump_timestamp, "override the build timestamp");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluation tools");
  eval->require_subcommand(1);
  auto* srs = eval->add_subcommand("srs", "simple random sampling accuracy estimation");
  double srs_p = -1;
  size_t srs_runs = 200, srs_pool = 2000;
  uint64_t srs_seed = 1;
  srs->add_option("--simulate", srs_p, "simulate annotators answering correct with probability p")->required();
  srs->add_option("--runs", srs_runs);
  srs->add_option("--seed", srs_seed);
  srs->add_option("--pool", srs_pool, "triples in the synthetic graph");
  auto* textdiff = eval->add_subcommand("textdiff", "compare extracted text with a gold text");
  std::string diff_out, diff_gold;
  textdiff->add_option("output", diff_out)->required();
  textdiff->add_option("gold", diff_gold)->required();

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP API (and in-process workers)");
  bool serve_kb = false;
  serve->add_flag("--kb-routes", serve_kb, "also expose the knowledge base under /kb");

  // worker
  auto* worker = app.add_subcommand("worker", "process queued jobs until interrupted");
  size_t worker_threads = 1;
  worker->add_option("--threads", worker_threads);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      extraction::PageSet pages = extraction::Ingest(ReadFile(ingest_file), extraction::ParseInputFormat(ingest_format));
      interface::Settings s = common.Load();
      const auto& seg = s.pipeline.segmentation;
      extraction::NoiseSet noise = extraction::DetectRecurringNoise(pages, seg.noise_bucket);
      json out;
      if (ingest_segments) {
        out = json::array();
        for (const auto& page : pages.pages) {
          json segs = json::array();
          for (const auto& sg : extraction::SegmentPage(page, noise, seg).segments) {
            segs.push_back({{"role", extraction::RoleName(sg.role)}, {"text", sg.text}});
          }
          out.push_back({{"page_no", page.page_no}, {"segments", segs}});
        }
      } else {
        extraction::MaterialText t = extraction::ExtractMaterialText(pages, noise, seg);
        out = {{"slide_texts", t.slide_texts}, {"material_text", t.material_text}};
      }
      std::cout << out.dump(2) << "\n";
    } else if (*build) {
      interface::Settings s = common.Load();
      interface::Runtime rt(s);
      extraction::PageSet pages = extraction::Ingest(ReadFile(build_file), extraction::InputFormat::kElementsJson);
      interface::PipelineServices services{rt.kb(), rt.embedder(), rt.linker(),
                                           build_persist ? &rt.store() : nullptr};
      auto result = interface::BuildMaterial({build_id, build_name.empty() ? build_id : build_name}, pages,
                                             services, s.pipeline);
      if (build_persist) rt.SaveTexts(build_id, result.text);
      WriteOutput(build_out, graph::Export(result.kg, graph::ParseExportFormat(build_format)));
    } else if (*expand) {
      interface::Settings s = common.Load();
      interface::Runtime rt(s);
      auto texts = rt.LoadTexts(expand_id);
      if (!texts) throw NotFound("no stored text for material " + expand_id);
      interface::PipelineServices services{rt.kb(), rt.embedder(), rt.linker(), &rt.store()};
      graph::EduKG kg = interface::ExpandMaterial(expand_id, texts->material_text, services, s.pipeline);
      WriteOutput(expand_out, graph::Export(kg, graph::ParseExportFormat(expand_format)));
    } else if (*exp) {
      interface::Settings s = common.Load();
      graph::GraphStore store(std::filesystem::path(s.data_dir) / "graphs");
      std::optional<graph::EduKG> kg =
          export_level == "slide" ? store.GetSlide(export_id, export_slide) : store.GetMaterial(export_id);
      if (!kg) throw NotFound("no " + export_level + " graph stored for " + export_id);
      WriteOutput(export_out, graph::Export(*kg, graph::ParseExportFormat(export_format)));
    } else if (*preprocess) {
      interface::Settings s = common.Load();
      auto embedder = embedding::MakeProvider(dump_embedder.empty() ? s.embedder : dump_embedder);
      std::ifstream in(dump_file, std::ios::binary);
      if (!in) throw NotFound("cannot read " + dump_file);
      kb::PreprocessOptions options;
      options.build_timestamp = dump_timestamp;
      std::cout << StatsJson(kb::PreprocessDump(in, *embedder, dump_out, options)).dump(2) << "\n";
    } else if (*srs) {
      evaluation::SimulationSummary r = evaluation::SimulateSrs(srs_p, srs_runs, srs_seed, srs_pool);
      json out = {{"p", srs_p},           {"runs", r.runs},         {"stopped", r.stopped},
                  {"covered", r.covered}, {"coverage", r.coverage}, {"mean_n", r.mean_n},
                  {"max_sigma_identity_error", r.max_sigma_identity_error}};
      std::cout << out.dump(2) << "\n";
    } else if (*textdiff) {
      evaluation::DiffMetrics m = evaluation::EvalExtractionDiff(ReadFile(diff_out), ReadFile(diff_gold));
      json out = {{"nl_plus", m.nl_plus}, {"nl_minus", m.nl_minus},         {"p_plus", m.p_plus},
                  {"p_minus", m.p_minus}, {"p_rearranged", m.p_rearranged}, {"w_plus", m.w_plus},
                  {"w_minus", m.w_minus}, {"w_misspelled", m.w_misspelled}};
      std::cout << out.dump(2) << "\n";
    } else if (*serve) {
      interface::Settings s = common.Load();
      interface::Runtime rt(s);
      interface::Service service(rt);
      httplib::Server server;
      service.Mount(server);
      if (serve_kb) kb::MountKnowledgeBaseRoutes(server, rt.kb());
      InstallSignals();
      std::vector<std::jthread> workers;
      for (size_t i = 0; i < s.workers; ++i) {
        workers.emplace_back([&rt](std::stop_token stop) {
          orchestration::Worker(rt.broker(), rt.Handlers()).Run(stop);
        });
      }
      std::jthread watcher([&server](std::stop_token stop) {
        while (!stop.stop_requested() && !g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
      });
      std::cerr << "listening on " << s.host << ":" << s.port << "\n";
      if (!server.listen(s.host, s.port)) throw ConfigError("cannot listen on " + s.host + ":" + std::to_string(s.port));
    } else if (*worker) {
      interface::Settings s = common.Load();
      interface::Runtime rt(s);
      InstallSignals();
      std::vector<std::jthread> threads;
      for (size_t i = 0; i < std::max<size_t>(1, worker_threads); ++i) {
        threads.emplace_back([&rt](std::stop_token stop) {
          orchestration::Worker(rt.broker(), rt.Handlers()).Run(stop);
        });
      }
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  } catch (const edukg::Error& e) {
    std::cerr << "edukg: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
