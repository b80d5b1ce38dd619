#include <algorithm>
#include <cmath>
#include <cstdio>

#include "edukg/common/error.h"
#include "edukg/evaluation/evaluation.h"
#include "json.hpp"

namespace edukg::evaluation {

using json = nlohmann::ordered_json;

SrsStats ComputeSrsStats(size_t n, size_t correct, double z, double moe_threshold, size_t min_samples) {
  if (correct > n) throw ContractViolation("more correct verdicts than judgments");
  SrsStats s;
  s.n = n;
  s.correct = correct;
  if (n == 0) return s;
  s.mu = static_cast<double>(correct) / static_cast<double>(n);
  s.sigma = std::sqrt(s.mu * (1.0 - s.mu) / static_cast<double>(n));
  s.moe = z * s.sigma;
  s.stopped = n >= min_samples && s.moe <= moe_threshold;
  return s;
}

namespace {

std::string Trimmed(double v, int places) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s == "-0" ? "0" : s;
}

}  // namespace

std::string FormatAccuracy(double mu, double sigma) {
  return Trimmed(mu, 2) + " ± " + Trimmed(sigma, 3);
}

std::string_view VerdictName(Verdict v) { return v == Verdict::kCorrect ? "correct" : "incorrect"; }

Verdict ParseVerdict(std::string_view s) {
  if (s == "correct") return Verdict::kCorrect;
  if (s == "incorrect") return Verdict::kIncorrect;
  throw ValidationError("verdict must be correct or incorrect: " + std::string(s));
}

std::string_view JudgmentTaskName(JudgmentTask t) { return t == JudgmentTask::kEntity ? "entity" : "relation"; }

JudgmentTask ParseJudgmentTask(std::string_view s) {
  if (s == "entity") return JudgmentTask::kEntity;
  if (s == "relation") return JudgmentTask::kRelation;
  throw ValidationError("task must be entity or relation: " + std::string(s));
}

SrsSession::SrsSession(std::string session_id, const graph::EduKG& kg, SrsConfig config)
    : session_id_(std::move(session_id)), config_(std::move(config)) {
  if (config_.batch_size == 0) throw ConfigError("batch size must be positive");
  order_ = graph::AllTriples(kg);
  if (order_.empty()) throw EmptyGraph("graph has no triples to evaluate");
  std::mt19937_64 rng(config_.seed);
  for (size_t i = 0; i + 1 < order_.size(); ++i) {
    std::swap(order_[i], order_[i + graph::UniformIndex(rng, order_.size() - i)]);
  }
  DrawBatch();
}

void SrsSession::DrawBatch() {
  size_t stop = std::min(order_.size(), drawn_ + config_.batch_size);
  for (; drawn_ < stop; ++drawn_) sampled_.push_back(order_[drawn_]);
}

std::optional<graph::Triple> SrsSession::Next() {
  if (stats_.stopped) throw ConflictError("session " + session_id_ + " has stopped");
  for (const auto& t : sampled_) {
    if (!judged_.contains(t)) return t;
  }
  if (drawn_ < order_.size()) {
    DrawBatch();
    return Next();
  }
  return std::nullopt;
}

SrsStats SrsSession::Judge(const graph::Triple& triple, Verdict verdict, JudgmentTask task) {
  if (stats_.stopped) throw ConflictError("session " + session_id_ + " has stopped");
  if (std::find(sampled_.begin(), sampled_.end(), triple) == sampled_.end()) {
    throw ContractViolation("triple was not sampled in session " + session_id_);
  }
  if (!judged_.insert(triple).second) throw ContractViolation("triple already judged in session " + session_id_);
  judgments_.push_back({triple, verdict, task});
  stats_ = ComputeSrsStats(judgments_.size(), stats_.correct + (verdict == Verdict::kCorrect), config_.z,
                           config_.moe_threshold, config_.min_samples);
  if (log_) {
    json e;
    e["event"] = "judge";
    e["subject"] = triple.subject;
    e["predicate"] = graph::EdgeTypeName(triple.predicate);
    e["object"] = triple.object;
    e["verdict"] = VerdictName(verdict);
    e["task"] = JudgmentTaskName(task);
    *log_ << e.dump() << "\n";
    log_->flush();
  }
  if (!stats_.stopped && judged_.size() == sampled_.size()) DrawBatch();
  return stats_;
}

void SrsSession::AttachLog(const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  log_ = std::make_unique<std::ofstream>(path, std::ios::app);
  if (!*log_) throw DataError("cannot open session log " + path.string());
  if (!fresh) return;
  json e;
  e["event"] = "create";
  e["session_id"] = session_id_;
  e["seed"] = config_.seed;
  e["batch_size"] = config_.batch_size;
  e["z"] = config_.z;
  e["moe_threshold"] = config_.moe_threshold;
  e["min_samples"] = config_.min_samples;
  e["annotator_id"] = config_.annotator_id;
  *log_ << e.dump() << "\n";
  log_->flush();
}

std::unique_ptr<SrsSession> SrsSession::Resume(const graph::EduKG& kg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("no session log at " + path.string());
  std::unique_ptr<SrsSession> session;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json e;
    try {
      e = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("bad session log line: ") + ex.what(), line_no);
    }
    const std::string event = e.value("event", "");
    if (event == "create") {
      SrsConfig c;
      c.seed = e.at("seed").get<uint64_t>();
      c.batch_size = e.at("batch_size").get<size_t>();
      c.z = e.at("z").get<double>();
      c.moe_threshold = e.at("moe_threshold").get<double>();
      c.min_samples = e.at("min_samples").get<size_t>();
      c.annotator_id = e.at("annotator_id").get<std::string>();
      session = std::make_unique<SrsSession>(e.at("session_id").get<std::string>(), kg, c);
    } else if (event == "judge") {
      if (!session) throw ParseError("judgment before session creation", line_no);
      graph::Triple wanted{e.at("subject").get<std::string>(),
                           graph::ParseEdgeType(e.at("predicate").get<std::string>()),
                           e.at("object").get<std::string>()};
      std::optional<graph::Triple> match;
      for (const auto& t : session->sampled_) {
        if (t.subject == wanted.subject && t.predicate == wanted.predicate && t.object == wanted.object) match = t;
      }
      if (!match) throw DataError("session log does not fit the graph at line " + std::to_string(line_no));
      session->Judge(*match, ParseVerdict(e.at("verdict").get<std::string>()),
                     ParseJudgmentTask(e.at("task").get<std::string>()));
    } else {
      throw ParseError("unknown session event '" + event + "'", line_no);
    }
  }
  if (!session) throw ParseError("session log has no creation event", 0);
  session->AttachLog(path);
  return session;
}

graph::EduKG SyntheticGraph(size_t edges) {
  graph::EduKG kg;
  graph::Node lm;
  lm.type = graph::NodeType::kLearningMaterial;
  lm.id = graph::MaterialNodeId("synthetic");
  lm.label = "synthetic";
  lm.material_id = "synthetic";
  kg.AddNode(lm);
  for (size_t i = 1; i <= edges; ++i) {
    graph::Node slide;
    slide.type = graph::NodeType::kSlide;
    slide.id = graph::SlideNodeId("synthetic", static_cast<int>(i));
    slide.material_id = "synthetic";
    slide.slide_no = static_cast<int>(i);
    kg.AddNode(slide);
    kg.AddEdge({graph::EdgeType::kContains, lm.id, slide.id, 1.0});
  }
  return kg;
}

SimulationSummary SimulateSrs(double p, size_t runs, uint64_t seed, size_t pool_size, const SrsConfig& base) {
  if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("p must be in [0, 1]");
  const graph::EduKG kg = SyntheticGraph(pool_size);
  std::mt19937_64 master(seed);
  SimulationSummary s;
  s.runs = runs;
  double total_n = 0;
  for (size_t r = 0; r < runs; ++r) {
    SrsConfig c = base;
    c.seed = master();
    std::mt19937_64 annotator(master());
    SrsSession session("sim-" + std::to_string(r), kg, c);
    while (!session.stats().stopped) {
      std::optional<graph::Triple> t = session.Next();
      if (!t) break;
      // 53 random bits as a uniform double in [0, 1).
      const double u = static_cast<double>(annotator() >> 11) * 0x1.0p-53;
      const SrsStats st = session.Judge(*t, u < p ? Verdict::kCorrect : Verdict::kIncorrect);
      const double err = std::abs(st.sigma * st.sigma * static_cast<double>(st.n) - st.mu * (1.0 - st.mu));
      s.max_sigma_identity_error = std::max(s.max_sigma_identity_error, err);
    }
    const SrsStats& st = session.stats();
    total_n += static_cast<double>(st.n);
    if (st.stopped) {
      ++s.stopped;
      if (std::abs(st.mu - p) <= c.moe_threshold) ++s.covered;
    }
  }
  if (runs > 0) {
    s.coverage = static_cast<double>(s.covered) / static_cast<double>(runs);
    s.mean_n = total_n / static_cast<double>(runs);
  }
  return s;
}

}  // namespace edukg::evaluation
