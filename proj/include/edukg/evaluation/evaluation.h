#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "edukg/graph/graph.h"

namespace edukg::evaluation {

constexpr double kDefaultZ = 1.96;
constexpr double kDefaultMoeThreshold = 0.05;
constexpr size_t kDefaultMinSamples = 30;

struct SrsStats {
  size_t n = 0;
  size_t correct = 0;
  double mu = 0;
  double sigma = 0;
  double moe = 0;
  bool stopped = false;
};

// mu = correct/n, sigma = sqrt(mu(1-mu)/n), moe = z*sigma; stops once
// n >= min_samples and moe <= moe_threshold.
SrsStats ComputeSrsStats(size_t n, size_t correct, double z = kDefaultZ,
                         double moe_threshold = kDefaultMoeThreshold, size_t min_samples = kDefaultMinSamples);

// "0.47 ± 0.049": mean to two places, sigma to three, trailing zeros dropped.
std::string FormatAccuracy(double mu, double sigma);

enum class Verdict { kIncorrect, kCorrect };
enum class JudgmentTask { kEntity, kRelation };

std::string_view VerdictName(Verdict v);
Verdict ParseVerdict(std::string_view s);
std::string_view JudgmentTaskName(JudgmentTask t);
JudgmentTask ParseJudgmentTask(std::string_view s);

struct Judgment {
  graph::Triple triple;
  Verdict verdict = Verdict::kIncorrect;
  JudgmentTask task = JudgmentTask::kRelation;
};

struct SrsConfig {
  uint64_t seed = 1;
  size_t batch_size = kDefaultMinSamples;
  double z = kDefaultZ;
  double moe_threshold = kDefaultMoeThreshold;
  size_t min_samples = kDefaultMinSamples;
  std::string annotator_id;
};

// One annotator's sampling session over a graph. Triples are drawn without
// replacement in batches; a new batch is drawn when every sampled triple has
// been judged and the stopping rule has not fired.
class SrsSession {
 public:
  SrsSession(std::string session_id, const graph::EduKG& kg, SrsConfig config = {});

  // Next sampled, unjudged triple; nullopt when the graph is exhausted.
  // ConflictError once stopped.
  std::optional<graph::Triple> Next();
  // ContractViolation for a triple that was not sampled or is already judged;
  // ConflictError once stopped.
  SrsStats Judge(const graph::Triple& triple, Verdict verdict, JudgmentTask task = JudgmentTask::kRelation);

  const SrsStats& stats() const { return stats_; }
  const std::string& session_id() const { return session_id_; }
  const SrsConfig& config() const { return config_; }
  const std::vector<graph::Triple>& sampled() const { return sampled_; }
  const std::vector<Judgment>& judgments() const { return judgments_; }
  size_t pool_size() const { return order_.size(); }

  // Appends one JSON line per event (creation, then each judgment) to `path`.
  void AttachLog(const std::filesystem::path& path);
  // Rebuilds a session from its event log against the same graph.
  static std::unique_ptr<SrsSession> Resume(const graph::EduKG& kg, const std::filesystem::path& path);

 private:
  void DrawBatch();

  std::string session_id_;
  SrsConfig config_;
  std::vector<graph::Triple> order_;  // seeded permutation of every triple
  size_t drawn_ = 0;
  std::vector<graph::Triple> sampled_;
  std::set<graph::Triple> judged_;
  std::vector<Judgment> judgments_;
  SrsStats stats_;
  std::unique_ptr<std::ofstream> log_;
};

// Graph with one material, `edges` slides and one CONTAINS edge per slide;
// a neutral pool for simulated sessions.
graph::EduKG SyntheticGraph(size_t edges);

struct SimulationSummary {
  size_t runs = 0;
  size_t stopped = 0;
  size_t covered = 0;  // stopped with |mu - p| <= moe_threshold
  double coverage = 0;
  double mean_n = 0;
  // Largest |sigma^2 * n - mu(1 - mu)| over every judgment of every run.
  double max_sigma_identity_error = 0;
};

// Runs sessions whose annotator answers correct with probability p.
SimulationSummary SimulateSrs(double p, size_t runs, uint64_t seed, size_t pool_size = 2000,
                              const SrsConfig& base = {});

struct DiffMetrics {
  size_t nl_plus = 0;
  size_t nl_minus = 0;
  size_t p_plus = 0;
  size_t p_minus = 0;
  size_t p_rearranged = 0;
  size_t w_plus = 0;
  size_t w_minus = 0;
  size_t w_misspelled = 0;

  bool operator==(const DiffMetrics&) const = default;
};

// Paragraphs are separated by blank lines, sentences by single newlines.
// Paragraphs match when their shared tokens cover at least 80% of the longer
// one; matched pairs outside the longest in-order alignment count as
// rearranged. Word and newline differences are counted in matched pairs only.
DiffMetrics EvalExtractionDiff(std::string_view output, std::string_view gold);

constexpr double kParagraphMatchOverlap = 0.8;
constexpr size_t kMisspellingDistance = 2;

size_t EditDistance(std::string_view a, std::string_view b);

struct KeyphraseScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Scores the top-k predictions; phrases are compared after normalisation.
KeyphraseScores EvalKeyphrases(const std::vector<std::string>& predicted, const std::set<std::string>& gold,
                               size_t k);

}  // namespace edukg::evaluation
