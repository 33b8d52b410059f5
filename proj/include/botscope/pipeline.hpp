#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "botscope/cascade.hpp"
#include "botscope/classify.hpp"
#include "botscope/coordination.hpp"
#include "botscope/engagement.hpp"
#include "botscope/event.hpp"
#include "botscope/graph.hpp"
#include "botscope/stats.hpp"
#include "botscope/toxicity.hpp"

namespace botscope {

struct InputSpec {
  std::string path;
  Adapter adapter = Adapter::Canonical;
  std::string community;  // overrides the record's own tag when set
};

enum class ScorerChoice { Stub, Http, None };

/// Relative paths in the JSON are resolved against the config file's
/// directory. Every analysis parameter has a default.
struct PipelineConfig {
  std::vector<InputSpec> inputs;
  std::string query;
  std::string bot_scores_file;
  std::string bot_scores_url;
  std::string reddit_features;
  std::string seeds_file;
  std::string labels_file;
  double threshold = 0.7;
  std::size_t k_core = 3;
  std::uint64_t louvain_seed = 1;
  std::vector<std::int64_t> x_windows{15, 25, 35, 45, 55};
  std::vector<std::int64_t> reddit_windows{120, 240, 360, 480, 600};
  std::uint64_t min_weight = 1;
  bool dedup_per_object = false;
  std::size_t maxlag = 5;
  double alpha = 0.05;
  stats::SeriesMetric series_metric = stats::SeriesMetric::CascadeSize;
  bool difference = false;
  ScorerChoice scorer = ScorerChoice::Stub;
  std::string lexicon;  // empty = built-in word list
  std::string scorer_url;
  std::string scorer_cache;
  std::string scorer_key_env = "BOTSCOPE_TOXICITY_KEY";
  double scorer_qps = 1.0;
  std::string output_dir = "report";
  unsigned jobs = 1;

  static PipelineConfig from_json(std::string_view json, const std::string& base_dir = ".");
  static PipelineConfig load(const std::string& path);
  // Analysis-relevant settings only (no output directory or job count);
  // hashed into the manifest.
  std::string canonical_json() const;
  // Throws Error on invalid windows, threshold or missing event inputs.
  void validate() const;
};

class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageRecord {
  std::string name;
  std::string status;  // completed, skipped, failed
  std::string reason;
  std::map<std::string, double> counts;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

struct PlatformResults {
  Platform platform = Platform::X;
  InteractionGraph graph;
  InteractionGraph core;
  std::optional<Partition> partition;
  CascadeSet cascades;
  DistributionReport distributions;
  WindowSweep sweep;
  EngagementReport engagement;
};

struct SeriesResults {
  std::vector<stats::DailySeries> series;  // per community, all classes
  std::vector<stats::GrangerResult> granger;
  std::vector<std::tuple<std::string, std::string, double>> correlations;
};

struct PipelineResult {
  EventLog log;
  std::vector<ActorProfile> profiles;
  StanceMap stances;
  Classification classification;
  std::vector<PlatformResults> platforms;
  SeriesResults series;
  std::vector<ToxicityScore> toxicity_scores;
  std::optional<ToxicityReport> toxicity;
  std::vector<StageRecord> stages;
  std::string manifest;  // contents of manifest.json
};

// Runs every stage, writing the bundle to config.output_dir. Throws
// PipelineError naming the stage after writing a partial manifest.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace botscope
