#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "botscope/common.hpp"
#include "botscope/event.hpp"
#include "botscope/stats.hpp"

namespace botscope {

/// Maps a document to a toxicity score in [0, 1]. Implementations must be
/// safe to call from several threads.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string id() const = 0;
  // Longest document accepted, in code points; 0 means unlimited.
  virtual std::size_t max_length() const { return 0; }
  virtual double score(std::string_view document) = 0;
  virtual std::vector<double> score_batch(std::span<const std::string> documents);
};

// Fraction of tokens found in the lexicon (case-folded). A document without
// tokens scores 0.
class LexiconScorer : public Scorer {
 public:
  explicit LexiconScorer(std::set<std::string> lexicon, std::size_t max_length = 0);
  static LexiconScorer from_file(const std::string& path, std::size_t max_length = 0);

  std::string id() const override { return "lexicon"; }
  std::size_t max_length() const override { return max_length_; }
  double score(std::string_view document) override;

 private:
  std::set<std::string, std::less<>> lexicon_;
  std::size_t max_length_;
};

struct HttpScorerOptions {
  std::string url;  // http://host:port/path
  std::string api_key_env = "BOTSCOPE_TOXICITY_KEY";
  double qps = 1.0;  // request ceiling; <= 0 disables throttling
  std::size_t batch_size = 10;
  std::size_t max_length = 20000;
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{30};
};

/// POSTs {"documents": [...]} and reads {"scores": [...]} in the same order.
class HttpScorer : public Scorer {
 public:
  explicit HttpScorer(HttpScorerOptions options);

  std::string id() const override { return "http:" + options_.url; }
  std::size_t max_length() const override { return options_.max_length; }
  double score(std::string_view document) override;
  std::vector<double> score_batch(std::span<const std::string> documents) override;

 private:
  void throttle();

  HttpScorerOptions options_;
  std::string api_key_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
};

/// Wraps a scorer with an on-disk cache of lines "sha256,scorer_id,score".
/// Lookups hit the cache first; new scores are appended as they arrive.
class CachingScorer : public Scorer {
 public:
  CachingScorer(Scorer& inner, std::string cache_path);

  std::string id() const override { return inner_.id(); }
  std::size_t max_length() const override { return inner_.max_length(); }
  double score(std::string_view document) override;
  std::vector<double> score_batch(std::span<const std::string> documents) override;
  std::size_t hits() const { return hits_; }

 private:
  std::optional<double> lookup(const std::string& hash);
  void store(const std::string& hash, double value);

  Scorer& inner_;
  std::string path_;
  std::mutex mutex_;
  std::unordered_map<std::string, double> cache_;
  std::size_t hits_ = 0;
};

struct ToxicityScore {
  std::string actor_id;
  std::string community;  // empty when texts from every community were pooled
  double score = 0.0;
  std::string scorer_id;
  std::size_t text_chars = 0;
};

// The actor's texts in time order joined by newlines; over-long documents are
// chunked on whitespace and the chunk scores averaged by length. Scorer
// TransportErrors are retried 3 times. Throws Error("no scorable text").
ToxicityScore score_user_toxicity(const EventLog& log, std::string_view actor_id, Scorer& scorer);

// Scores every (community, actor) with text, in parallel over `jobs`
// threads. Output sorted by (community, actor).
std::vector<ToxicityScore> score_all_users(const EventLog& log, Scorer& scorer, unsigned jobs = 1);

struct ToxicityGroup {
  std::string community;
  UserClass cls = UserClass::Unknown;
  std::vector<double> values;  // sorted ascending
  bool tested = false;         // false when fewer than 2 users
};

struct ToxicityReport {
  std::vector<ToxicityGroup> groups;  // known classes only, by (community, class)
  // matrix[i][j]: Welch t of group i against group j; absent on the diagonal,
  // for untested groups and for degenerate pairs.
  std::vector<std::vector<std::optional<stats::TestResult>>> matrix;
  std::vector<std::string> flags;
};

ToxicityReport toxicity_report(std::span<const ToxicityScore> scores, const ClassMap& classes);

// community,class,actor_id,score
std::string render_toxicity_values_csv(std::span<const ToxicityScore> scores, const ClassMap& classes);
// group_a,group_b,t,p,df,n1,n2 for every ordered pair of tested groups
std::string render_toxicity_matrix_csv(const ToxicityReport& report);

}  // namespace botscope
