#pragma once

#include <array>
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "botscope/common.hpp"
#include "botscope/graph.hpp"

namespace botscope {

enum class ScoreKind { Cap, Universal, Heuristic, Imported };

std::string_view to_string(ScoreKind k);
std::optional<ScoreKind> parse_score_kind(std::string_view s);

struct BotScore {
  double score = 0.0;  // [0, 1]
  ScoreKind kind = ScoreKind::Imported;
};

struct ActorProfile {
  std::string actor_id;
  std::optional<BotScore> bot_score;
  Agency agency = Agency::Unknown;
  Stance stance = Stance::Unknown;

  UserClass cls() const { return make_class(agency, stance); }
};

// BOT iff score > threshold; HUMAN otherwise; UNKNOWN without a score.
// Throws Error when the threshold is outside [0, 1].
void assign_agency(std::span<ActorProfile> profiles, double threshold = 0.7);

using StanceMap = std::map<std::string, Stance>;

struct StanceAssignment {
  StanceMap stances;  // every node of the partition
  // Partition community id -> faction for the two candidate communities.
  std::map<std::size_t, Stance> community_sides;
  std::vector<std::string> warnings;
};

/// The two largest communities are the candidate sides (equal sizes are
/// ordered by their lexicographically smallest member, so the result does not
/// depend on community numbering). Each takes the majority stance of the
/// seeds it contains; no seeds or a tie leave its members UNKNOWN with a
/// warning. Members of all other communities are UNKNOWN. Seeds must be
/// SIDE_A or SIDE_B; throws Error otherwise or when either input is empty.
StanceAssignment stance_from_partition(const Partition& partition, const StanceMap& seeds);

struct LabelLoad {
  StanceMap labels;
  std::vector<std::string> warnings;
};

// CSV actor_id,stance with an optional header row. Duplicates: last wins
// with a warning. Unknown stance token -> ParseError with the line number.
LabelLoad parse_stance_labels(std::string_view csv);
LabelLoad load_stance_labels(const std::string& path);

struct RedditBotFeatures {
  double account_age_days = 0.0;
  long long karma = 0;
  bool verified = false;
  bool employee = false;
  double post_interval_variance = 0.0;  // seconds^2
  double content_variance = 0.0;        // dissimilarity in [0, 1]
};

struct HeuristicConfig {
  double max_age_days = 180.0;
  double max_karma = 100.0;
  double max_interval_variance = 60.0;
  double max_content_variance = 0.1;
  // age, karma, unverified, employee, interval variance, content variance
  std::array<double, 6> weights{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
};

// Weighted sum of six binary flags. The employee flag is set for employees,
// and an employee always scores 0, so its weight never contributes. Throws
// Error when weights are negative, do not sum to 1, or a feature is not finite.
double reddit_bot_heuristic(const RedditBotFeatures& features, const HeuristicConfig& config = {});

// CSV with header actor_id,account_age_days,karma,verified,employee,
// post_interval_variance,content_variance (booleans as true/false or 1/0).
std::map<std::string, RedditBotFeatures> parse_reddit_features(std::string_view csv);

struct Classification {
  ClassMap classes;
  std::array<std::size_t, 5> counts{};  // indexed like kAllClasses
  std::size_t total = 0;
  std::vector<std::string> warnings;

  std::size_t count(UserClass c) const;
  double share(UserClass c) const;  // 0 when there are no actors
};

Classification classify_actors(std::span<const ActorProfile> profiles);

struct Kappa {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e
  std::string band;
  std::string note;
};

std::string_view agreement_band(double kappa);

// Throws Error on length mismatch or empty input.
Kappa cohen_kappa(std::span<const std::string> a, std::span<const std::string> b);

/// Source of bot scores for a batch of actors. Actors the provider knows
/// nothing about are absent from the result.
class BotScoreProvider {
 public:
  virtual ~BotScoreProvider() = default;
  virtual std::map<std::string, BotScore> fetch(std::span<const std::string> actors) = 0;
};

// CSV actor_id,score[,score_kind] with optional header; missing kind means
// IMPORTED. Scores outside [0, 1] or unparsable rows are ParseErrors.
class FileBotScoreProvider : public BotScoreProvider {
 public:
  static FileBotScoreProvider from_csv(std::string_view csv);
  static FileBotScoreProvider from_file(const std::string& path);

  std::map<std::string, BotScore> fetch(std::span<const std::string> actors) override;
  const std::map<std::string, BotScore>& all() const { return scores_; }

 private:
  std::map<std::string, BotScore> scores_;
};

class StubBotScoreProvider : public BotScoreProvider {
 public:
  explicit StubBotScoreProvider(std::map<std::string, BotScore> scores) : scores_(std::move(scores)) {}
  std::map<std::string, BotScore> fetch(std::span<const std::string> actors) override;

 private:
  std::map<std::string, BotScore> scores_;
};

struct HttpProviderOptions {
  std::string url;  // http://host:port/path
  std::size_t batch_size = 100;
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{10};
};

/// POSTs {"actors": [...]} per batch and reads
/// {"scores": [{"actor_id", "score", "score_kind"}]}. Connection failures and
/// 5xx/429 responses are retried with doubling backoff; other failures and
/// exhausted retries throw TransportError.
class HttpBotScoreProvider : public BotScoreProvider {
 public:
  explicit HttpBotScoreProvider(HttpProviderOptions options);
  std::map<std::string, BotScore> fetch(std::span<const std::string> actors) override;

 private:
  HttpProviderOptions options_;
};

}  // namespace botscope
