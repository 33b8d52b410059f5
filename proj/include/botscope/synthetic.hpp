#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "botscope/classify.hpp"
#include "botscope/common.hpp"
#include "botscope/event.hpp"

namespace botscope {

struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::int64_t start = 1645660800;  // 2022-02-24T00:00:00Z
  int n_days = 60;
  // Actors per class, in kKnownClasses order (A_BOT, A_HUMAN, B_BOT, B_HUMAN).
  std::array<int, 4> actors{60, 40, 30, 20};
  double rate = 3.0;                // events per actor per day before day factors
  double post_share = 0.2;
  double reply_share = 0.1;         // the rest are retweets
  double bridge_probability = 0.02;  // interaction aimed at the other side
  struct {
    int members = 6;                // A_BOT accounts in the cause community
    std::int64_t jitter_seconds = 5;
  } coordination;
  struct {
    std::string cause = "en";
    std::string effect = "ja";
    int lag_days = 1;
    double coefficient = 0.8;
  } lead_lag;
  std::array<double, 4> toxicity{0.30, 0.10, 0.22, 0.04};  // mean toxic-token share per class
  int text_tokens = 12;             // 0 produces events without text
  int seeds_per_side = 5;

  // Fields absent from the JSON keep their defaults. Throws Error on a value
  // that breaks an invariant.
  static SyntheticSpec from_json(std::string_view json);
  std::string to_json() const;
  void validate() const;
};

struct SyntheticLog {
  EventLog log;
  ClassMap truth;
  std::map<std::string, std::string> community;  // actor -> community
  std::vector<std::pair<std::string, std::string>> planted_pairs;  // a < b
  std::vector<double> cause_factor;   // per day
  std::vector<double> effect_factor;  // per day
  std::map<std::string, BotScore> bot_scores;
  StanceMap seeds;
};

// Deterministic for a fixed spec. Throws Error when the spec has no actors.
SyntheticLog generate_synthetic_log(const SyntheticSpec& spec);

// Words the generator draws toxic tokens from; the default lexicon for the
// stub scorer.
const std::vector<std::string>& synthetic_lexicon();

// events.jsonl, truth.csv, planted_pairs.csv, planted_series.csv,
// bot_scores.csv, seeds.csv, lexicon.txt and spec.json under `dir`.
void write_synthetic_bundle(const SyntheticSpec& spec, const SyntheticLog& data, const std::string& dir);

}  // namespace botscope
