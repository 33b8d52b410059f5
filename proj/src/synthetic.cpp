#include "botscope/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "botscope/stats.hpp"

namespace botscope {
namespace {

const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> words{
      "news", "today", "city", "people", "report", "update", "support", "peace", "talks", "border",
      "video", "photo", "morning", "statement", "minister", "aid", "train", "road", "weather", "market"};
  return words;
}

struct Actor {
  std::string id;
  UserClass cls;
  Stance side;
  std::string community;
  bool cause = false;
};

std::string actor_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%04zu", i);
  return buf;
}

std::string event_name(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "e%09zu", i);
  return buf;
}

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

const std::vector<std::string>& synthetic_lexicon() {
  static const std::vector<std::string> words{"idiot", "stupid", "liar", "traitor", "scum", "moron", "pathetic", "disgusting"};
  return words;
}

SyntheticSpec SyntheticSpec::from_json(std::string_view json) {
  SyntheticSpec s;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("synthetic spec: ") + e.what());
  }
  try {
    read_optional(j, "seed", s.seed);
    read_optional(j, "start", s.start);
    read_optional(j, "n_days", s.n_days);
    read_optional(j, "rate", s.rate);
    read_optional(j, "post_share", s.post_share);
    read_optional(j, "reply_share", s.reply_share);
    read_optional(j, "bridge_probability", s.bridge_probability);
    read_optional(j, "text_tokens", s.text_tokens);
    read_optional(j, "seeds_per_side", s.seeds_per_side);
    if (j.contains("actors")) {
      for (std::size_t i = 0; i < 4; ++i) read_optional(j["actors"], std::string(to_string(kKnownClasses[i])).c_str(), s.actors[i]);
    }
    if (j.contains("toxicity")) {
      for (std::size_t i = 0; i < 4; ++i) read_optional(j["toxicity"], std::string(to_string(kKnownClasses[i])).c_str(), s.toxicity[i]);
    }
    if (j.contains("coordination")) {
      read_optional(j["coordination"], "members", s.coordination.members);
      read_optional(j["coordination"], "jitter_seconds", s.coordination.jitter_seconds);
    }
    if (j.contains("lead_lag")) {
      read_optional(j["lead_lag"], "cause", s.lead_lag.cause);
      read_optional(j["lead_lag"], "effect", s.lead_lag.effect);
      read_optional(j["lead_lag"], "lag_days", s.lead_lag.lag_days);
      read_optional(j["lead_lag"], "coefficient", s.lead_lag.coefficient);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string SyntheticSpec::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["start"] = start;
  j["n_days"] = n_days;
  for (std::size_t i = 0; i < 4; ++i) j["actors"][std::string(to_string(kKnownClasses[i]))] = actors[i];
  j["rate"] = rate;
  j["post_share"] = post_share;
  j["reply_share"] = reply_share;
  j["bridge_probability"] = bridge_probability;
  j["coordination"] = {{"members", coordination.members}, {"jitter_seconds", coordination.jitter_seconds}};
  j["lead_lag"] = {{"cause", lead_lag.cause},
                   {"effect", lead_lag.effect},
                   {"lag_days", lead_lag.lag_days},
                   {"coefficient", lead_lag.coefficient}};
  for (std::size_t i = 0; i < 4; ++i) j["toxicity"][std::string(to_string(kKnownClasses[i]))] = toxicity[i];
  j["text_tokens"] = text_tokens;
  j["seeds_per_side"] = seeds_per_side;
  return j.dump(2) + "\n";
}

void SyntheticSpec::validate() const {
  int total = 0;
  for (int n : actors) {
    if (n < 0) throw Error("synthetic spec: negative actor count");
    total += n;
  }
  if (total == 0) throw Error("synthetic spec: zero actors");
  if (n_days < 1) throw Error("synthetic spec: n_days must be >= 1");
  if (!(rate >= 0.0)) throw Error("synthetic spec: rate must be >= 0");
  if (!(post_share >= 0.0 && reply_share >= 0.0 && post_share + reply_share <= 1.0)) {
    throw Error("synthetic spec: post_share and reply_share must be >= 0 with sum <= 1");
  }
  if (!(bridge_probability >= 0.0 && bridge_probability <= 1.0)) throw Error("synthetic spec: bridge_probability outside [0, 1]");
  if (coordination.members < 0 || coordination.jitter_seconds < 0) {
    throw Error("synthetic spec: coordination members and jitter must be >= 0");
  }
  if (lead_lag.lag_days < 1) throw Error("synthetic spec: lag_days must be >= 1");
  if (!(lead_lag.coefficient >= 0.0 && lead_lag.coefficient <= 1.0)) {
    throw Error("synthetic spec: coefficient outside [0, 1]");
  }
  if (lead_lag.cause.empty() || lead_lag.effect.empty() || lead_lag.cause == lead_lag.effect) {
    throw Error("synthetic spec: cause and effect communities must be distinct and non-empty");
  }
  for (double t : toxicity) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error("synthetic spec: toxicity mean outside [0, 1]");
  }
  if (text_tokens < 0 || seeds_per_side < 0) throw Error("synthetic spec: negative text_tokens or seeds_per_side");
  // Even-indexed actors live in the cause community.
  if (coordination.members > (actors[0] + 1) / 2) {
    throw Error("synthetic spec: more coordination members than A_BOT accounts in the cause community");
  }
}

SyntheticLog generate_synthetic_log(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> factor(0.3, 1.7);
  constexpr std::int64_t kDay = 86400;

  SyntheticLog out;
  std::vector<Actor> actors;
  std::array<std::vector<std::size_t>, 2> side_pool;
  std::vector<std::size_t> members;
  for (std::size_t c = 0; c < 4; ++c) {
    for (int i = 0; i < spec.actors[c]; ++i) {
      const std::size_t index = actors.size();
      Actor a;
      a.id = actor_name(index);
      a.cls = kKnownClasses[c];
      a.side = stance_of(a.cls);
      a.cause = (i % 2) == 0;
      a.community = a.cause ? spec.lead_lag.cause : spec.lead_lag.effect;
      if (a.cls == UserClass::ABot && a.cause && static_cast<int>(members.size()) < spec.coordination.members) {
        members.push_back(index);
      }
      side_pool[a.side == Stance::SideA ? 0 : 1].push_back(index);
      out.truth[a.id] = a.cls;
      out.community[a.id] = a.community;
      actors.push_back(std::move(a));
    }
  }

  out.cause_factor.resize(static_cast<std::size_t>(spec.n_days));
  out.effect_factor.resize(out.cause_factor.size());
  std::vector<double> noise(out.cause_factor.size());
  for (std::size_t d = 0; d < out.cause_factor.size(); ++d) {
    out.cause_factor[d] = factor(rng);
    noise[d] = factor(rng);
  }
  const double coef = spec.lead_lag.coefficient;
  const std::size_t lag = static_cast<std::size_t>(spec.lead_lag.lag_days);
  for (std::size_t d = 0; d < out.effect_factor.size(); ++d) {
    const double driver = d >= lag ? out.cause_factor[d - lag] : factor(rng);
    out.effect_factor[d] = coef * driver + (1.0 - coef) * noise[d];
  }

  auto make_text = [&](UserClass cls) -> std::optional<std::string> {
    if (spec.text_tokens == 0) return std::nullopt;
    const double p = spec.toxicity[static_cast<std::size_t>(std::find(std::begin(kKnownClasses), std::end(kKnownClasses), cls) -
                                                            std::begin(kKnownClasses))];
    std::string text;
    for (int t = 0; t < spec.text_tokens; ++t) {
      const auto& pool = unit(rng) < p ? synthetic_lexicon() : neutral_words();
      if (!text.empty()) text += ' ';
      text += pool[static_cast<std::size_t>(unit(rng) * static_cast<double>(pool.size())) % pool.size()];
    }
    return text;
  };
  auto pick_target = [&](std::size_t self, bool bridge) -> std::optional<std::size_t> {
    const int own = actors[self].side == Stance::SideA ? 0 : 1;
    const auto& pool = side_pool[bridge ? 1 - own : own];
    if (pool.empty() || (pool.size() == 1 && pool[0] == self)) return std::nullopt;
    for (;;) {
      const std::size_t t = pool[static_cast<std::size_t>(unit(rng) * static_cast<double>(pool.size())) % pool.size()];
      if (t != self) return t;
    }
  };

  std::vector<Event> events;
  auto emit = [&](std::size_t actor, EventKind kind, std::optional<std::size_t> target, std::int64_t ts, std::size_t day) {
    Event e;
    e.platform = Platform::X;
    e.kind = kind;
    e.actor_id = actors[actor].id;
    if (target) e.target_actor_id = actors[*target].id;
    e.object_id = "u:" + (target ? actors[*target].id : actors[actor].id) + ":" + std::to_string(day);
    e.timestamp = ts;
    e.community = actors[actor].community;
    e.text = make_text(actors[actor].cls);
    events.push_back(std::move(e));
  };

  if (spec.rate > 0.0) {
    // Each actor first retweets three distinct same-side accounts so that
    // nobody is missing from the retweet network or its 3-core.
    for (std::size_t a = 0; a < actors.size(); ++a) {
      const auto& pool = side_pool[actors[a].side == Stance::SideA ? 0 : 1];
      if (pool.size() < 4) continue;
      std::vector<std::size_t> chosen;
      while (chosen.size() < 3) {
        auto t = pick_target(a, false);
        if (std::find(chosen.begin(), chosen.end(), *t) == chosen.end()) chosen.push_back(*t);
      }
      for (std::size_t t : chosen) {
        emit(a, EventKind::Retweet, t, spec.start + static_cast<std::int64_t>(unit(rng) * kDay), 0);
      }
    }
  }
  for (std::size_t d = 0; d < static_cast<std::size_t>(spec.n_days); ++d) {
    for (std::size_t a = 0; a < actors.size(); ++a) {
      const double mean = spec.rate * (actors[a].cause ? out.cause_factor[d] : out.effect_factor[d]);
      if (mean <= 0.0) continue;
      std::poisson_distribution<int> count(mean);
      const int n = count(rng);
      for (int k = 0; k < n; ++k) {
        const std::int64_t ts = spec.start + static_cast<std::int64_t>(d) * kDay +
                                std::min<std::int64_t>(kDay - 1, static_cast<std::int64_t>(unit(rng) * kDay));
        const double u = unit(rng);
        if (u < spec.post_share) {
          emit(a, EventKind::Post, std::nullopt, ts, d);
          continue;
        }
        const EventKind kind = u < spec.post_share + spec.reply_share ? EventKind::Reply : EventKind::Retweet;
        const auto target = pick_target(a, unit(rng) < spec.bridge_probability);
        if (!target) {
          emit(a, EventKind::Post, std::nullopt, ts, d);
        } else {
          emit(a, kind, target, ts, d);
        }
      }
    }
  }

  if (members.size() >= 2) {
    const std::string& leader = actors[members[0]].id;
    const std::size_t base = events.size();
    for (std::size_t i = 0; i < base; ++i) {
      if (events[i].actor_id != leader || events[i].kind != EventKind::Retweet) continue;
      const std::int64_t day_end = spec.start + ((events[i].timestamp - spec.start) / kDay + 1) * kDay - 1;
      for (std::size_t m = 1; m < members.size(); ++m) {
        if (*events[i].target_actor_id == actors[members[m]].id) continue;
        const std::int64_t offset =
            static_cast<std::int64_t>(unit(rng) * static_cast<double>(spec.coordination.jitter_seconds + 1));
        Event clone = events[i];
        clone.actor_id = actors[members[m]].id;
        clone.community = actors[members[m]].community;
        clone.timestamp = std::min(day_end, events[i].timestamp + std::min(offset, spec.coordination.jitter_seconds));
        clone.text = make_text(actors[members[m]].cls);
        events.push_back(std::move(clone));
      }
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        out.planted_pairs.emplace_back(std::minmax(actors[members[i]].id, actors[members[j]].id));
      }
    }
    std::sort(out.planted_pairs.begin(), out.planted_pairs.end());
  }

  for (std::size_t i = 0; i < events.size(); ++i) events[i].event_id = event_name(i);
  out.log = normalize_log(std::move(events));

  for (const Actor& a : actors) {
    BotScore s;
    s.score = is_bot(a.cls) ? 0.75 + 0.25 * unit(rng) : 0.65 * unit(rng);
    s.kind = a.cause ? ScoreKind::Cap : ScoreKind::Universal;
    out.bot_scores[a.id] = s;
  }
  for (std::size_t side = 0; side < 2; ++side) {
    const auto& pool = side_pool[side];
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(spec.seeds_per_side), pool.size());
    for (std::size_t k = 0; k < want; ++k) {
      const std::size_t idx = pool[k * pool.size() / want];
      out.seeds[actors[idx].id] = actors[idx].side;
    }
  }
  return out;
}

void write_synthetic_bundle(const SyntheticSpec& spec, const SyntheticLog& data, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path root(dir);

  std::ostringstream events;
  write_events_jsonl(events, data.log);
  write_file((root / "events.jsonl").string(), events.str());

  std::string truth = "actor_id,class,community\n";
  for (const auto& [actor, cls] : data.truth) {
    truth += csv_field(actor) + ',' + std::string(to_string(cls)) + ',' + csv_field(data.community.at(actor)) + '\n';
  }
  write_file((root / "truth.csv").string(), truth);

  std::string pairs = "actor_a,actor_b\n";
  for (const auto& [a, b] : data.planted_pairs) pairs += csv_field(a) + ',' + csv_field(b) + '\n';
  write_file((root / "planted_pairs.csv").string(), pairs);

  std::vector<std::size_t> cause_events(data.cause_factor.size(), 0), effect_events(data.cause_factor.size(), 0);
  for (const Event& e : data.log) {
    const std::int64_t d = (e.timestamp - spec.start) / 86400;
    if (d < 0 || d >= static_cast<std::int64_t>(cause_events.size())) continue;
    if (e.community == spec.lead_lag.cause) ++cause_events[static_cast<std::size_t>(d)];
    if (e.community == spec.lead_lag.effect) ++effect_events[static_cast<std::size_t>(d)];
  }
  std::string series = "day,date,cause_factor,effect_factor,cause_events,effect_events\n";
  for (std::size_t d = 0; d < data.cause_factor.size(); ++d) {
    series += std::to_string(d) + ',' + stats::iso_date(spec.start / 86400 + static_cast<std::int64_t>(d)) + ',' +
              format_double(data.cause_factor[d]) + ',' + format_double(data.effect_factor[d]) + ',' +
              std::to_string(cause_events[d]) + ',' + std::to_string(effect_events[d]) + '\n';
  }
  write_file((root / "planted_series.csv").string(), series);

  std::string scores = "actor_id,score,score_kind\n";
  for (const auto& [actor, s] : data.bot_scores) {
    scores += csv_field(actor) + ',' + format_double(s.score) + ',' + std::string(to_string(s.kind)) + '\n';
  }
  write_file((root / "bot_scores.csv").string(), scores);

  std::string seeds = "actor_id,stance\n";
  for (const auto& [actor, s] : data.seeds) seeds += csv_field(actor) + ',' + std::string(to_string(s)) + '\n';
  write_file((root / "seeds.csv").string(), seeds);

  std::string lexicon;
  for (const auto& w : synthetic_lexicon()) lexicon += w + '\n';
  write_file((root / "lexicon.txt").string(), lexicon);
  write_file((root / "spec.json").string(), spec.to_json());
}

}  // namespace botscope
