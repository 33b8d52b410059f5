#include "botscope/classify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "internal/http_post.hpp"

namespace botscope {
namespace {

// Calls fn(line_number, fields) for each non-blank row, skipping a header row
// whose first field is `header_first`.
template <typename Fn>
void for_each_csv_row(std::string_view csv, std::string_view header_first, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == csv.size()) break;
      continue;
    }
    auto fields = split_csv_line(line);
    if (line_no == 1 && !fields.empty() && fields[0] == header_first) continue;
    fn(line_no, fields);
    if (end == csv.size()) break;
  }
}

double parse_number(const std::string& s, std::size_t line, const char* what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(line, std::string("invalid ") + what + " '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s, std::size_t line, const char* what) {
  if (s == "true" || s == "1" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "0" || s == "False" || s == "FALSE") return false;
  throw ParseError(line, std::string("invalid ") + what + " '" + s + "'");
}

}  // namespace

std::string_view to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::Cap: return "CAP";
    case ScoreKind::Universal: return "UNIVERSAL";
    case ScoreKind::Heuristic: return "HEURISTIC";
    case ScoreKind::Imported: return "IMPORTED";
  }
  return "IMPORTED";
}

std::optional<ScoreKind> parse_score_kind(std::string_view s) {
  for (auto k : {ScoreKind::Cap, ScoreKind::Universal, ScoreKind::Heuristic, ScoreKind::Imported}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void assign_agency(std::span<ActorProfile> profiles, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error("threshold must lie in [0, 1], got " + format_double(threshold));
  }
  for (ActorProfile& p : profiles) {
    if (!p.bot_score) {
      p.agency = Agency::Unknown;
    } else {
      p.agency = p.bot_score->score > threshold ? Agency::Bot : Agency::Human;
    }
  }
}

StanceAssignment stance_from_partition(const Partition& partition, const StanceMap& seeds) {
  if (partition.assignment.empty()) throw Error("stance_from_partition: empty partition");
  if (seeds.empty()) throw Error("stance_from_partition: no seed labels");
  for (const auto& [actor, stance] : seeds) {
    if (stance == Stance::Unknown) throw Error("seed " + actor + " has stance UNKNOWN");
  }

  struct Community {
    std::size_t id = 0;
    std::size_t size = 0;
    std::string smallest;
    std::size_t side_a = 0;
    std::size_t side_b = 0;
  };
  std::map<std::size_t, Community> communities;
  for (const auto& [actor, c] : partition.assignment) {
    Community& com = communities[c];
    if (com.size == 0) {
      com.id = c;
      com.smallest = actor;  // assignment is ordered by actor id
    }
    ++com.size;
    if (auto it = seeds.find(actor); it != seeds.end()) {
      (it->second == Stance::SideA ? com.side_a : com.side_b) += 1;
    }
  }
  std::vector<const Community*> order;
  for (const auto& [id, com] : communities) order.push_back(&com);
  std::sort(order.begin(), order.end(), [](const Community* x, const Community* y) {
    if (x->size != y->size) return x->size > y->size;
    return x->smallest < y->smallest;
  });

  StanceAssignment out;
  for (std::size_t i = 0; i < order.size() && i < 2; ++i) {
    const Community& com = *order[i];
    const std::string label = "community containing " + com.smallest + " (" +
                              std::to_string(com.size) + " members)";
    if (com.side_a == 0 && com.side_b == 0) {
      out.warnings.push_back(label + " has no seed accounts; members left UNKNOWN");
    } else if (com.side_a == com.side_b) {
      out.warnings.push_back(label + " has tied seeds (" + std::to_string(com.side_a) +
                             " each); members left UNKNOWN");
    } else {
      out.community_sides[com.id] = com.side_a > com.side_b ? Stance::SideA : Stance::SideB;
    }
  }
  if (out.community_sides.size() == 2 &&
      out.community_sides.begin()->second == std::next(out.community_sides.begin())->second) {
    out.warnings.push_back("both candidate communities map to " +
                           std::string(to_string(out.community_sides.begin()->second)));
  }
  for (const auto& [actor, c] : partition.assignment) {
    auto it = out.community_sides.find(c);
    out.stances[actor] = it == out.community_sides.end() ? Stance::Unknown : it->second;
  }
  return out;
}

LabelLoad parse_stance_labels(std::string_view csv) {
  LabelLoad out;
  for_each_csv_row(csv, "actor_id", [&](std::size_t line, const std::vector<std::string>& f) {
    if (f.size() < 2 || f[0].empty()) throw ParseError(line, "expected actor_id,stance");
    auto stance = parse_stance(f[1]);
    if (!stance) throw ParseError(line, "unknown stance '" + f[1] + "'");
    auto [it, inserted] = out.labels.insert_or_assign(f[0], *stance);
    if (!inserted) {
      out.warnings.push_back("line " + std::to_string(line) + ": duplicate label for " + f[0] +
                             ", keeping the later one");
    }
  });
  return out;
}

LabelLoad load_stance_labels(const std::string& path) { return parse_stance_labels(read_file(path)); }

double reddit_bot_heuristic(const RedditBotFeatures& features, const HeuristicConfig& config) {
  double total = 0.0;
  for (double w : config.weights) {
    if (!(w >= 0.0)) throw Error("heuristic weights must be non-negative");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw Error("heuristic weights must sum to 1");
  if (!std::isfinite(features.account_age_days) || !std::isfinite(features.post_interval_variance) ||
      !std::isfinite(features.content_variance)) {
    throw Error("reddit features must be finite");
  }
  if (features.employee) return 0.0;
  const std::array<bool, 6> flags{
      features.account_age_days < config.max_age_days,
      static_cast<double>(features.karma) < config.max_karma,
      !features.verified,
      features.employee,
      features.post_interval_variance < config.max_interval_variance,
      features.content_variance < config.max_content_variance,
  };
  double score = 0.0;
  for (std::size_t i = 0; i < flags.size(); ++i) score += flags[i] ? config.weights[i] : 0.0;
  return std::clamp(score, 0.0, 1.0);
}

std::map<std::string, RedditBotFeatures> parse_reddit_features(std::string_view csv) {
  std::map<std::string, RedditBotFeatures> out;
  for_each_csv_row(csv, "actor_id", [&](std::size_t line, const std::vector<std::string>& f) {
    if (f.size() != 7) throw ParseError(line, "expected 7 fields");
    RedditBotFeatures r;
    r.account_age_days = parse_number(f[1], line, "account_age_days");
    r.karma = static_cast<long long>(parse_number(f[2], line, "karma"));
    r.verified = parse_bool(f[3], line, "verified");
    r.employee = parse_bool(f[4], line, "employee");
    r.post_interval_variance = parse_number(f[5], line, "post_interval_variance");
    r.content_variance = parse_number(f[6], line, "content_variance");
    out[f[0]] = r;
  });
  return out;
}

std::size_t Classification::count(UserClass c) const {
  for (std::size_t i = 0; i < std::size(kAllClasses); ++i) {
    if (kAllClasses[i] == c) return counts[i];
  }
  return 0;
}

double Classification::share(UserClass c) const {
  return total == 0 ? 0.0 : static_cast<double>(count(c)) / static_cast<double>(total);
}

Classification classify_actors(std::span<const ActorProfile> profiles) {
  Classification out;
  std::set<ScoreKind> kinds;
  for (const ActorProfile& p : profiles) {
    const UserClass cls = p.cls();
    auto [it, inserted] = out.classes.insert_or_assign(p.actor_id, cls);
    if (!inserted) out.warnings.push_back("duplicate profile for " + p.actor_id);
    if (p.bot_score) kinds.insert(p.bot_score->kind);
  }
  for (const auto& [actor, cls] : out.classes) {
    for (std::size_t i = 0; i < std::size(kAllClasses); ++i) {
      if (kAllClasses[i] == cls) ++out.counts[i];
    }
  }
  out.total = out.classes.size();
  if (kinds.size() > 1) {
    std::string names;
    for (ScoreKind k : kinds) names += (names.empty() ? "" : ", ") + std::string(to_string(k));
    out.warnings.push_back("bot scores of different kinds (" + names +
                           ") share one threshold; their comparability is not established");
  }
  return out;
}

std::string_view agreement_band(double kappa) {
  if (kappa < 0.0) return "poor agreement";
  if (kappa <= 0.20) return "slight agreement";
  if (kappa <= 0.40) return "fair agreement";
  if (kappa <= 0.60) return "moderate agreement";
  if (kappa <= 0.80) return "substantial agreement";
  return "almost perfect agreement";
}

Kappa cohen_kappa(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) throw Error("cohen_kappa: label sequences differ in length");
  if (a.empty()) throw Error("cohen_kappa: empty label sequences");
  std::map<std::string, std::pair<double, double>> marginals;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    marginals[a[i]].first += 1.0;
    marginals[b[i]].second += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double n = static_cast<double>(a.size());
  Kappa k;
  k.observed = agree / n;
  for (const auto& [label, m] : marginals) k.expected += (m.first / n) * (m.second / n);
  if (k.expected >= 1.0) {
    k.kappa = 1.0;
    k.note = "both raters used a single identical label; kappa set to 1 by convention";
  } else {
    k.kappa = (k.observed - k.expected) / (1.0 - k.expected);
  }
  k.band = std::string(agreement_band(k.kappa));
  return k;
}

FileBotScoreProvider FileBotScoreProvider::from_csv(std::string_view csv) {
  FileBotScoreProvider p;
  for_each_csv_row(csv, "actor_id", [&](std::size_t line, const std::vector<std::string>& f) {
    if (f.size() < 2 || f.size() > 3 || f[0].empty()) {
      throw ParseError(line, "expected actor_id,score[,score_kind]");
    }
    BotScore s;
    s.score = parse_number(f[1], line, "score");
    if (s.score < 0.0 || s.score > 1.0) throw ParseError(line, "score outside [0, 1]");
    if (f.size() == 3 && !f[2].empty()) {
      auto kind = parse_score_kind(f[2]);
      if (!kind) throw ParseError(line, "unknown score kind '" + f[2] + "'");
      s.kind = *kind;
    }
    p.scores_[f[0]] = s;
  });
  return p;
}

FileBotScoreProvider FileBotScoreProvider::from_file(const std::string& path) {
  return from_csv(read_file(path));
}

std::map<std::string, BotScore> FileBotScoreProvider::fetch(std::span<const std::string> actors) {
  std::map<std::string, BotScore> out;
  for (const std::string& a : actors) {
    if (auto it = scores_.find(a); it != scores_.end()) out.emplace(a, it->second);
  }
  return out;
}

std::map<std::string, BotScore> StubBotScoreProvider::fetch(std::span<const std::string> actors) {
  std::map<std::string, BotScore> out;
  for (const std::string& a : actors) {
    if (auto it = scores_.find(a); it != scores_.end()) out.emplace(a, it->second);
  }
  return out;
}

HttpBotScoreProvider::HttpBotScoreProvider(HttpProviderOptions options) : options_(std::move(options)) {
  if (options_.batch_size == 0) throw Error("batch_size must be positive");
}

std::map<std::string, BotScore> HttpBotScoreProvider::fetch(std::span<const std::string> actors) {
  std::map<std::string, BotScore> out;
  internal::PostOptions post;
  post.max_attempts = options_.max_attempts;
  post.initial_backoff = options_.initial_backoff;
  post.timeout = options_.timeout;
  for (std::size_t start = 0; start < actors.size(); start += options_.batch_size) {
    const auto batch = actors.subspan(start, std::min(options_.batch_size, actors.size() - start));
    nlohmann::json request = {{"actors", std::vector<std::string>(batch.begin(), batch.end())}};
    const std::string body = internal::http_post_json(options_.url, request.dump(), post);
    try {
      const auto response = nlohmann::json::parse(body);
      for (const auto& item : response.at("scores")) {
        BotScore s;
        s.score = item.at("score").get<double>();
        if (!(s.score >= 0.0 && s.score <= 1.0)) throw TransportError("score outside [0, 1]");
        if (item.contains("score_kind") && !item["score_kind"].is_null()) {
          auto kind = parse_score_kind(item["score_kind"].get<std::string>());
          if (!kind) throw TransportError("unknown score kind in response");
          s.kind = *kind;
        }
        out[item.at("actor_id").get<std::string>()] = s;
      }
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed bot-score response: ") + e.what());
    }
  }
  return out;
}

}  // namespace botscope
