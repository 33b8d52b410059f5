#include "botscope/engagement.hpp"

#include <array>
#include <map>

namespace botscope {
namespace {

struct Tally {
  std::array<std::uint64_t, 4> num{};  // indexed by EngagementMetric
  std::array<std::uint64_t, 4> den{};
};

using FactionTallies = std::array<Tally, 3>;  // indexed by Faction

void count(FactionTallies& t, Faction f, EngagementMetric m, bool to_bot) {
  Tally& x = t[static_cast<std::size_t>(f)];
  x.den[static_cast<std::size_t>(m)] += 1;
  if (to_bot) x.num[static_cast<std::size_t>(m)] += 1;
}

}  // namespace

std::string_view to_string(EngagementMetric m) {
  switch (m) {
    case EngagementMetric::Rtp: return "RTP";
    case EngagementMetric::Rr: return "RR";
    case EngagementMetric::H2br: return "H2BR";
    case EngagementMetric::RrReddit: return "RR_REDDIT";
  }
  return "RTP";
}

std::string_view to_string(Faction f) {
  switch (f) {
    case Faction::All: return "ALL";
    case Faction::SideA: return "SIDE_A";
    case Faction::SideB: return "SIDE_B";
  }
  return "ALL";
}

std::optional<double> EngagementRow::value() const {
  if (denominator == 0) return std::nullopt;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

const EngagementRow* EngagementReport::find(std::string_view community, Faction faction,
                                            EngagementMetric metric) const {
  for (const auto& r : rows) {
    if (r.community == community && r.faction == faction && r.metric == metric) return &r;
  }
  return nullptr;
}

EngagementReport engagement_metrics(const EventLog& log, const ClassMap& classes, Platform platform,
                                    bool per_faction) {
  std::map<std::string, FactionTallies> by_community;
  FactionTallies overall{};
  for (const Event& e : log) {
    if (e.platform != platform) continue;
    if (e.kind != EventKind::Retweet && e.kind != EventKind::Reply) continue;
    const UserClass author = class_of(classes, e.actor_id);
    if (!is_human(author)) continue;
    const UserClass target = e.target_actor_id ? class_of(classes, *e.target_actor_id) : UserClass::Unknown;
    const bool to_bot = is_bot(target);
    const Faction side = stance_of(author) == Stance::SideA ? Faction::SideA : Faction::SideB;
    const bool same_side_bot = to_bot && stance_of(target) == stance_of(author);

    FactionTallies& local = by_community[e.community];
    for (FactionTallies* t : {&overall, &local}) {
      if (platform == Platform::Reddit) {
        if (e.kind != EventKind::Reply) continue;
        count(*t, Faction::All, EngagementMetric::RrReddit, to_bot);
        count(*t, side, EngagementMetric::RrReddit, same_side_bot);
        continue;
      }
      const EngagementMetric m = e.kind == EventKind::Retweet ? EngagementMetric::Rtp : EngagementMetric::Rr;
      for (EngagementMetric metric : {m, EngagementMetric::H2br}) {
        count(*t, Faction::All, metric, to_bot);
        count(*t, side, metric, same_side_bot);
      }
    }
  }

  EngagementReport report;
  report.platform = platform;
  const std::vector<EngagementMetric> metrics =
      platform == Platform::X
          ? std::vector<EngagementMetric>{EngagementMetric::Rtp, EngagementMetric::Rr, EngagementMetric::H2br}
          : std::vector<EngagementMetric>{EngagementMetric::RrReddit};
  auto emit = [&](const std::string& community, const FactionTallies& t) {
    for (Faction f : {Faction::All, Faction::SideA, Faction::SideB}) {
      if (f != Faction::All && !per_faction) continue;
      for (EngagementMetric m : metrics) {
        const Tally& x = t[static_cast<std::size_t>(f)];
        report.rows.push_back({community, f, m, x.num[static_cast<std::size_t>(m)],
                               x.den[static_cast<std::size_t>(m)]});
      }
    }
  };
  emit("all", overall);
  for (const auto& [community, t] : by_community) emit(community, t);
  return report;
}

std::string render_engagement_csv(const EngagementReport& report) {
  std::string out = "community,faction,metric,numerator,denominator,value\n";
  for (const auto& r : report.rows) {
    const auto v = r.value();
    out += csv_field(r.community) + ',' + std::string(to_string(r.faction)) + ',' +
           std::string(to_string(r.metric)) + ',' + std::to_string(r.numerator) + ',' +
           std::to_string(r.denominator) + ',' + (v ? format_double(*v) : std::string()) + '\n';
  }
  return out;
}

}  // namespace botscope
