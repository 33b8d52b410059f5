#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "botscope/common.hpp"
#include "botscope/event.hpp"

namespace botscope {

enum class EngagementMetric { Rtp, Rr, H2br, RrReddit };

std::string_view to_string(EngagementMetric m);

// "ALL" or a faction; per-faction rows only count same-side humans and bots.
enum class Faction { All, SideA, SideB };

std::string_view to_string(Faction f);

struct EngagementRow {
  std::string community;  // a community tag, or "all"
  Faction faction = Faction::All;
  EngagementMetric metric = EngagementMetric::Rtp;
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  // Undefined when the denominator is 0.
  std::optional<double> value() const;
};

struct EngagementReport {
  Platform platform = Platform::X;
  std::vector<EngagementRow> rows;  // "all" first, then communities in order; factions ALL, SIDE_A, SIDE_B

  const EngagementRow* find(std::string_view community, Faction faction, EngagementMetric metric) const;
};

/// Human-authored interactions aimed at bots over all human-authored
/// interactions of the same kind. X: RTP (retweets), RR (replies), H2BR
/// (retweets and replies together). Reddit: RR_REDDIT (replies). Humans and
/// bots are actors of a known class; other actors are ignored as authors and
/// count as non-bot targets.
EngagementReport engagement_metrics(const EventLog& log, const ClassMap& classes, Platform platform,
                                    bool per_faction = true);

// community,faction,metric,numerator,denominator,value (empty when undefined)
std::string render_engagement_csv(const EngagementReport& report);

}  // namespace botscope
