#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "botscope/common.hpp"
#include "botscope/event.hpp"
#include "botscope/graph.hpp"

namespace botscope {

enum class CoAction { CoRetweet, CoReply };

std::string_view to_string(CoAction k);
std::optional<CoAction> parse_co_action(std::string_view s);
EventKind event_kind_of(CoAction k);

struct CoActionOptions {
  std::uint64_t min_weight = 1;
  // Count a pair at most once per shared object instead of once per
  // qualifying pair of events.
  bool dedup_per_object = false;
  unsigned jobs = 1;
};

/// Undirected co-action network. Nodes are the edge endpoints only, sorted by
/// actor id; every edge has src < dst and weight >= min_weight, sorted.
struct CoordinationNetwork {
  std::int64_t window_seconds = 0;
  CoAction kind = CoAction::CoRetweet;
  std::vector<std::string> nodes;
  std::vector<WeightedEdge> edges;
  std::array<std::size_t, 5> composition{};  // indexed like kAllClasses

  std::uint64_t weight(std::string_view a, std::string_view b) const;
  GraphView view() const { return {nodes, edges, false}; }
};

// Every pair of events of the kind on the same object, by distinct actors,
// at most `window_seconds` apart adds 1 to the pair's weight. Throws Error
// when the window is not positive. `classes` may be null (all UNKNOWN).
CoordinationNetwork co_action_network(const EventLog& log, CoAction kind, std::int64_t window_seconds,
                                      const CoActionOptions& options = {},
                                      const ClassMap* classes = nullptr);

struct NodeProfile {
  std::string actor;
  UserClass cls = UserClass::Unknown;
  double degree_centrality = 0.0;
  double clustering = 0.0;
};

struct SweepEntry {
  CoordinationNetwork network;
  std::vector<NodeProfile> profile;  // same order as network.nodes
};

struct WindowSweep {
  CoAction kind = CoAction::CoRetweet;
  std::vector<SweepEntry> entries;
};

// One network per window from a single pass over the pairs at the largest
// window. Windows must be positive and strictly increasing.
WindowSweep window_sweep(const EventLog& log, CoAction kind, std::span<const std::int64_t> windows,
                         const CoActionOptions& options = {}, const ClassMap* classes = nullptr);

// window,nodes,edges,<one column per class>
std::string render_sweep_summary_csv(const WindowSweep& sweep);
// window,actor_id,class,degree_centrality,clustering
std::string render_sweep_profile_csv(const WindowSweep& sweep);

}  // namespace botscope
