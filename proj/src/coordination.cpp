#include "botscope/coordination.hpp"

#include <algorithm>
#include <thread>
#include <tuple>
#include <unordered_map>

namespace botscope {
namespace {

struct Action {
  std::uint32_t object = 0;
  std::uint32_t actor = 0;
  std::int64_t ts = 0;
};

// (pair key, window bucket) for one qualifying co-occurrence.
struct Occurrence {
  std::uint64_t pair = 0;
  std::uint32_t bucket = 0;

  bool operator<(const Occurrence& o) const {
    return pair != o.pair ? pair < o.pair : bucket < o.bucket;
  }
};

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::uint32_t bucket_of(std::int64_t dt, std::span<const std::int64_t> windows) {
  return static_cast<std::uint32_t>(std::lower_bound(windows.begin(), windows.end(), dt) - windows.begin());
}

// Two-pointer join over one object's actions (sorted by time).
void join_group(std::span<const Action> group, std::span<const std::int64_t> windows, bool dedup,
                std::vector<Occurrence>& out) {
  const std::int64_t widest = windows.back();
  const std::size_t start = out.size();
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (std::size_t j = i + 1; j < group.size() && group[j].ts - group[i].ts <= widest; ++j) {
      if (group[j].actor == group[i].actor) continue;
      out.push_back({pair_key(group[i].actor, group[j].actor), bucket_of(group[j].ts - group[i].ts, windows)});
    }
  }
  if (dedup) {
    // Keep each pair once, at its closest co-occurrence on this object.
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
    auto last = std::unique(out.begin() + static_cast<std::ptrdiff_t>(start), out.end(),
                            [](const Occurrence& a, const Occurrence& b) { return a.pair == b.pair; });
    out.erase(last, out.end());
  }
}

struct Interned {
  std::vector<std::string> actors;  // id -> actor, sorted so ids follow actor order
  std::vector<Action> actions;      // sorted by (object, ts)
  std::vector<std::size_t> group_starts;
};

Interned intern_actions(const EventLog& log, EventKind kind) {
  Interned in;
  std::unordered_map<std::string_view, std::uint32_t> objects;
  std::unordered_map<std::string_view, std::uint32_t> actors;
  std::vector<std::string_view> actor_names;
  for (const Event& e : log) {
    if (e.kind != kind || !e.object_id) continue;
    auto [ot, o_new] = objects.try_emplace(*e.object_id, static_cast<std::uint32_t>(objects.size()));
    auto [at, a_new] = actors.try_emplace(e.actor_id, static_cast<std::uint32_t>(actors.size()));
    if (a_new) actor_names.push_back(e.actor_id);
    in.actions.push_back({ot->second, at->second, e.timestamp});
  }
  // Renumber actors in sorted order so pair keys sort like actor names.
  std::vector<std::uint32_t> order(actor_names.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return actor_names[a] < actor_names[b]; });
  std::vector<std::uint32_t> rank(order.size());
  in.actors.reserve(order.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = r;
    in.actors.emplace_back(actor_names[order[r]]);
  }
  for (Action& a : in.actions) a.actor = rank[a.actor];
  // The log is time-ordered, so a stable sort by object keeps each group in time order.
  std::stable_sort(in.actions.begin(), in.actions.end(),
                   [](const Action& a, const Action& b) { return a.object < b.object; });
  for (std::size_t i = 0; i < in.actions.size(); ++i) {
    if (i == 0 || in.actions[i].object != in.actions[i - 1].object) in.group_starts.push_back(i);
  }
  in.group_starts.push_back(in.actions.size());
  return in;
}

std::vector<Occurrence> collect_occurrences(const Interned& in, std::span<const std::int64_t> windows,
                                            const CoActionOptions& options) {
  const std::size_t groups = in.group_starts.size() - 1;
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(groups, 1))));
  std::vector<std::vector<Occurrence>> shards(jobs);
  auto work = [&](unsigned shard) {
    const std::size_t lo = groups * shard / jobs;
    const std::size_t hi = groups * (shard + 1) / jobs;
    for (std::size_t g = lo; g < hi; ++g) {
      std::span<const Action> group(in.actions.data() + in.group_starts[g],
                                    in.group_starts[g + 1] - in.group_starts[g]);
      join_group(group, windows, options.dedup_per_object, shards[shard]);
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned s = 0; s < jobs; ++s) threads.emplace_back(work, s);
    for (auto& t : threads) t.join();
  }
  std::vector<Occurrence> all = std::move(shards[0]);
  for (unsigned s = 1; s < jobs; ++s) all.insert(all.end(), shards[s].begin(), shards[s].end());
  std::sort(all.begin(), all.end());
  return all;
}

void validate_windows(std::span<const std::int64_t> windows) {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i] <= 0) throw Error("window must be positive, got " + std::to_string(windows[i]));
    if (i > 0 && windows[i] <= windows[i - 1]) throw Error("windows must be strictly increasing");
  }
}

void fill_composition(CoordinationNetwork& net, const ClassMap* classes) {
  for (const std::string& node : net.nodes) {
    const UserClass cls = classes ? class_of(*classes, node) : UserClass::Unknown;
    for (std::size_t i = 0; i < std::size(kAllClasses); ++i) {
      if (kAllClasses[i] == cls) ++net.composition[i];
    }
  }
}

}  // namespace

std::string_view to_string(CoAction k) { return k == CoAction::CoRetweet ? "CO_RETWEET" : "CO_REPLY"; }

std::optional<CoAction> parse_co_action(std::string_view s) {
  if (s == "CO_RETWEET") return CoAction::CoRetweet;
  if (s == "CO_REPLY") return CoAction::CoReply;
  return std::nullopt;
}

EventKind event_kind_of(CoAction k) { return k == CoAction::CoRetweet ? EventKind::Retweet : EventKind::Reply; }

std::uint64_t CoordinationNetwork::weight(std::string_view a, std::string_view b) const {
  auto ia = std::lower_bound(nodes.begin(), nodes.end(), a);
  auto ib = std::lower_bound(nodes.begin(), nodes.end(), b);
  if (ia == nodes.end() || *ia != a || ib == nodes.end() || *ib != b) return 0;
  NodeId x = static_cast<NodeId>(ia - nodes.begin());
  NodeId y = static_cast<NodeId>(ib - nodes.begin());
  if (x > y) std::swap(x, y);
  auto it = std::lower_bound(edges.begin(), edges.end(), WeightedEdge{x, y, 0},
                             [](const WeightedEdge& e, const WeightedEdge& k) {
                               return std::tie(e.src, e.dst) < std::tie(k.src, k.dst);
                             });
  return it != edges.end() && it->src == x && it->dst == y ? it->weight : 0;
}

WindowSweep window_sweep(const EventLog& log, CoAction kind, std::span<const std::int64_t> windows,
                         const CoActionOptions& options, const ClassMap* classes) {
  validate_windows(windows);
  WindowSweep sweep;
  sweep.kind = kind;
  if (windows.empty()) return sweep;

  const Interned in = intern_actions(log, event_kind_of(kind));
  const std::vector<Occurrence> occ = collect_occurrences(in, windows, options);

  // Per pair, counts by bucket; the weight at window k is the prefix sum.
  const std::size_t K = windows.size();
  std::vector<std::uint64_t> pair_keys;
  std::vector<std::uint64_t> cumulative;
  for (std::size_t i = 0; i < occ.size();) {
    pair_keys.push_back(occ[i].pair);
    cumulative.resize(cumulative.size() + K, 0);
    std::uint64_t* row = cumulative.data() + cumulative.size() - K;
    std::size_t j = i;
    for (; j < occ.size() && occ[j].pair == occ[i].pair; ++j) ++row[occ[j].bucket];
    for (std::size_t k = 1; k < K; ++k) row[k] += row[k - 1];
    i = j;
  }
  const std::uint64_t min_weight = std::max<std::uint64_t>(1, options.min_weight);

  for (std::size_t k = 0; k < windows.size(); ++k) {
    SweepEntry entry;
    CoordinationNetwork& net = entry.network;
    net.window_seconds = windows[k];
    net.kind = kind;
    std::vector<std::uint32_t> local(in.actors.size(), UINT32_MAX);
    std::vector<std::uint32_t> used;
    for (std::size_t p = 0; p < pair_keys.size(); ++p) {
      if (cumulative[p * K + k] >= min_weight) {
        used.push_back(static_cast<std::uint32_t>(pair_keys[p] >> 32));
        used.push_back(static_cast<std::uint32_t>(pair_keys[p] & 0xffffffffu));
      }
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    for (std::uint32_t i = 0; i < used.size(); ++i) {
      local[used[i]] = i;
      net.nodes.push_back(in.actors[used[i]]);
    }
    std::vector<std::pair<NodeId, NodeId>> plain;
    for (std::size_t p = 0; p < pair_keys.size(); ++p) {
      const std::uint64_t w = cumulative[p * K + k];
      if (w < min_weight) continue;
      const NodeId a = local[pair_keys[p] >> 32];
      const NodeId b = local[pair_keys[p] & 0xffffffffu];
      net.edges.push_back({a, b, w});
      plain.emplace_back(a, b);
    }
    fill_composition(net, classes);
    const UndirectedMetrics m = undirected_metrics(net.nodes.size(), plain);
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
      entry.profile.push_back({net.nodes[i], classes ? class_of(*classes, net.nodes[i]) : UserClass::Unknown,
                               m.centrality[i], m.clustering[i]});
    }
    sweep.entries.push_back(std::move(entry));
  }
  return sweep;
}

CoordinationNetwork co_action_network(const EventLog& log, CoAction kind, std::int64_t window_seconds,
                                      const CoActionOptions& options, const ClassMap* classes) {
  const std::int64_t w[] = {window_seconds};
  return std::move(window_sweep(log, kind, w, options, classes).entries.front().network);
}

std::string render_sweep_summary_csv(const WindowSweep& sweep) {
  std::string out = "window,nodes,edges";
  for (UserClass c : kAllClasses) out += ',' + std::string(to_string(c));
  out += '\n';
  for (const SweepEntry& e : sweep.entries) {
    out += std::to_string(e.network.window_seconds) + ',' + std::to_string(e.network.nodes.size()) + ',' +
           std::to_string(e.network.edges.size());
    for (std::size_t n : e.network.composition) out += ',' + std::to_string(n);
    out += '\n';
  }
  return out;
}

std::string render_sweep_profile_csv(const WindowSweep& sweep) {
  std::string out = "window,actor_id,class,degree_centrality,clustering\n";
  for (const SweepEntry& e : sweep.entries) {
    for (const NodeProfile& p : e.profile) {
      out += std::to_string(e.network.window_seconds) + ',' + csv_field(p.actor) + ',' +
             std::string(to_string(p.cls)) + ',' + format_double(p.degree_centrality) + ',' +
             format_double(p.clustering) + '\n';
    }
  }
  return out;
}

}  // namespace botscope
