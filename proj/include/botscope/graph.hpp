#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "botscope/common.hpp"
#include "botscope/event.hpp"

namespace botscope {

using NodeId = std::uint32_t;

struct WeightedEdge {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint64_t weight = 0;

  bool operator==(const WeightedEdge&) const = default;
};

/// Read-only view used by the exporters; shared by interaction graphs and
/// coordination networks.
struct GraphView {
  std::span<const std::string> nodes;
  std::span<const WeightedEdge> edges;
  bool directed = true;
};

struct BuildStats {
  std::size_t counted = 0;
  std::size_t missing_target = 0;
  std::size_t self_interactions = 0;
};

/// Directed weighted retweet/reply graph. Nodes are kept sorted by actor id
/// and edges sorted by (src, dst); weights are >= 1 and there are no
/// self-loops.
class InteractionGraph {
 public:
  using EdgeTriple = std::tuple<std::string, std::string, std::uint64_t>;

  InteractionGraph() = default;

  // Duplicate (src, dst) pairs are summed. Throws Error on a self-loop or a
  // zero weight.
  static InteractionGraph from_edges(EventKind kind, std::vector<EdgeTriple> edges,
                                     std::vector<std::string> isolated = {});

  EventKind kind() const { return kind_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return nodes_.empty(); }

  std::optional<NodeId> find(std::string_view actor) const;
  std::uint64_t weight(std::string_view src, std::string_view dst) const;
  std::uint64_t total_weight() const;

  GraphView view() const { return {nodes_, edges_, true}; }

  bool operator==(const InteractionGraph&) const = default;

 private:
  friend InteractionGraph build_interaction_network(const EventLog&, EventKind, BuildStats*);
  friend InteractionGraph k_core(const InteractionGraph&, std::size_t);

  EventKind kind_ = EventKind::Retweet;
  std::vector<std::string> nodes_;
  std::vector<WeightedEdge> edges_;
};

// Edge actor -> target for every event of `kind`; author indegree is the
// number of times the author was retweeted/replied to.
InteractionGraph build_interaction_network(const EventLog& log, EventKind kind,
                                           BuildStats* stats = nullptr);

// Maximal subgraph whose nodes all have undirected, unweighted degree >= k.
InteractionGraph k_core(const InteractionGraph& graph, std::size_t k);

struct Partition {
  std::map<std::string, std::size_t> assignment;
  std::size_t community_count = 0;
  double modularity = 0.0;
};

// Newman-Girvan modularity of `assignment` on the undirected projection
// (reciprocal edge weights summed). Throws Error if a node is unassigned.
double modularity(const InteractionGraph& graph,
                  const std::map<std::string, std::size_t>& assignment);

// Louvain local moving + aggregation at resolution 1. Node visit order is
// shuffled with `seed`; communities are numbered by first appearance in
// sorted node order. Throws Error on an empty graph.
Partition louvain_partition(const InteractionGraph& graph, std::uint64_t seed);

struct NodeMetrics {
  std::uint64_t indegree = 0;   // weighted
  std::uint64_t outdegree = 0;  // weighted
  double degree_centrality = 0.0;
  double clustering = 0.0;

  bool operator==(const NodeMetrics&) const = default;
};

std::map<std::string, NodeMetrics> node_metrics(const InteractionGraph& graph);

struct UndirectedMetrics {
  std::vector<std::size_t> degree;
  std::vector<double> centrality;
  std::vector<double> clustering;
};

// Degree centrality and local clustering of an unweighted undirected graph
// on nodes [0, n). Duplicate and reversed pairs collapse; self-pairs are
// ignored.
UndirectedMetrics undirected_metrics(std::size_t n,
                                     std::span<const std::pair<NodeId, NodeId>> edges);

enum class ExportFormat { EdgeCsv, Gexf };

std::string render_graph(const GraphView& graph, const ClassMap* classes, ExportFormat format);
// Throws IoError when `path` cannot be written.
void export_graph(const GraphView& graph, const ClassMap* classes, ExportFormat format,
                  const std::string& path);

}  // namespace botscope
