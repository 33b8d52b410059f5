#include "botscope/graph.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace botscope {
namespace {

std::uint64_t pair_key(NodeId a, NodeId b) { return (std::uint64_t{a} << 32) | b; }

// Sorts actor names and remaps edges keyed by provisional ids.
void finalize(std::vector<std::string> names,
              const std::unordered_map<std::uint64_t, std::uint64_t>& weights,
              std::vector<std::string>& nodes_out, std::vector<WeightedEdge>& edges_out) {
  std::vector<NodeId> order(names.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return names[a] < names[b]; });
  std::vector<NodeId> remap(names.size());
  nodes_out.clear();
  nodes_out.reserve(names.size());
  for (NodeId i = 0; i < order.size(); ++i) {
    remap[order[i]] = i;
    nodes_out.push_back(std::move(names[order[i]]));
  }
  edges_out.clear();
  edges_out.reserve(weights.size());
  for (const auto& [key, w] : weights) {
    edges_out.push_back({remap[static_cast<NodeId>(key >> 32)],
                         remap[static_cast<NodeId>(key & 0xFFFFFFFFu)], w});
  }
  std::sort(edges_out.begin(), edges_out.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
}

// Undirected projection: unique {u, v} pairs (u < v) with summed weights.
std::vector<WeightedEdge> undirected_projection(const std::vector<WeightedEdge>& edges) {
  std::vector<WeightedEdge> out;
  out.reserve(edges.size());
  for (const WeightedEdge& e : edges) {
    out.push_back({std::min(e.src, e.dst), std::max(e.src, e.dst), e.weight});
  }
  std::sort(out.begin(), out.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  std::vector<WeightedEdge> merged;
  merged.reserve(out.size());
  for (const WeightedEdge& e : out) {
    if (!merged.empty() && merged.back().src == e.src && merged.back().dst == e.dst) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

// Sorted, deduplicated neighbor lists (CSR).
struct Adjacency {
  std::vector<std::size_t> offsets;
  std::vector<NodeId> targets;

  std::span<const NodeId> neighbors(NodeId u) const {
    return {targets.data() + offsets[u], offsets[u + 1] - offsets[u]};
  }
  std::size_t degree(NodeId u) const { return offsets[u + 1] - offsets[u]; }
};

Adjacency build_adjacency(std::size_t n, std::span<const std::pair<NodeId, NodeId>> pairs) {
  std::vector<std::pair<NodeId, NodeId>> both;
  both.reserve(pairs.size() * 2);
  for (auto [a, b] : pairs) {
    if (a == b) continue;
    both.emplace_back(a, b);
    both.emplace_back(b, a);
  }
  std::sort(both.begin(), both.end());
  both.erase(std::unique(both.begin(), both.end()), both.end());
  Adjacency adj;
  adj.offsets.assign(n + 1, 0);
  for (auto [a, b] : both) ++adj.offsets[a + 1];
  std::partial_sum(adj.offsets.begin(), adj.offsets.end(), adj.offsets.begin());
  adj.targets.reserve(both.size());
  for (auto [a, b] : both) adj.targets.push_back(b);
  return adj;
}

std::vector<std::pair<NodeId, NodeId>> edge_pairs(const std::vector<WeightedEdge>& edges) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  pairs.reserve(edges.size());
  for (const WeightedEdge& e : edges) pairs.emplace_back(e.src, e.dst);
  return pairs;
}

}  // namespace

InteractionGraph InteractionGraph::from_edges(EventKind kind, std::vector<EdgeTriple> edges,
                                              std::vector<std::string> isolated) {
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> names;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = ids.try_emplace(s, static_cast<NodeId>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  };
  std::unordered_map<std::uint64_t, std::uint64_t> weights;
  for (const auto& [src, dst, w] : edges) {
    if (src == dst) throw Error("self-loop on " + src);
    if (w == 0) throw Error("zero weight on " + src + "->" + dst);
    weights[pair_key(intern(src), intern(dst))] += w;
  }
  for (const std::string& s : isolated) intern(s);
  InteractionGraph g;
  g.kind_ = kind;
  finalize(std::move(names), weights, g.nodes_, g.edges_);
  return g;
}

std::optional<NodeId> InteractionGraph::find(std::string_view actor) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), actor,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == nodes_.end() || *it != actor) return std::nullopt;
  return static_cast<NodeId>(it - nodes_.begin());
}

std::uint64_t InteractionGraph::weight(std::string_view src, std::string_view dst) const {
  auto s = find(src);
  auto d = find(dst);
  if (!s || !d) return 0;
  auto it = std::lower_bound(edges_.begin(), edges_.end(), WeightedEdge{*s, *d, 0},
                             [](const WeightedEdge& a, const WeightedEdge& b) {
                               return a.src != b.src ? a.src < b.src : a.dst < b.dst;
                             });
  if (it == edges_.end() || it->src != *s || it->dst != *d) return 0;
  return it->weight;
}

std::uint64_t InteractionGraph::total_weight() const {
  std::uint64_t total = 0;
  for (const WeightedEdge& e : edges_) total += e.weight;
  return total;
}

InteractionGraph build_interaction_network(const EventLog& log, EventKind kind, BuildStats* stats) {
  BuildStats local;
  std::unordered_map<std::string_view, NodeId> ids;
  std::vector<std::string> names;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = ids.try_emplace(s, static_cast<NodeId>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  };
  std::unordered_map<std::uint64_t, std::uint64_t> weights;
  for (const Event& e : log) {
    if (e.kind != kind) continue;
    if (!e.target_actor_id) {
      ++local.missing_target;
      continue;
    }
    if (*e.target_actor_id == e.actor_id) {
      ++local.self_interactions;
      continue;
    }
    ++local.counted;
    ++weights[pair_key(intern(e.actor_id), intern(*e.target_actor_id))];
  }
  InteractionGraph g;
  g.kind_ = kind;
  finalize(std::move(names), weights, g.nodes_, g.edges_);
  if (stats != nullptr) *stats = local;
  return g;
}

InteractionGraph k_core(const InteractionGraph& graph, std::size_t k) {
  const std::size_t n = graph.node_count();
  const auto pairs = edge_pairs(graph.edges());
  const Adjacency adj = build_adjacency(n, pairs);
  std::vector<std::size_t> degree(n);
  std::vector<char> removed(n, 0);
  std::vector<NodeId> queue;
  for (NodeId u = 0; u < n; ++u) {
    degree[u] = adj.degree(u);
    if (degree[u] < k) {
      removed[u] = 1;
      queue.push_back(u);
    }
  }
  while (!queue.empty()) {
    const NodeId u = queue.back();
    queue.pop_back();
    for (NodeId v : adj.neighbors(u)) {
      if (removed[v]) continue;
      if (--degree[v] < k) {
        removed[v] = 1;
        queue.push_back(v);
      }
    }
  }
  std::vector<NodeId> remap(n, 0);
  InteractionGraph out;
  out.kind_ = graph.kind();
  for (NodeId u = 0; u < n; ++u) {
    if (removed[u]) continue;
    remap[u] = static_cast<NodeId>(out.nodes_.size());
    out.nodes_.push_back(graph.nodes()[u]);
  }
  for (const WeightedEdge& e : graph.edges()) {
    if (removed[e.src] || removed[e.dst]) continue;
    out.edges_.push_back({remap[e.src], remap[e.dst], e.weight});
  }
  return out;
}

double modularity(const InteractionGraph& graph,
                  const std::map<std::string, std::size_t>& assignment) {
  std::vector<std::size_t> comm(graph.node_count());
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    auto it = assignment.find(graph.nodes()[u]);
    if (it == assignment.end()) throw Error("node not assigned: " + graph.nodes()[u]);
    comm[u] = it->second;
  }
  const auto proj = undirected_projection(graph.edges());
  double two_m = 0.0;
  std::unordered_map<std::size_t, double> internal;
  std::unordered_map<std::size_t, double> total;
  for (const WeightedEdge& e : proj) {
    const double w = static_cast<double>(e.weight);
    two_m += 2.0 * w;
    total[comm[e.src]] += w;
    total[comm[e.dst]] += w;
    if (comm[e.src] == comm[e.dst]) internal[comm[e.src]] += 2.0 * w;
  }
  if (two_m == 0.0) return 0.0;
  std::vector<std::size_t> keys;
  for (const auto& [c, t] : total) keys.push_back(c);
  std::sort(keys.begin(), keys.end());
  double q = 0.0;
  for (std::size_t c : keys) {
    const double tot = total[c] / two_m;
    q += internal[c] / two_m - tot * tot;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Louvain

namespace {

constexpr double kMinGain = 1e-7;

// Weighted undirected graph in CSR form. `loops[i]` is the weight folded into
// node i by aggregation; it contributes 2 * loops[i] to the node's degree.
struct LevelGraph {
  std::vector<std::size_t> offsets;
  std::vector<NodeId> targets;
  std::vector<double> weights;
  std::vector<double> loops;

  std::size_t size() const { return loops.size(); }
};

LevelGraph level_from_projection(std::size_t n, const std::vector<WeightedEdge>& proj) {
  LevelGraph g;
  g.loops.assign(n, 0.0);
  g.offsets.assign(n + 1, 0);
  for (const WeightedEdge& e : proj) {
    ++g.offsets[e.src + 1];
    ++g.offsets[e.dst + 1];
  }
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  g.targets.resize(g.offsets.back());
  g.weights.resize(g.offsets.back());
  std::vector<std::size_t> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (const WeightedEdge& e : proj) {
    g.targets[fill[e.src]] = e.dst;
    g.weights[fill[e.src]++] = static_cast<double>(e.weight);
    g.targets[fill[e.dst]] = e.src;
    g.weights[fill[e.dst]++] = static_cast<double>(e.weight);
  }
  return g;
}

std::vector<double> level_degrees(const LevelGraph& g) {
  std::vector<double> k(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 2.0 * g.loops[i];
    for (std::size_t p = g.offsets[i]; p < g.offsets[i + 1]; ++p) s += g.weights[p];
    k[i] = s;
  }
  return k;
}

double level_modularity(const LevelGraph& g, const std::vector<double>& k,
                        const std::vector<NodeId>& comm, double two_m) {
  if (two_m == 0.0) return 0.0;
  std::vector<double> in(g.size(), 0.0);
  std::vector<double> tot(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    tot[comm[i]] += k[i];
    in[comm[i]] += 2.0 * g.loops[i];
    for (std::size_t p = g.offsets[i]; p < g.offsets[i + 1]; ++p) {
      if (comm[g.targets[p]] == comm[i]) in[comm[i]] += g.weights[p];
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (tot[c] == 0.0 && in[c] == 0.0) continue;
    q += in[c] / two_m - (tot[c] / two_m) * (tot[c] / two_m);
  }
  return q;
}

// Repeated local-moving passes; returns community ids renumbered densely.
std::vector<NodeId> local_moving(const LevelGraph& g, std::mt19937_64& rng) {
  const std::size_t n = g.size();
  const std::vector<double> k = level_degrees(g);
  const double two_m = std::accumulate(k.begin(), k.end(), 0.0);
  std::vector<NodeId> comm(n);
  std::iota(comm.begin(), comm.end(), 0);
  if (two_m == 0.0) return comm;
  std::vector<double> tot(k);
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(n, -1.0);
  std::vector<NodeId> touched;
  double q = level_modularity(g, k, comm, two_m);
  for (;;) {
    std::size_t moves = 0;
    for (NodeId i : order) {
      const NodeId own = comm[i];
      touched.clear();
      for (std::size_t p = g.offsets[i]; p < g.offsets[i + 1]; ++p) {
        const NodeId c = comm[g.targets[p]];
        if (link[c] < 0.0) {
          link[c] = 0.0;
          touched.push_back(c);
        }
        link[c] += g.weights[p];
      }
      tot[own] -= k[i];
      NodeId best = own;
      double best_gain = std::max(link[own], 0.0) - tot[own] * k[i] / two_m;
      for (NodeId c : touched) {
        const double gain = link[c] - tot[c] * k[i] / two_m;
        if (gain > best_gain) {
          best_gain = gain;
          best = c;
        }
      }
      tot[best] += k[i];
      comm[i] = best;
      if (best != own) ++moves;
      for (NodeId c : touched) link[c] = -1.0;
    }
    const double next = level_modularity(g, k, comm, two_m);
    const bool improved = next - q > kMinGain;
    q = next;
    if (moves == 0 || !improved) break;
  }
  std::vector<NodeId> dense(n, static_cast<NodeId>(-1));
  NodeId next_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dense[comm[i]] == static_cast<NodeId>(-1)) dense[comm[i]] = next_id++;
    comm[i] = dense[comm[i]];
  }
  return comm;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<NodeId>& comm, std::size_t count) {
  LevelGraph out;
  out.loops.assign(count, 0.0);
  std::vector<std::unordered_map<NodeId, double>> rows(count);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeId ci = comm[i];
    out.loops[ci] += g.loops[i];
    for (std::size_t p = g.offsets[i]; p < g.offsets[i + 1]; ++p) {
      const NodeId cj = comm[g.targets[p]];
      if (cj == ci) {
        out.loops[ci] += 0.5 * g.weights[p];  // each internal edge is seen from both ends
      } else {
        rows[ci][cj] += g.weights[p];
      }
    }
  }
  out.offsets.assign(count + 1, 0);
  for (std::size_t c = 0; c < count; ++c) out.offsets[c + 1] = out.offsets[c] + rows[c].size();
  out.targets.reserve(out.offsets.back());
  out.weights.reserve(out.offsets.back());
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<std::pair<NodeId, double>> row(rows[c].begin(), rows[c].end());
    std::sort(row.begin(), row.end());
    for (auto [t, w] : row) {
      out.targets.push_back(t);
      out.weights.push_back(w);
    }
  }
  return out;
}

}  // namespace

Partition louvain_partition(const InteractionGraph& graph, std::uint64_t seed) {
  if (graph.empty()) throw Error("louvain_partition: empty graph");
  const std::size_t n = graph.node_count();
  std::mt19937_64 rng(seed);
  LevelGraph level = level_from_projection(n, undirected_projection(graph.edges()));
  std::vector<NodeId> membership(n);
  std::iota(membership.begin(), membership.end(), 0);

  const std::vector<double> k0 = level_degrees(level);
  const double two_m = std::accumulate(k0.begin(), k0.end(), 0.0);
  double q = 0.0;
  {
    std::vector<NodeId> singletons(n);
    std::iota(singletons.begin(), singletons.end(), 0);
    q = level_modularity(level, k0, singletons, two_m);
  }
  for (;;) {
    const std::vector<NodeId> comm = local_moving(level, rng);
    const std::size_t count =
        comm.empty() ? 0 : *std::max_element(comm.begin(), comm.end()) + std::size_t{1};
    const std::vector<double> k = level_degrees(level);
    const double next = level_modularity(level, k, comm, two_m);
    if (count == level.size() || next - q <= kMinGain) {
      if (next > q) {
        for (NodeId& m : membership) m = comm[m];
      }
      break;
    }
    for (NodeId& m : membership) m = comm[m];
    q = next;
    level = aggregate(level, comm, count);
  }

  Partition part;
  std::vector<std::size_t> dense(n, static_cast<std::size_t>(-1));
  std::size_t next_id = 0;
  for (NodeId u = 0; u < n; ++u) {
    std::size_t& d = dense[membership[u]];
    if (d == static_cast<std::size_t>(-1)) d = next_id++;
    part.assignment.emplace(graph.nodes()[u], d);
  }
  part.community_count = next_id;
  part.modularity = modularity(graph, part.assignment);
  return part;
}

UndirectedMetrics undirected_metrics(std::size_t n,
                                     std::span<const std::pair<NodeId, NodeId>> edges) {
  const Adjacency adj = build_adjacency(n, edges);
  UndirectedMetrics m;
  m.degree.resize(n);
  m.centrality.assign(n, 0.0);
  m.clustering.assign(n, 0.0);
  std::vector<std::size_t> mark(n, 0);
  for (NodeId u = 0; u < n; ++u) {
    const std::size_t d = adj.degree(u);
    m.degree[u] = d;
    if (n > 1) m.centrality[u] = static_cast<double>(d) / static_cast<double>(n - 1);
    if (d < 2) continue;
    for (NodeId v : adj.neighbors(u)) mark[v] = u + 1;
    std::size_t twice_links = 0;
    for (NodeId v : adj.neighbors(u)) {
      for (NodeId w : adj.neighbors(v)) {
        if (mark[w] == u + 1) ++twice_links;
      }
    }
    m.clustering[u] = static_cast<double>(twice_links) / static_cast<double>(d * (d - 1));
  }
  return m;
}

std::map<std::string, NodeMetrics> node_metrics(const InteractionGraph& graph) {
  const auto pairs = edge_pairs(graph.edges());
  const UndirectedMetrics um = undirected_metrics(graph.node_count(), pairs);
  std::vector<NodeMetrics> metrics(graph.node_count());
  for (const WeightedEdge& e : graph.edges()) {
    metrics[e.src].outdegree += e.weight;
    metrics[e.dst].indegree += e.weight;
  }
  std::map<std::string, NodeMetrics> out;
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    metrics[u].degree_centrality = um.centrality[u];
    metrics[u].clustering = um.clustering[u];
    out.emplace_hint(out.end(), graph.nodes()[u], metrics[u]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') break;
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_graph(const GraphView& graph, const ClassMap* classes, ExportFormat format) {
  std::ostringstream out;
  if (format == ExportFormat::EdgeCsv) {
    out << "src,dst,weight\n";
    for (const WeightedEdge& e : graph.edges) {
      out << csv_field(graph.nodes[e.src]) << ',' << csv_field(graph.nodes[e.dst]) << ','
          << e.weight << '\n';
    }
    return out.str();
  }
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<gexf xmlns=\"http://gexf.net/1.3\" "
         "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
         "xsi:schemaLocation=\"http://gexf.net/1.3 http://gexf.net/1.3/gexf.xsd\" "
         "version=\"1.3\">\n"
      << "  <meta>\n    <creator>botscope</creator>\n  </meta>\n"
      << "  <graph mode=\"static\" defaultedgetype=\""
      << (graph.directed ? "directed" : "undirected") << "\">\n";
  if (classes != nullptr) {
    out << "    <attributes class=\"node\">\n"
        << "      <attribute id=\"class\" title=\"class\" type=\"string\"/>\n"
        << "    </attributes>\n";
  }
  out << "    <nodes>\n";
  for (const std::string& node : graph.nodes) {
    const std::string id = xml_escape(node);
    out << "      <node id=\"" << id << "\" label=\"" << id << "\"";
    if (classes != nullptr) {
      out << ">\n        <attvalues>\n          <attvalue for=\"class\" value=\""
          << to_string(class_of(*classes, node)) << "\"/>\n        </attvalues>\n      </node>\n";
    } else {
      out << "/>\n";
    }
  }
  out << "    </nodes>\n    <edges>\n";
  std::size_t id = 0;
  for (const WeightedEdge& e : graph.edges) {
    out << "      <edge id=\"" << id++ << "\" source=\"" << xml_escape(graph.nodes[e.src])
        << "\" target=\"" << xml_escape(graph.nodes[e.dst]) << "\" weight=\"" << e.weight
        << "\"/>\n";
  }
  out << "    </edges>\n  </graph>\n</gexf>\n";
  return out.str();
}

void export_graph(const GraphView& graph, const ClassMap* classes, ExportFormat format,
                  const std::string& path) {
  write_file(path, render_graph(graph, classes, format));
}

}  // namespace botscope
