#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "botscope/graph.hpp"
#include "oracles.hpp"

using namespace botscope;

namespace {

Event retweet(std::string id, std::string actor, std::string target, std::int64_t ts = 0) {
  Event e;
  e.event_id = std::move(id);
  e.kind = EventKind::Retweet;
  e.actor_id = std::move(actor);
  e.target_actor_id = std::move(target);
  e.object_id = "obj";
  e.timestamp = ts;
  e.community = "en";
  return e;
}

InteractionGraph undirected(const std::vector<std::pair<std::string, std::string>>& pairs,
                            std::vector<std::string> isolated = {}) {
  std::vector<InteractionGraph::EdgeTriple> edges;
  for (const auto& [a, b] : pairs) edges.emplace_back(a, b, 1);
  return InteractionGraph::from_edges(EventKind::Retweet, edges, std::move(isolated));
}

InteractionGraph complete(const std::vector<std::string>& names) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) pairs.emplace_back(names[i], names[j]);
  return undirected(pairs);
}

std::vector<std::vector<double>> dense_weights(const InteractionGraph& g) {
  std::vector<std::vector<double>> w(g.node_count(), std::vector<double>(g.node_count(), 0.0));
  for (const auto& e : g.edges()) {
    w[e.src][e.dst] += static_cast<double>(e.weight);
    w[e.dst][e.src] += static_cast<double>(e.weight);
  }
  return w;
}

InteractionGraph two_cliques(std::size_t size) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int side = 0; side < 2; ++side) {
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t j = i + 1; j < size; ++j)
        pairs.emplace_back(std::string(1, static_cast<char>('a' + side)) + std::to_string(i),
                           std::string(1, static_cast<char>('a' + side)) + std::to_string(j));
  }
  pairs.emplace_back("a0", "b0");
  return undirected(pairs);
}

}  // namespace

TEST(BuildInteractionNetwork, AggregatesRepeatedRetweets) {
  auto log = normalize_log({retweet("1", "u1", "u2"), retweet("2", "u1", "u2"), retweet("3", "u1", "u2")});
  auto g = build_interaction_network(log, EventKind::Retweet);
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.weight("u1", "u2"), 3u);
  EXPECT_EQ(g.weight("u2", "u1"), 0u);
}

TEST(BuildInteractionNetwork, SkipsSelfRetweets) {
  BuildStats stats;
  auto g = build_interaction_network(normalize_log({retweet("1", "u1", "u1")}), EventKind::Retweet, &stats);
  EXPECT_EQ(g.edge_count(), 0u);
  EXPECT_EQ(g.node_count(), 0u);
  EXPECT_EQ(stats.self_interactions, 1u);
}

TEST(BuildInteractionNetwork, WeightedIndegreeMatchesEventCount) {
  auto log = normalize_log({retweet("1", "u1", "u2"), retweet("2", "u1", "u2"), retweet("3", "u3", "u2")});
  auto g = build_interaction_network(log, EventKind::Retweet);
  // Counting oracle straight over the raw events.
  std::uint64_t expected = 0;
  for (const auto& e : log) expected += (e.kind == EventKind::Retweet && e.target_actor_id == "u2") ? 1 : 0;
  EXPECT_EQ(node_metrics(g).at("u2").indegree, expected);
  EXPECT_EQ(expected, 3u);
}

TEST(BuildInteractionNetwork, DegreeSumsEqualCountedEvents) {
  std::mt19937 rng(3);
  std::vector<Event> ev;
  for (int i = 0; i < 500; ++i) {
    Event e = retweet(std::to_string(i), "u" + std::to_string(rng() % 30), "u" + std::to_string(rng() % 30));
    if (i % 11 == 0) e.kind = EventKind::Reply;
    ev.push_back(e);
  }
  BuildStats stats;
  auto g = build_interaction_network(normalize_log(ev), EventKind::Retweet, &stats);
  std::uint64_t in = 0, out = 0;
  for (const auto& [id, m] : node_metrics(g)) {
    in += m.indegree;
    out += m.outdegree;
  }
  EXPECT_EQ(in, stats.counted);
  EXPECT_EQ(out, stats.counted);
  EXPECT_EQ(g.total_weight(), stats.counted);
}

TEST(InteractionGraph, RejectsSelfLoopsAndZeroWeights) {
  EXPECT_THROW(InteractionGraph::from_edges(EventKind::Retweet, {{"a", "a", 1}}), Error);
  EXPECT_THROW(InteractionGraph::from_edges(EventKind::Retweet, {{"a", "b", 0}}), Error);
}

TEST(KCore, CompleteGraphIsItsOwnThreeCore) {
  auto k4 = complete({"a", "b", "c", "d"});
  EXPECT_EQ(k_core(k4, 3), k4);
}

TEST(KCore, PathHasEmptyThreeCore) {
  auto path = undirected({{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "e"}});
  EXPECT_TRUE(k_core(path, 3).empty());
}

TEST(KCore, PendantIsPeeled) {
  auto g = undirected({{"a", "b"}, {"a", "c"}, {"a", "d"}, {"b", "c"}, {"b", "d"}, {"c", "d"}, {"p", "a"}});
  auto core = k_core(g, 3);
  EXPECT_EQ(core, complete({"a", "b", "c", "d"}));
}

TEST(KCore, MatchesRepeatedDeletionOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 120;
    const double p = std::array<double, 3>{0.02, 0.05, 0.1}[trial % 3];
    oracle::SimpleGraph sg(n);
    std::vector<InteractionGraph::EdgeTriple> edges;
    std::bernoulli_distribution coin(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && coin(rng)) {
          sg.add(i, j);
          edges.emplace_back("n" + std::to_string(i), "n" + std::to_string(j), 1 + rng() % 3);
        }
      }
    }
    std::vector<std::string> isolated;
    for (std::size_t i = 0; i < n; ++i) isolated.push_back("n" + std::to_string(i));
    auto g = InteractionGraph::from_edges(EventKind::Retweet, edges, isolated);
    for (std::size_t k : {1u, 2u, 3u, 4u}) {
      auto core = k_core(g, k);
      auto alive = oracle::k_core_alive(sg, k);
      std::size_t expected_nodes = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) ++expected_nodes;
        EXPECT_EQ(core.find("n" + std::to_string(i)).has_value(), alive[i]);
      }
      EXPECT_EQ(core.node_count(), expected_nodes);
      for (const auto& e : g.edges()) {
        const auto& s = g.nodes()[e.src];
        const auto& d = g.nodes()[e.dst];
        const bool kept = alive[std::stoul(s.substr(1))] && alive[std::stoul(d.substr(1))];
        EXPECT_EQ(core.weight(s, d), kept ? e.weight : 0u);
      }
    }
  }
}

TEST(Louvain, SingleNodeIsOneCommunityWithZeroQ) {
  auto g = InteractionGraph::from_edges(EventKind::Retweet, {}, {"solo"});
  auto part = louvain_partition(g, 1);
  EXPECT_EQ(part.community_count, 1u);
  EXPECT_EQ(part.assignment.at("solo"), 0u);
  EXPECT_DOUBLE_EQ(part.modularity, 0.0);
}

TEST(Louvain, EmptyGraphThrows) {
  EXPECT_THROW(louvain_partition(InteractionGraph{}, 1), Error);
}

TEST(Louvain, TwoK4CliquesWithBridge) {
  auto g = two_cliques(4);
  // Exhaustive search over all 4140 partitions of the 8 nodes.
  const auto [best_q, best] = oracle::best_partition(dense_weights(g));
  EXPECT_NEAR(best_q, 0.4231, 5e-5);
  EXPECT_NEAR(best_q, 2.0 * (6.0 / 13.0 - 0.25), 1e-12);

  auto part = louvain_partition(g, 42);
  EXPECT_EQ(part.community_count, 2u);
  EXPECT_NEAR(part.modularity, best_q, 1e-12);
  for (int i = 1; i < 4; ++i) {
    EXPECT_EQ(part.assignment.at("a" + std::to_string(i)), part.assignment.at("a0"));
    EXPECT_EQ(part.assignment.at("b" + std::to_string(i)), part.assignment.at("b0"));
  }
  EXPECT_NE(part.assignment.at("a0"), part.assignment.at("b0"));
}

TEST(Louvain, TwoDisjointTriangles) {
  auto g = undirected({{"a", "b"}, {"b", "c"}, {"a", "c"}, {"x", "y"}, {"y", "z"}, {"x", "z"}});
  const auto [best_q, best] = oracle::best_partition(dense_weights(g));
  EXPECT_NEAR(best_q, 0.5, 1e-12);
  auto part = louvain_partition(g, 3);
  EXPECT_EQ(part.community_count, 2u);
  EXPECT_NEAR(part.modularity, 0.5, 1e-12);
}

TEST(Louvain, ReciprocalEdgesAreSummed) {
  auto g = InteractionGraph::from_edges(EventKind::Retweet, {{"a", "b", 2}, {"b", "a", 3}, {"b", "c", 1}});
  std::map<std::string, std::size_t> together{{"a", 0}, {"b", 0}, {"c", 0}};
  EXPECT_NEAR(modularity(g, together), 0.0, 1e-15);
  std::map<std::string, std::size_t> split{{"a", 0}, {"b", 0}, {"c", 1}};
  // Projection weights: {a,b}=5, {b,c}=1; 2m=12; k=(5,6,1).
  const double expected = (10.0 / 12 - (11.0 / 12) * (11.0 / 12)) + (0.0 - (1.0 / 12) * (1.0 / 12));
  EXPECT_NEAR(modularity(g, split), expected, 1e-15);
}

TEST(Louvain, PropertiesOnRandomGraphs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<InteractionGraph::EdgeTriple> edges;
    std::bernoulli_distribution coin(0.08);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && coin(rng)) edges.emplace_back("n" + std::to_string(i), "n" + std::to_string(j), 1 + rng() % 4);
    std::vector<std::string> iso;
    for (std::size_t i = 0; i < n; ++i) iso.push_back("n" + std::to_string(i));
    auto g = InteractionGraph::from_edges(EventKind::Retweet, edges, iso);
    auto part = louvain_partition(g, trial);
    ASSERT_EQ(part.assignment.size(), g.node_count());

    std::vector<int> comm(g.node_count());
    std::vector<int> singletons(g.node_count());
    for (NodeId u = 0; u < g.node_count(); ++u) {
      comm[u] = static_cast<int>(part.assignment.at(g.nodes()[u]));
      singletons[u] = static_cast<int>(u);
    }
    const auto w = dense_weights(g);
    EXPECT_NEAR(part.modularity, oracle::modularity_dense(w, comm), 1e-9);
    EXPECT_GE(part.modularity + 1e-12, oracle::modularity_dense(w, singletons));
    EXPECT_GE(part.modularity, -0.5);
    EXPECT_LE(part.modularity, 1.0);
    EXPECT_EQ(louvain_partition(g, trial).assignment, part.assignment);  // deterministic per seed
  }
}

TEST(NodeMetrics, StarCenter) {
  auto g = undirected({{"l1", "c"}, {"l2", "c"}, {"l3", "c"}, {"l4", "c"}});
  auto m = node_metrics(g);
  EXPECT_DOUBLE_EQ(m.at("c").degree_centrality, 1.0);
  EXPECT_DOUBLE_EQ(m.at("c").clustering, 0.0);
  EXPECT_DOUBLE_EQ(m.at("l1").degree_centrality, 0.25);
  EXPECT_EQ(m.at("c").indegree, 4u);
}

TEST(NodeMetrics, TriangleIsFullyClustered) {
  auto m = node_metrics(undirected({{"a", "b"}, {"b", "c"}, {"c", "a"}}));
  for (const auto& [id, nm] : m) EXPECT_DOUBLE_EQ(nm.clustering, 1.0);
}

TEST(NodeMetrics, K4WithPendant) {
  auto g = undirected({{"a", "b"}, {"a", "c"}, {"a", "v"}, {"b", "c"}, {"b", "v"}, {"c", "v"}, {"p", "v"}});
  auto m = node_metrics(g);
  // Neighbors of v: a, b, c, p -> 6 pairs, 3 linked (ab, ac, bc).
  EXPECT_DOUBLE_EQ(m.at("v").clustering, 0.5);
  EXPECT_DOUBLE_EQ(m.at("p").clustering, 0.0);
  EXPECT_DOUBLE_EQ(m.at("a").clustering, 1.0);
}

TEST(NodeMetrics, SingleNodeCentralityIsZero) {
  auto m = node_metrics(InteractionGraph::from_edges(EventKind::Retweet, {}, {"x"}));
  EXPECT_DOUBLE_EQ(m.at("x").degree_centrality, 0.0);
}

TEST(ExportGraph, EdgeCsv) {
  auto g = InteractionGraph::from_edges(EventKind::Retweet, {{"u1", "u2", 3}});
  EXPECT_EQ(render_graph(g.view(), nullptr, ExportFormat::EdgeCsv), "src,dst,weight\nu1,u2,3\n");
  EXPECT_EQ(render_graph(InteractionGraph{}.view(), nullptr, ExportFormat::EdgeCsv), "src,dst,weight\n");
}

TEST(ExportGraph, GexfCarriesClasses) {
  auto g = InteractionGraph::from_edges(EventKind::Retweet, {{"u1", "u2", 3}, {"u<3>", "u2", 1}});
  ClassMap classes{{"u1", UserClass::ABot}, {"u2", UserClass::BHuman}};
  const std::string xml = render_graph(g.view(), &classes, ExportFormat::Gexf);
  EXPECT_NE(xml.find("version=\"1.3\""), std::string::npos);
  EXPECT_NE(xml.find("<node id=\"u1\" label=\"u1\">\n        <attvalues>\n          <attvalue for=\"class\" value=\"A_BOT\"/>"),
            std::string::npos);
  EXPECT_NE(xml.find("value=\"B_HUMAN\""), std::string::npos);
  EXPECT_NE(xml.find("id=\"u&lt;3&gt;\""), std::string::npos);
  EXPECT_NE(xml.find("value=\"UNKNOWN\""), std::string::npos);
  EXPECT_NE(xml.find("source=\"u1\" target=\"u2\" weight=\"3\""), std::string::npos);
}

TEST(ExportGraph, UnwritableDestinationThrows) {
  auto g = InteractionGraph::from_edges(EventKind::Retweet, {{"u1", "u2", 3}});
  EXPECT_THROW(export_graph(g.view(), nullptr, ExportFormat::EdgeCsv, "/nonexistent-dir/x.csv"), IoError);
  const auto path = std::filesystem::temp_directory_path() / "botscope_graph_test.csv";
  export_graph(g.view(), nullptr, ExportFormat::EdgeCsv, path.string());
  EXPECT_EQ(read_file(path.string()), "src,dst,weight\nu1,u2,3\n");
  std::filesystem::remove(path);
}
