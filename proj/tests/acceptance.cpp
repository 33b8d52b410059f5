// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "botscope/pipeline.hpp"
#include "botscope/synthetic.hpp"
#include "oracles.hpp"
#include "random_logs.hpp"

using namespace botscope;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Event make_event(std::string id, EventKind kind, std::string actor, std::optional<std::string> target,
                 std::string object, std::int64_t ts) {
  Event e;
  e.event_id = std::move(id);
  e.kind = kind;
  e.actor_id = std::move(actor);
  e.target_actor_id = std::move(target);
  e.object_id = std::move(object);
  e.timestamp = ts;
  e.community = "en";
  return e;
}

double value_of(const std::vector<ActorValue>& values, const std::string& actor) {
  for (const auto& v : values) {
    if (v.actor == actor) return v.value;
  }
  return -1.0;
}

oracle::PairWeights as_pairs(const CoordinationNetwork& n) {
  oracle::PairWeights out;
  for (const auto& e : n.edges) out[{n.nodes[e.src], n.nodes[e.dst]}] = e.weight;
  return out;
}

std::vector<double> noise(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Outcome cascade_worked_example() {
  const auto start = Clock::now();
  std::vector<Event> events;
  for (int u = 1; u <= 3; ++u) {
    events.push_back(make_event("p" + std::to_string(u), EventKind::Post, "inf", std::nullopt, "u" + std::to_string(u), u));
  }
  const double before = value_of(extract_cascades(normalize_log(events), Platform::X).sizes, "inf");
  for (int u = 1; u <= 3; ++u) {
    for (int r = 0; r < 10; ++r) {
      events.push_back(make_event("r" + std::to_string(u) + "_" + std::to_string(r), EventKind::Retweet,
                                  "fan" + std::to_string(r), "inf", "u" + std::to_string(u), 10 + r));
    }
  }
  const double after = value_of(extract_cascades(normalize_log(events), Platform::X).sizes, "inf");
  const double ms = seconds_since(start) * 1000.0;
  std::ostringstream d;
  d << "size " << before << " -> " << after << " in " << ms << " ms";
  return {before == 3.0 && after == 30.0 && ms < 1.0, d.str()};
}

Outcome coordination_oracle() {
  const std::vector<std::int64_t> x_windows{15, 25, 35, 45, 55};
  const std::vector<std::int64_t> reddit_windows{120, 240, 360, 480, 600};
  const auto start = Clock::now();
  std::size_t mismatches = 0, networks = 0;
  double library_seconds = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const EventLog log = normalize_log(testlogs::co_action_events(seed, 10000, 300, 400, 900));
    const std::vector<Event> sorted(log.begin(), log.end());
    for (auto [kind, windows] : {std::pair{CoAction::CoRetweet, &x_windows}, std::pair{CoAction::CoReply, &reddit_windows}}) {
      const auto lib_start = Clock::now();
      const auto sweep = window_sweep(log, kind, *windows);
      // The single-window entry point is checked at the widest window too.
      const auto single = co_action_network(log, kind, windows->back());
      library_seconds += seconds_since(lib_start);
      const auto expected = oracle::co_action_brute_force_windows(sorted, event_kind_of(kind), *windows);
      for (std::size_t w = 0; w < windows->size(); ++w) {
        ++networks;
        mismatches += as_pairs(sweep.entries[w].network) == expected[w] ? 0 : 1;
      }
      ++networks;
      mismatches += as_pairs(single) == expected.back() ? 0 : 1;
    }
  }
  const double total = seconds_since(start);
  std::ostringstream d;
  d << networks - mismatches << "/" << networks << " networks equal the oracle; library " << library_seconds
    << " s, suite " << total << " s";
  return {mismatches == 0 && total < 60.0, d.str()};
}

Outcome kcore_oracle() {
  std::mt19937_64 rng(3);
  std::size_t failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const double p = std::array<double, 3>{0.02, 0.05, 0.1}[trial % 3];
    oracle::SimpleGraph sg(n);
    std::vector<InteractionGraph::EdgeTriple> edges;
    std::bernoulli_distribution coin(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && coin(rng)) {
          sg.add(i, j);
          edges.emplace_back("n" + std::to_string(i), "n" + std::to_string(j), 1);
        }
      }
    }
    std::vector<std::string> all;
    for (std::size_t i = 0; i < n; ++i) all.push_back("n" + std::to_string(i));
    const auto g = InteractionGraph::from_edges(EventKind::Retweet, edges, all);
    const auto core = k_core(g, 3);
    const auto alive = oracle::k_core_alive(sg, 3);
    bool ok = true;
    std::size_t expected_nodes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      expected_nodes += alive[i] ? 1 : 0;
      ok = ok && core.find("n" + std::to_string(i)).has_value() == alive[i];
    }
    ok = ok && core.node_count() == expected_nodes;
    for (const auto& e : g.edges()) {
      const auto& s = g.nodes()[e.src];
      const auto& t = g.nodes()[e.dst];
      const bool kept = alive[std::stoul(s.substr(1))] && alive[std::stoul(t.substr(1))];
      ok = ok && core.weight(s, t) == (kept ? e.weight : 0u);
    }
    failures += ok ? 0 : 1;
  }
  return {failures == 0, std::to_string(100 - failures) + "/100 graphs equal the peel oracle"};
}

Outcome louvain_two_cliques() {
  std::vector<InteractionGraph::EdgeTriple> edges;
  for (char side : {'a', 'b'}) {
    for (int i = 0; i < 8; ++i) {
      for (int j = i + 1; j < 8; ++j) edges.emplace_back(side + std::to_string(i), side + std::to_string(j), 1);
    }
  }
  edges.emplace_back("a0", "b0", 1);
  const auto g = InteractionGraph::from_edges(EventKind::Retweet, edges);
  std::vector<std::vector<double>> w(g.node_count(), std::vector<double>(g.node_count(), 0.0));
  for (const auto& e : g.edges()) {
    w[e.src][e.dst] += static_cast<double>(e.weight);
    w[e.dst][e.src] += static_cast<double>(e.weight);
  }
  int recovered = 0;
  double worst_q_error = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto part = louvain_partition(g, seed);
    bool planted = part.community_count == 2;
    for (int i = 1; i < 8; ++i) {
      planted = planted && part.assignment.at("a" + std::to_string(i)) == part.assignment.at("a0") &&
                part.assignment.at("b" + std::to_string(i)) == part.assignment.at("b0");
    }
    planted = planted && part.assignment.at("a0") != part.assignment.at("b0");
    recovered += planted ? 1 : 0;
    std::vector<int> community(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      community[i] = static_cast<int>(part.assignment.at(g.nodes()[i]));
    }
    worst_q_error = std::max(worst_q_error, std::fabs(part.modularity - oracle::modularity_dense(w, community)));
  }
  std::ostringstream d;
  d << recovered << "/100 seeds recover the planted partition; max |Q - oracle| " << worst_q_error;
  return {recovered >= 95 && worst_q_error <= 1e-9, d.str()};
}

Outcome granger_fidelity() {
  int detected = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(500 + seed);
    const auto x = noise(rng, 500);
    const auto e = noise(rng, 500);
    std::vector<double> y(500);
    y[0] = e[0];
    for (std::size_t t = 1; t < 500; ++t) y[t] = 0.8 * x[t - 1] + e[t];
    detected += stats::granger_test(x, y, 1).lags[0].p_value < 0.05 ? 1 : 0;
  }
  int rejections = 0;
  for (int seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(9000 + seed);
    const auto x = noise(rng, 500);
    const auto y = noise(rng, 500);
    rejections += stats::granger_test(x, y, 1, 0.05).lags[0].causes ? 1 : 0;
  }
  const double fpr = rejections / 200.0;
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int fixture = 0; fixture < 20; ++fixture) {
    const std::size_t n = 60 + 11 * fixture;
    const auto x = noise(rng, n);
    const auto e = noise(rng, n);
    std::vector<double> y(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) y[t] = 0.4 * y[t - 1] + 0.1 * (fixture % 5) * x[t - 1] + e[t];
    for (const auto& lag : stats::granger_test(x, y, 5).lags) {
      const double expected = oracle::granger_f(x, y, lag.lag);
      worst = std::max(worst, std::fabs(lag.f - expected) / std::max(1.0, std::fabs(expected)));
    }
  }
  std::ostringstream d;
  d << "detected " << detected << "/100, white-noise FPR " << fpr << ", max F error " << worst;
  return {detected >= 95 && fpr >= 0.01 && fpr <= 0.10 && worst <= 1e-8, d.str()};
}

Outcome stat_fixtures() {
  const auto welch = stats::welch_t(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{2, 3, 4, 5, 6});
  const auto ks = stats::ks_test(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 3, 4, 5});
  const double r = stats::pearson_r(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4});
  const bool ok = std::fabs(welch.statistic + 1.0) < 1e-12 && std::fabs(welch.df - 8.0) < 1e-12 &&
                  std::fabs(welch.p_value - 0.3466) <= 1e-3 && ks.statistic == 0.25 && std::fabs(r - 0.8) <= 1e-12;
  std::ostringstream d;
  d.precision(12);
  d << "welch t " << welch.statistic << " df " << welch.df << " p " << welch.p_value << "; KS D " << ks.statistic
    << "; pearson " << r;
  return {ok, d.str()};
}

Outcome engagement_identities() {
  std::size_t violations = 0, rows = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    ClassMap classes;
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kAllClasses) - 1);
    for (std::size_t i = 0; i < 300; ++i) classes["a" + std::to_string(i)] = kAllClasses[pick(rng)];
    auto events = testlogs::co_action_events(seed + 100, 1000);
    std::uniform_int_distribution<int> com(0, 2);
    for (auto& e : events) e.community = std::string(1, static_cast<char>('a' + com(rng)));
    const auto report = engagement_metrics(normalize_log(events), classes, Platform::X);
    for (const auto& row : report.rows) {
      if (row.metric != EngagementMetric::H2br) continue;
      ++rows;
      const auto* rtp = report.find(row.community, row.faction, EngagementMetric::Rtp);
      const auto* rr = report.find(row.community, row.faction, EngagementMetric::Rr);
      if (!rtp || !rr || row.numerator != rtp->numerator + rr->numerator ||
          row.denominator != rtp->denominator + rr->denominator) {
        ++violations;
      }
    }
  }
  ClassMap classes{{"H1", UserClass::AHuman}, {"H2", UserClass::AHuman}, {"B1", UserClass::ABot}};
  const auto hand = engagement_metrics(
      normalize_log({make_event("1", EventKind::Retweet, "H1", "B1", "o", 0),
                     make_event("2", EventKind::Retweet, "H1", "H2", "o", 1),
                     make_event("3", EventKind::Reply, "H2", "B1", "o", 2),
                     make_event("4", EventKind::Reply, "H2", "H1", "o", 3)}),
      classes, Platform::X);
  bool hand_ok = true;
  for (auto m : {EngagementMetric::Rtp, EngagementMetric::Rr, EngagementMetric::H2br}) {
    const auto* row = hand.find("all", Faction::All, m);
    hand_ok = hand_ok && row && row->value() == 0.5;
  }
  std::ostringstream d;
  d << violations << " identity violations over " << rows << " H2BR rows; hand log " << (hand_ok ? "0.5/0.5/0.5" : "wrong");
  return {violations == 0 && rows > 0 && hand_ok, d.str()};
}

PipelineConfig reference_config(const fs::path& dir, const std::string& out) {
  const std::string json = R"({"inputs": [{"path": "syn/events.jsonl"}],
    "bot_scores": "syn/bot_scores.csv", "stance": {"seeds": "syn/seeds.csv"},
    "toxicity": {"scorer": "stub", "lexicon": "syn/lexicon.txt"}, "output": ")" + out + "\"}";
  return PipelineConfig::from_json(json, dir.string());
}

Outcome planted_recovery(const fs::path& dir) {
  const SyntheticSpec spec;
  const SyntheticLog data = generate_synthetic_log(spec);
  write_synthetic_bundle(spec, data, (dir / "syn").string());
  const PipelineResult r = run_pipeline(reference_config(dir, "run1"));
  std::ostringstream d;

  // (a) class shares
  bool shares = true;
  for (UserClass c : kAllClasses) {
    std::size_t truth = 0;
    for (const auto& [a, cls] : data.truth) truth += cls == c ? 1 : 0;
    shares = shares && r.classification.count(c) == truth && r.classification.total == data.truth.size();
  }
  d << "shares " << (shares ? "exact" : "differ");

  // (b) stance accuracy
  std::size_t correct = 0;
  for (const auto& [a, cls] : data.truth) {
    auto it = r.stances.find(a);
    correct += it != r.stances.end() && it->second == stance_of(cls) ? 1 : 0;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(data.truth.size());
  d << "; stance accuracy " << accuracy;

  // (c) planted pairs at every window
  std::size_t found = 0, needed = 0;
  for (const auto& pr : r.platforms) {
    if (pr.platform != Platform::X) continue;
    for (const auto& entry : pr.sweep.entries) {
      if (entry.network.window_seconds < 15) continue;
      for (const auto& [a, b] : data.planted_pairs) {
        ++needed;
        found += entry.network.weight(a, b) > 0 ? 1 : 0;
      }
    }
  }
  d << "; planted pairs " << found << "/" << needed;

  // (d) lead-lag
  std::optional<double> lag_p;
  for (const auto& g : r.series.granger) {
    if (g.cause == spec.lead_lag.cause && g.effect == spec.lead_lag.effect) {
      for (const auto& lag : g.lags) {
        if (lag.lag == static_cast<std::size_t>(spec.lead_lag.lag_days)) lag_p = lag.p_value;
      }
    }
  }
  d << "; Granger " << spec.lead_lag.cause << "->" << spec.lead_lag.effect << " lag " << spec.lead_lag.lag_days
    << " p " << (lag_p ? *lag_p : -1.0);

  // (e) toxicity ordering within each community
  std::size_t sign_ok = 0, sign_checked = 0;
  if (r.toxicity) {
    const auto& groups = r.toxicity->groups;
    auto planted = [&](UserClass c) {
      for (std::size_t i = 0; i < 4; ++i) {
        if (kKnownClasses[i] == c) return spec.toxicity[i];
      }
      return 0.0;
    };
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = 0; j < groups.size(); ++j) {
        if (i == j || groups[i].community != groups[j].community) continue;
        const double diff = planted(groups[i].cls) - planted(groups[j].cls);
        if (diff == 0.0) continue;
        ++sign_checked;
        const auto& t = r.toxicity->matrix[i][j];
        sign_ok += t && (t->statistic > 0) == (diff > 0) ? 1 : 0;
      }
    }
  }
  d << "; toxicity signs " << sign_ok << "/" << sign_checked;

  const bool ok = shares && accuracy >= 0.95 && needed > 0 && found == needed && lag_p && *lag_p < 0.05 &&
                  sign_checked > 0 && sign_ok == sign_checked;
  return {ok, d.str()};
}

std::map<std::string, std::string> bundle_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != "timings.json") {
      out[fs::relative(entry.path(), dir).string()] = read_file(entry.path().string());
    }
  }
  return out;
}

// Runs after planted_recovery, which leaves run1 and the synthetic inputs.
Outcome determinism(const fs::path& dir) {
  run_pipeline(reference_config(dir, "run2"));
  const auto a = bundle_bytes(dir / "run1");
  const auto b = bundle_bytes(dir / "run2");
  std::size_t differing = 0;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    differing += it == b.end() || it->second != bytes ? 1 : 0;
  }
  differing += b.size() > a.size() ? b.size() - a.size() : 0;
  std::ostringstream d;
  d << a.size() << " files compared, " << differing << " differ (timings.json excluded)";
  return {!a.empty() && differing == 0, d.str()};
}

Outcome performance(const fs::path& dir) {
  const std::string path = (dir / "million.jsonl").string();
  std::size_t generated = 0;
  {
    SyntheticSpec spec;
    spec.seed = 11;
    spec.actors = {600, 400, 300, 200};
    spec.rate = 11.5;
    SyntheticLog data = generate_synthetic_log(spec);
    generated = data.log.size();
    std::ostringstream out;
    write_events_jsonl(out, data.log);
    write_file(path, out.str());
  }
  const auto start = Clock::now();
  ParseResult parsed = parse_events(read_file(path), Adapter::Canonical);
  const EventLog log = resolve_reply_targets(normalize_log(std::move(parsed.events)));
  const double t_ingest = seconds_since(start);
  const auto g = build_interaction_network(log, EventKind::Retweet);
  const auto core = k_core(g, 3);
  const auto part = louvain_partition(core, 1);
  const double t_graph = seconds_since(start);
  const auto cascades = extract_cascades(log, Platform::X);
  const double t_cascades = seconds_since(start);
  const std::vector<std::int64_t> windows{15, 25, 35, 45, 55};
  const auto sweep = window_sweep(log, CoAction::CoRetweet, windows);
  const double total = seconds_since(start);
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  const double peak_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;  // ru_maxrss is in KiB on Linux
  fs::remove(path);
  std::ostringstream d;
  d << log.size() << " events (" << generated << " generated); ingest " << t_ingest << " s, graph "
    << t_graph - t_ingest << " s (" << g.node_count() << " nodes, " << part.community_count << " communities), cascades "
    << t_cascades - t_graph << " s (" << cascades.cascades.size() << "), sweep " << total - t_cascades << " s ("
    << sweep.entries.back().network.edges.size() << " edges at 55 s); total " << total << " s, peak RSS " << peak_mb
    << " MB";
  return {log.size() >= 1000000 && total < 60.0 && peak_mb < 2048.0, d.str()};
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "botscope_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 cascade worked example", cascade_worked_example},
      {"2 coordination oracle", coordination_oracle},
      {"3 k-core oracle", kcore_oracle},
      {"4 Louvain two cliques", louvain_two_cliques},
      {"5 Granger fidelity", granger_fidelity},
      {"6 statistical fixtures", stat_fixtures},
      {"7 engagement identities", engagement_identities},
      {"8 planted recovery", [&] { return planted_recovery(dir); }},
      {"9 performance 1M events", [&] { return performance(dir); }},
      {"10 determinism", [&] { return determinism(dir); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  fs::remove_all(dir);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
