#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <set>

#include "botscope/pipeline.hpp"
#include "botscope/synthetic.hpp"

using namespace botscope;
namespace fs = std::filesystem;

namespace {

EventLog load_events(const std::string& path, unsigned jobs) {
  ParseOptions opts;
  opts.jobs = jobs;
  ParseResult r = parse_events(read_file(path), Adapter::Canonical, opts);
  for (const auto& e : r.errors) std::cerr << "warning: " << path << ":" << e.line << ": " << e.message << "\n";
  return resolve_reply_targets(normalize_log(std::move(r.events)));
}

// Reads the actor_id and class columns of a classes CSV.
ClassMap load_classes(const std::string& path) {
  ClassMap classes;
  if (path.empty()) return classes;
  const std::string text = read_file(path);
  std::size_t actor_col = 0, class_col = 0;
  bool header = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (header) {
      auto a = std::find(cols.begin(), cols.end(), "actor_id");
      auto c = std::find(cols.begin(), cols.end(), "class");
      if (a == cols.end() || c == cols.end()) throw Error(path + ": needs actor_id and class columns");
      actor_col = static_cast<std::size_t>(a - cols.begin());
      class_col = static_cast<std::size_t>(c - cols.begin());
      header = false;
      continue;
    }
    if (cols.size() <= std::max(actor_col, class_col)) continue;
    auto cls = parse_user_class(cols[class_col]);
    if (!cls) throw Error(path + ": unknown class " + cols[class_col]);
    classes[cols[actor_col]] = *cls;
  }
  return classes;
}

Platform parse_platform_or_throw(const std::string& s) {
  auto p = parse_platform(s);
  if (!p) throw Error("unknown platform " + s);
  return *p;
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"botscope: bot and coordination analysis over social-media event logs"};
  app.require_subcommand(1);
  unsigned jobs = 1;
  app.add_option("--jobs", jobs, "Worker cap for parallel stages")->check(CLI::PositiveNumber);

  // run
  auto* run = app.add_subcommand("run", "Run every stage from a config file");
  std::string config_path, run_out;
  run->add_option("config", config_path, "Pipeline config JSON")->required();
  run->add_option("--out", run_out, "Output directory (overrides the config)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic log with planted structure");
  std::string spec_path, synth_out = "synthetic";
  synth->add_option("--spec", spec_path, "SyntheticSpec JSON (defaults otherwise)");
  synth->add_option("--out", synth_out, "Output directory");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse raw records into a canonical event log");
  std::vector<std::string> ingest_inputs;
  std::string adapter = "CANONICAL", community, query, ingest_out = "events.jsonl";
  ingest->add_option("inputs", ingest_inputs, "Input files")->required();
  ingest->add_option("--adapter", adapter, "CANONICAL, X_EXPORT or REDDIT_DUMP");
  ingest->add_option("--community", community, "Force the community tag");
  ingest->add_option("--query", query, "Keep events matching this query");
  ingest->add_option("--out", ingest_out, "Output JSONL");

  // Shared by the analysis subcommands.
  std::string events_path, classes_path, out_dir = "report";
  auto add_common = [&](CLI::App* sub, bool needs_classes) {
    sub->add_option("--events", events_path, "Canonical event log (JSONL)")->required();
    auto* c = sub->add_option("--classes", classes_path, "classes.csv from the classify subcommand");
    if (needs_classes) c->required();
    sub->add_option("--out", out_dir, "Output directory");
  };

  // classify
  auto* classify = app.add_subcommand("classify", "Assign agency and stance to every actor");
  std::string bot_scores, stance_labels, seeds, classify_platform = "X";
  double threshold = 0.7;
  std::size_t k = 3;
  std::uint64_t louvain_seed = 1;
  add_common(classify, false);
  classify->add_option("--bot-scores", bot_scores, "CSV of actor_id,score,score_kind");
  auto* labels_opt = classify->add_option("--stance-labels", stance_labels, "CSV of actor_id,stance");
  auto* seeds_opt = classify->add_option("--seeds", seeds, "Seed stance CSV for partition-based stance");
  labels_opt->excludes(seeds_opt);
  classify->add_option("--threshold", threshold, "Bot-score threshold")->check(CLI::Range(0.0, 1.0));
  classify->add_option("--platform", classify_platform, "Graph used for seeded stance");
  classify->add_option("--k", k, "k-core order for seeded stance");
  classify->add_option("--louvain-seed", louvain_seed, "Louvain seed");

  // graph
  auto* graph = app.add_subcommand("graph", "Build the interaction network, k-core and partition");
  std::string graph_kind = "RETWEET";
  add_common(graph, false);
  graph->add_option("--kind", graph_kind, "RETWEET, REPLY or QUOTE");
  graph->add_option("--k", k, "k-core order");
  graph->add_option("--louvain-seed", louvain_seed, "Louvain seed");

  // cascade
  auto* cascade = app.add_subcommand("cascade", "Cascade size/depth distributions and tests");
  std::string cascade_platform = "X", cascade_metric;
  add_common(cascade, true);
  cascade->add_option("--platform", cascade_platform, "X or REDDIT");
  cascade->add_option("--metric", cascade_metric, "size or depth (CCDF files only for this metric)");

  // coord
  auto* coord = app.add_subcommand("coord", "Co-action network window sweep");
  std::string coord_kind = "CO_RETWEET";
  std::vector<std::int64_t> windows;
  std::uint64_t min_weight = 1;
  bool dedup = false;
  add_common(coord, false);
  coord->add_option("--kind", coord_kind, "CO_RETWEET or CO_REPLY");
  coord->add_option("--windows", windows, "Window lengths in seconds")->delimiter(',');
  coord->add_option("--min-weight", min_weight, "Minimum pair weight");
  coord->add_flag("--dedup-per-object", dedup, "Count each pair once per object");

  // engage
  auto* engage = app.add_subcommand("engage", "Human-bot engagement ratios");
  std::string engage_platform = "X";
  bool per_faction = true;
  add_common(engage, true);
  engage->add_option("--platform", engage_platform, "X or REDDIT");
  engage->add_option("--per-faction", per_faction, "Also report same-side factions");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Daily series, Pearson and Granger tests");
  std::string series_metric = "CASCADE_SIZE";
  std::size_t maxlag = 5;
  double alpha = 0.05;
  bool difference = false;
  add_common(stats_cmd, true);
  stats_cmd->add_option("--metric", series_metric, "UNIQUE_USERS, CASCADE_SIZE or CASCADE_DEPTH");
  stats_cmd->add_option("--maxlag", maxlag, "Largest Granger lag");
  stats_cmd->add_option("--alpha", alpha, "Significance level");
  stats_cmd->add_flag("--difference", difference, "First-difference the series before testing");

  // toxicity
  auto* tox = app.add_subcommand("toxicity", "Per-user toxicity and class comparisons");
  std::string scorer = "stub", lexicon, scorer_url, scorer_cache;
  double qps = 1.0;
  add_common(tox, true);
  tox->add_option("--scorer", scorer, "stub or http")->check(CLI::IsMember({"stub", "http"}));
  tox->add_option("--lexicon", lexicon, "Word list for the stub scorer");
  tox->add_option("--url", scorer_url, "Endpoint for the http scorer");
  tox->add_option("--cache", scorer_cache, "Score cache file");
  tox->add_option("--qps", qps, "Request ceiling for the http scorer");

  CLI11_PARSE(app, argc, argv);

  std::string stage;
  try {
    if (run->parsed()) {
      stage = "run";
      PipelineConfig config = PipelineConfig::load(config_path);
      if (!run_out.empty()) config.output_dir = run_out;
      if (app.count("--jobs")) config.jobs = jobs;
      PipelineResult result = run_pipeline(config);
      for (const StageRecord& s : result.stages) {
        std::cout << s.name << ": " << s.status;
        if (!s.reason.empty()) std::cout << " (" << s.reason << ")";
        std::cout << "\n";
        for (const auto& w : s.warnings) std::cerr << "[" << s.name << "] warning: " << w << "\n";
      }
      std::cout << "bundle written to " << config.output_dir << "\n";
      return 0;
    }
    if (synth->parsed()) {
      stage = "synth";
      SyntheticSpec spec = spec_path.empty() ? SyntheticSpec{} : SyntheticSpec::from_json(read_file(spec_path));
      SyntheticLog data = generate_synthetic_log(spec);
      write_synthetic_bundle(spec, data, synth_out);
      std::cout << data.log.size() << " events written to " << synth_out << "\n";
      return 0;
    }
    if (ingest->parsed()) {
      stage = "ingest";
      ParseOptions opts;
      opts.community = community;
      opts.jobs = jobs;
      std::vector<Event> events;
      ParseResult merged;
      for (const auto& path : ingest_inputs) {
        ParseResult r = parse_events(read_file(path), adapter_from_string(adapter), opts);
        merged.lines += r.lines;
        for (auto& e : r.errors) {
          std::cerr << "[ingest] " << path << ":" << e.line << ": " << e.message << "\n";
          merged.errors.push_back(std::move(e));
        }
        events.insert(events.end(), std::make_move_iterator(r.events.begin()), std::make_move_iterator(r.events.end()));
      }
      EventLog log = resolve_reply_targets(normalize_log(std::move(events)));
      if (!query.empty()) log = filter_query(log, query);
      std::ostringstream out;
      write_events_jsonl(out, log);
      write_file(ingest_out, out.str());
      std::cout << log_stats_json(log, &merged) << "\n";
      return 0;
    }

    ensure_dir(out_dir);
    if (classify->parsed()) {
      stage = "classify";
      EventLog log = load_events(events_path, jobs);
      std::set<std::string> actors;
      for (const Event& e : log) actors.insert(e.actor_id);
      std::map<std::string, BotScore> scores;
      if (!bot_scores.empty()) scores = FileBotScoreProvider::from_file(bot_scores).all();
      StanceMap stances;
      if (!stance_labels.empty()) {
        auto l = load_stance_labels(stance_labels);
        for (const auto& w : l.warnings) std::cerr << "[classify] warning: " << w << "\n";
        stances = std::move(l.labels);
      } else if (!seeds.empty()) {
        const Platform p = parse_platform_or_throw(classify_platform);
        std::vector<Event> events;
        for (const Event& e : log) {
          if (e.platform == p) events.push_back(e);
        }
        auto g = build_interaction_network(normalize_log(std::move(events)),
                                           p == Platform::X ? EventKind::Retweet : EventKind::Reply);
        auto core = k_core(g, k);
        if (core.empty()) throw Error("k-core is empty; cannot derive stance from seeds");
        auto seed_labels = load_stance_labels(seeds);
        auto a = stance_from_partition(louvain_partition(core, louvain_seed), seed_labels.labels);
        for (const auto& w : a.warnings) std::cerr << "[classify] warning: " << w << "\n";
        stances = std::move(a.stances);
      }
      std::vector<ActorProfile> profiles;
      for (const auto& a : actors) {
        ActorProfile p;
        p.actor_id = a;
        if (auto it = scores.find(a); it != scores.end()) p.bot_score = it->second;
        if (auto it = stances.find(a); it != stances.end()) p.stance = it->second;
        profiles.push_back(std::move(p));
      }
      assign_agency(profiles, threshold);
      Classification c = classify_actors(profiles);
      for (const auto& w : c.warnings) std::cerr << "[classify] warning: " << w << "\n";
      std::string csv = "actor_id,agency,stance,class\n";
      for (const auto& p : profiles) {
        csv += csv_field(p.actor_id) + ',' + std::string(to_string(p.agency)) + ',' + std::string(to_string(p.stance)) +
               ',' + std::string(to_string(p.cls())) + '\n';
      }
      write_file(out_path(out_dir, "classes.csv"), csv);
      for (UserClass cls : kAllClasses) {
        std::cout << to_string(cls) << ' ' << c.count(cls) << ' ' << format_double(c.share(cls)) << "\n";
      }
      return 0;
    }

    EventLog log = load_events(events_path, jobs);
    const ClassMap classes = load_classes(classes_path);
    const ClassMap* class_ptr = classes_path.empty() ? nullptr : &classes;

    if (graph->parsed()) {
      stage = "graph";
      auto kind = parse_event_kind(graph_kind);
      if (!kind) throw Error("unknown event kind " + graph_kind);
      auto g = build_interaction_network(log, *kind);
      auto core = k_core(g, k);
      write_file(out_path(out_dir, "graph.gexf"), render_graph(g.view(), class_ptr, ExportFormat::Gexf));
      write_file(out_path(out_dir, "kcore.gexf"), render_graph(core.view(), class_ptr, ExportFormat::Gexf));
      write_file(out_path(out_dir, "kcore_edges.csv"), render_graph(core.view(), nullptr, ExportFormat::EdgeCsv));
      std::cout << "nodes " << g.node_count() << " edges " << g.edge_count() << " core_nodes " << core.node_count()
                << "\n";
      if (!core.empty()) {
        Partition part = louvain_partition(core, louvain_seed);
        std::string csv = "actor_id,community\n";
        for (const auto& [a, c] : part.assignment) csv += csv_field(a) + ',' + std::to_string(c) + '\n';
        write_file(out_path(out_dir, "partition.csv"), csv);
        std::cout << "communities " << part.community_count << " modularity " << format_double(part.modularity)
                  << "\n";
      }
      return 0;
    }
    if (cascade->parsed()) {
      stage = "cascade";
      const Platform p = parse_platform_or_throw(cascade_platform);
      std::optional<CascadeMetric> only;
      if (!cascade_metric.empty()) {
        only = parse_cascade_metric(cascade_metric);
        if (!only) throw Error("unknown cascade metric " + cascade_metric);
      }
      auto set = extract_cascades(log, p);
      auto report = class_distribution_report(set, classes);
      for (const auto& f : report.flags) std::cerr << "[cascade] warning: " << f << "\n";
      write_file(out_path(out_dir, "cascade_summary.csv"), render_summary_csv(report));
      write_file(out_path(out_dir, "cascade_tests.csv"), render_tests_csv(report));
      for (const auto& d : report.distributions) {
        if (d.values.empty() || (only && d.metric != *only)) continue;
        write_file(out_path(out_dir, "ccdf_" + std::string(to_string(d.metric)) + "_" +
                                         std::string(to_string(d.cls)) + ".csv"),
                   render_ccdf_csv(ccdf(d.values)));
      }
      std::cout << set.cascades.size() << " cascades\n";
      return 0;
    }
    if (coord->parsed()) {
      stage = "coord";
      auto kind = parse_co_action(coord_kind);
      if (!kind) throw Error("unknown co-action kind " + coord_kind);
      if (windows.empty()) {
        windows = *kind == CoAction::CoRetweet ? std::vector<std::int64_t>{15, 25, 35, 45, 55}
                                               : std::vector<std::int64_t>{120, 240, 360, 480, 600};
      }
      CoActionOptions opts;
      opts.min_weight = min_weight;
      opts.dedup_per_object = dedup;
      opts.jobs = jobs;
      auto sweep = window_sweep(log, *kind, windows, opts, class_ptr);
      write_file(out_path(out_dir, "coord_summary.csv"), render_sweep_summary_csv(sweep));
      write_file(out_path(out_dir, "coord_profile.csv"), render_sweep_profile_csv(sweep));
      for (const auto& e : sweep.entries) {
        write_file(out_path(out_dir, "coord_w" + std::to_string(e.network.window_seconds) + ".gexf"),
                   render_graph(e.network.view(), class_ptr, ExportFormat::Gexf));
      }
      std::cout << render_sweep_summary_csv(sweep);
      return 0;
    }
    if (engage->parsed()) {
      stage = "engage";
      auto report = engagement_metrics(log, classes, parse_platform_or_throw(engage_platform), per_faction);
      const std::string csv = render_engagement_csv(report);
      write_file(out_path(out_dir, "engagement.csv"), csv);
      std::cout << csv;
      return 0;
    }
    if (stats_cmd->parsed()) {
      stage = "stats";
      auto metric = stats::parse_series_metric(series_metric);
      if (!metric) throw Error("unknown series metric " + series_metric);
      std::vector<stats::DailySeries> series;
      for (const auto& [c, n] : log.community_counts()) series.push_back(stats::build_daily_series(log, classes, *metric, c));
      if (series.size() < 2) throw Error("need at least two communities");
      std::string csv = "direction,lag,F,p,df_num,df_den,verdict\n";
      for (const auto& a : series) {
        for (const auto& b : series) {
          if (&a == &b) continue;
          auto x = difference ? stats::first_difference(a.counts) : a.counts;
          auto y = difference ? stats::first_difference(b.counts) : b.counts;
          if (&a < &b) std::cout << "pearson " << a.community << " " << b.community << " "
                                 << format_double(stats::pearson_r(x, y)) << "\n";
          try {
            auto g = stats::granger_test(x, y, maxlag, alpha, a.community, b.community);
            for (const auto& l : g.lags) {
              csv += csv_field(g.cause + "->" + g.effect) + ',' + std::to_string(l.lag) + ',' + format_double(l.f) +
                     ',' + format_double(l.p_value) + ',' + format_double(l.df_num) + ',' + format_double(l.df_den) +
                     ',' + (l.causes ? "causes" : "no") + '\n';
            }
          } catch (const stats::StatsError& e) {
            std::cerr << "[stats] warning: " << a.community << "->" << b.community << ": " << e.what() << "\n";
          }
        }
      }
      write_file(out_path(out_dir, "granger.csv"), csv);
      std::cout << csv;
      return 0;
    }
    if (tox->parsed()) {
      stage = "toxicity";
      std::unique_ptr<Scorer> s;
      if (scorer == "stub") {
        if (lexicon.empty()) {
          const auto& words = synthetic_lexicon();
          s = std::make_unique<LexiconScorer>(std::set<std::string>(words.begin(), words.end()));
        } else {
          s = std::make_unique<LexiconScorer>(LexiconScorer::from_file(lexicon));
        }
      } else {
        HttpScorerOptions opts;
        opts.url = scorer_url;
        opts.qps = qps;
        s = std::make_unique<HttpScorer>(opts);
      }
      std::unique_ptr<CachingScorer> cached;
      Scorer* active = s.get();
      if (!scorer_cache.empty()) {
        cached = std::make_unique<CachingScorer>(*s, scorer_cache);
        active = cached.get();
      }
      auto scores = score_all_users(log, *active, jobs);
      auto report = toxicity_report(scores, classes);
      for (const auto& f : report.flags) std::cerr << "[toxicity] warning: " << f << "\n";
      write_file(out_path(out_dir, "toxicity_values.csv"), render_toxicity_values_csv(scores, classes));
      const std::string matrix = render_toxicity_matrix_csv(report);
      write_file(out_path(out_dir, "toxicity_matrix.csv"), matrix);
      std::cout << matrix;
      return 0;
    }
  } catch (const PipelineError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
