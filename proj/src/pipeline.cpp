#include "botscope/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <set>

#include "botscope/synthetic.hpp"

namespace botscope {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

std::string_view platform_tag(Platform p) { return p == Platform::X ? "x" : "reddit"; }

std::string_view to_string(ScorerChoice s) {
  switch (s) {
    case ScorerChoice::Stub: return "stub";
    case ScorerChoice::Http: return "http";
    case ScorerChoice::None: return "none";
  }
  return "none";
}

// Collects the bundle's files so the manifest can list their digests.
class Bundle {
 public:
  explicit Bundle(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_ + ": " + ec.message());
  }

  void write(const std::string& name, std::string_view contents) {
    write_file((fs::path(dir_) / name).string(), contents);
    files_[name] = sha256_hex(contents);
  }
  const std::map<std::string, std::string>& files() const { return files_; }
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::map<std::string, std::string> files_;
};

std::string class_name(UserClass c) {
  std::string s(to_string(c));
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(std::string_view json, const std::string& base_dir) {
  PipelineConfig c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  auto str = [&](const nlohmann::json& obj, const char* key, std::string& out) {
    if (obj.contains(key) && !obj[key].is_null()) out = obj[key].get<std::string>();
  };
  try {
    if (j.contains("inputs")) {
      for (const auto& in : j["inputs"]) {
        InputSpec spec;
        spec.path = resolve(base_dir, in.at("path").get<std::string>());
        if (in.contains("adapter")) spec.adapter = adapter_from_string(in["adapter"].get<std::string>());
        str(in, "community", spec.community);
        c.inputs.push_back(std::move(spec));
      }
    }
    str(j, "query", c.query);
    if (j.contains("bot_scores")) {
      const auto& b = j["bot_scores"];
      if (b.is_string()) {
        c.bot_scores_file = b.get<std::string>();
      } else {
        str(b, "file", c.bot_scores_file);
        str(b, "url", c.bot_scores_url);
      }
    }
    c.bot_scores_file = resolve(base_dir, c.bot_scores_file);
    str(j, "reddit_features", c.reddit_features);
    c.reddit_features = resolve(base_dir, c.reddit_features);
    if (j.contains("stance")) {
      str(j["stance"], "seeds", c.seeds_file);
      str(j["stance"], "labels", c.labels_file);
    }
    c.seeds_file = resolve(base_dir, c.seeds_file);
    c.labels_file = resolve(base_dir, c.labels_file);
    if (j.contains("threshold")) c.threshold = j["threshold"].get<double>();
    if (j.contains("k_core")) c.k_core = j["k_core"].get<std::size_t>();
    if (j.contains("louvain_seed")) c.louvain_seed = j["louvain_seed"].get<std::uint64_t>();
    if (j.contains("windows")) {
      if (j["windows"].contains("X")) c.x_windows = j["windows"]["X"].get<std::vector<std::int64_t>>();
      if (j["windows"].contains("REDDIT")) c.reddit_windows = j["windows"]["REDDIT"].get<std::vector<std::int64_t>>();
    }
    if (j.contains("min_weight")) c.min_weight = j["min_weight"].get<std::uint64_t>();
    if (j.contains("dedup_per_object")) c.dedup_per_object = j["dedup_per_object"].get<bool>();
    if (j.contains("granger")) {
      const auto& g = j["granger"];
      if (g.contains("maxlag")) c.maxlag = g["maxlag"].get<std::size_t>();
      if (g.contains("alpha")) c.alpha = g["alpha"].get<double>();
      if (g.contains("difference")) c.difference = g["difference"].get<bool>();
      if (g.contains("metric")) {
        auto m = stats::parse_series_metric(g["metric"].get<std::string>());
        if (!m) throw Error("config: unknown series metric " + g["metric"].get<std::string>());
        c.series_metric = *m;
      }
    }
    if (j.contains("toxicity")) {
      const auto& t = j["toxicity"];
      if (t.contains("scorer")) {
        const std::string s = t["scorer"].get<std::string>();
        if (s == "stub") c.scorer = ScorerChoice::Stub;
        else if (s == "http") c.scorer = ScorerChoice::Http;
        else if (s == "none") c.scorer = ScorerChoice::None;
        else throw Error("config: unknown scorer " + s);
      }
      str(t, "lexicon", c.lexicon);
      str(t, "url", c.scorer_url);
      str(t, "cache", c.scorer_cache);
      str(t, "key_env", c.scorer_key_env);
      if (t.contains("qps")) c.scorer_qps = t["qps"].get<double>();
      c.lexicon = resolve(base_dir, c.lexicon);
      c.scorer_cache = resolve(base_dir, c.scorer_cache);
    }
    str(j, "output", c.output_dir);
    c.output_dir = resolve(base_dir, c.output_dir);
    if (j.contains("jobs")) c.jobs = j["jobs"].get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  const fs::path p(path);
  return from_json(read_file(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

std::string PipelineConfig::canonical_json() const {
  ojson j;
  j["inputs"] = ojson::array();
  for (const auto& in : inputs) {
    j["inputs"].push_back({{"path", in.path}, {"adapter", to_string(in.adapter)}, {"community", in.community}});
  }
  j["query"] = query;
  j["bot_scores"] = {{"file", bot_scores_file}, {"url", bot_scores_url}};
  j["reddit_features"] = reddit_features;
  j["stance"] = {{"seeds", seeds_file}, {"labels", labels_file}};
  j["threshold"] = threshold;
  j["k_core"] = k_core;
  j["louvain_seed"] = louvain_seed;
  j["windows"] = {{"X", x_windows}, {"REDDIT", reddit_windows}};
  j["min_weight"] = min_weight;
  j["dedup_per_object"] = dedup_per_object;
  j["granger"] = {{"maxlag", maxlag}, {"alpha", alpha}, {"metric", stats::to_string(series_metric)}, {"difference", difference}};
  j["toxicity"] = {{"scorer", to_string(scorer)}, {"lexicon", lexicon}, {"url", scorer_url}, {"qps", scorer_qps}};
  return j.dump();
}

void PipelineConfig::validate() const {
  if (inputs.empty()) throw Error("config: no inputs");
  for (const auto& in : inputs) {
    if (!fs::exists(in.path)) throw Error("config: input not found: " + in.path);
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("config: threshold must lie in [0, 1]");
  for (const auto* windows : {&x_windows, &reddit_windows}) {
    if (windows->empty()) throw Error("config: empty window list");
    for (std::size_t i = 0; i < windows->size(); ++i) {
      if ((*windows)[i] <= 0 || (i > 0 && (*windows)[i] <= (*windows)[i - 1])) {
        throw Error("config: windows must be positive and strictly increasing");
      }
    }
  }
  if (maxlag == 0) throw Error("config: maxlag must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("config: alpha must lie in (0, 1)");
  if (!seeds_file.empty() && !labels_file.empty()) throw Error("config: give either stance seeds or stance labels, not both");
  if (scorer == ScorerChoice::Http && scorer_url.empty()) throw Error("config: http scorer needs a url");
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  PipelineResult result;
  Bundle bundle(config.output_dir);
  const std::string config_hash = sha256_hex(config.canonical_json());
  std::vector<std::string> platforms_present;
  std::map<std::string, std::optional<BotScore>> scores;
  StanceMap labelled;

  auto write_manifest = [&] {
    ojson m;
    m["config_sha256"] = config_hash;
    m["stages"] = ojson::array();
    for (const StageRecord& s : result.stages) {
      ojson st;
      st["name"] = s.name;
      st["status"] = s.status;
      if (!s.reason.empty()) st["reason"] = s.reason;
      st["counts"] = ojson::object();
      for (const auto& [k, v] : s.counts) st["counts"][k] = v;
      st["warnings"] = s.warnings;
      m["stages"].push_back(std::move(st));
    }
    m["files"] = ojson::array();
    for (const auto& [name, digest] : bundle.files()) m["files"].push_back({{"path", name}, {"sha256", digest}});
    result.manifest = m.dump(2) + "\n";
    write_file((fs::path(bundle.dir()) / "manifest.json").string(), result.manifest);
    ojson t = ojson::object();
    for (const StageRecord& s : result.stages) t[s.name] = s.seconds;
    write_file((fs::path(bundle.dir()) / "timings.json").string(), t.dump(2) + "\n");
  };

  auto run_stage = [&](const std::string& name, const std::function<void(StageRecord&)>& body) {
    StageRecord rec;
    rec.name = name;
    rec.status = "completed";
    const auto start = std::chrono::steady_clock::now();
    try {
      body(rec);
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.reason = e.what();
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.stages.push_back(std::move(rec));
      write_manifest();
      throw PipelineError(name, e.what());
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.stages.push_back(std::move(rec));
  };

  run_stage("ingest", [&](StageRecord& rec) {
    ParseResult merged;
    std::vector<Event> events;
    for (const InputSpec& in : config.inputs) {
      ParseOptions opts;
      opts.community = in.community;
      opts.jobs = config.jobs;
      ParseResult r = parse_events(read_file(in.path), in.adapter, opts);
      merged.lines += r.lines;
      for (auto& err : r.errors) {
        err.message = fs::path(in.path).filename().string() + ": " + err.message;
        merged.errors.push_back(std::move(err));
      }
      events.insert(events.end(), std::make_move_iterator(r.events.begin()), std::make_move_iterator(r.events.end()));
    }
    merged.events.resize(events.size());  // only the count is reported
    EventLog log = resolve_reply_targets(normalize_log(std::move(events)));
    if (!config.query.empty()) log = filter_query(log, config.query);
    if (log.empty()) throw Error("no events after ingest");
    rec.counts["lines"] = static_cast<double>(merged.lines);
    rec.counts["parse_errors"] = static_cast<double>(merged.errors.size());
    rec.counts["events"] = static_cast<double>(log.size());
    bundle.write("log_stats.json", log_stats_json(log, &merged));
    for (Platform p : {Platform::X, Platform::Reddit}) {
      for (const Event& e : log) {
        if (e.platform == p) {
          platforms_present.emplace_back(platform_tag(p));
          break;
        }
      }
    }
    result.log = std::move(log);
  });

  run_stage("classify", [&](StageRecord& rec) {
    std::set<std::string> actors;
    for (const Event& e : result.log) actors.insert(e.actor_id);
    const std::vector<std::string> actor_list(actors.begin(), actors.end());
    std::map<std::string, BotScore> fetched;
    if (!config.bot_scores_file.empty()) {
      fetched = FileBotScoreProvider::from_file(config.bot_scores_file).fetch(actor_list);
    } else if (!config.bot_scores_url.empty()) {
      HttpProviderOptions opts;
      opts.url = config.bot_scores_url;
      fetched = HttpBotScoreProvider(opts).fetch(actor_list);
    } else {
      rec.warnings.push_back("no bot-score source configured; agency UNKNOWN unless Reddit features are given");
    }
    if (!config.reddit_features.empty()) {
      const auto features = parse_reddit_features(read_file(config.reddit_features));
      std::set<std::string> reddit_actors;
      for (const Event& e : result.log) {
        if (e.platform == Platform::Reddit) reddit_actors.insert(e.actor_id);
      }
      for (const auto& a : reddit_actors) {
        auto it = features.find(a);
        if (it != features.end() && !fetched.count(a)) fetched[a] = {reddit_bot_heuristic(it->second), ScoreKind::Heuristic};
      }
    }
    if (!config.labels_file.empty()) {
      auto labels = load_stance_labels(config.labels_file);
      labelled = std::move(labels.labels);
      for (auto& w : labels.warnings) rec.warnings.push_back(std::move(w));
    }
    for (const std::string& a : actor_list) {
      ActorProfile p;
      p.actor_id = a;
      if (auto it = fetched.find(a); it != fetched.end()) p.bot_score = it->second;
      if (auto it = labelled.find(a); it != labelled.end()) p.stance = it->second;
      result.profiles.push_back(std::move(p));
    }
    assign_agency(result.profiles, config.threshold);
    std::size_t bots = 0, humans = 0;
    for (const auto& p : result.profiles) {
      bots += p.agency == Agency::Bot ? 1 : 0;
      humans += p.agency == Agency::Human ? 1 : 0;
    }
    rec.counts["actors"] = static_cast<double>(actor_list.size());
    rec.counts["scored"] = static_cast<double>(fetched.size());
    rec.counts["bots"] = static_cast<double>(bots);
    rec.counts["humans"] = static_cast<double>(humans);
  });

  run_stage("graph", [&](StageRecord& rec) {
    std::map<std::string, std::size_t> offset_assignment;
    for (Platform p : {Platform::X, Platform::Reddit}) {
      const std::string tag(platform_tag(p));
      if (std::find(platforms_present.begin(), platforms_present.end(), tag) == platforms_present.end()) continue;
      PlatformResults pr;
      pr.platform = p;
      EventLog platform_log;
      {
        std::vector<Event> events;
        for (const Event& e : result.log) {
          if (e.platform == p) events.push_back(e);
        }
        platform_log = normalize_log(std::move(events));
      }
      BuildStats build;
      pr.graph = build_interaction_network(platform_log, p == Platform::X ? EventKind::Retweet : EventKind::Reply, &build);
      pr.core = k_core(pr.graph, config.k_core);
      rec.counts[tag + "_nodes"] = static_cast<double>(pr.graph.node_count());
      rec.counts[tag + "_edges"] = static_cast<double>(pr.graph.edge_count());
      rec.counts[tag + "_core_nodes"] = static_cast<double>(pr.core.node_count());
      if (pr.core.empty()) {
        rec.warnings.push_back(tag + ": " + std::to_string(config.k_core) + "-core is empty; no partition");
      } else {
        pr.partition = louvain_partition(pr.core, config.louvain_seed);
        rec.counts[tag + "_communities"] = static_cast<double>(pr.partition->community_count);
        rec.counts[tag + "_modularity"] = pr.partition->modularity;
        if (!config.seeds_file.empty()) {
          auto seeds = parse_stance_labels(read_file(config.seeds_file));
          StanceMap seed_map;
          for (const auto& [a, s] : seeds.labels) {
            if (s != Stance::Unknown) seed_map[a] = s;
          }
          auto assignment = stance_from_partition(*pr.partition, seed_map);
          for (auto& w : assignment.warnings) rec.warnings.push_back(tag + ": " + w);
          for (const auto& [a, s] : assignment.stances) {
            // An actor active on both platforms keeps the first known stance.
            auto [it, inserted] = result.stances.try_emplace(a, s);
            if (!inserted && it->second == Stance::Unknown) it->second = s;
          }
        }
      }
      result.platforms.push_back(std::move(pr));
    }
    if (config.seeds_file.empty() && config.labels_file.empty()) {
      rec.warnings.push_back("no stance source configured; every stance is UNKNOWN");
    }
    for (ActorProfile& p : result.profiles) {
      if (config.labels_file.empty()) {
        auto it = result.stances.find(p.actor_id);
        p.stance = it == result.stances.end() ? Stance::Unknown : it->second;
      } else {
        result.stances[p.actor_id] = p.stance;
      }
    }
    result.classification = classify_actors(result.profiles);
    for (auto& w : result.classification.warnings) rec.warnings.push_back(w);
    const ClassMap& classes = result.classification.classes;

    std::string classes_csv = "actor_id,bot_score,score_kind,agency,stance,class\n";
    for (const ActorProfile& p : result.profiles) {
      classes_csv += csv_field(p.actor_id) + ',' + (p.bot_score ? format_double(p.bot_score->score) : "") + ',' +
                     (p.bot_score ? std::string(to_string(p.bot_score->kind)) : "") + ',' +
                     std::string(to_string(p.agency)) + ',' + std::string(to_string(p.stance)) + ',' +
                     std::string(to_string(p.cls())) + '\n';
    }
    bundle.write("classes.csv", classes_csv);
    std::string summary = "class,count,share\n";
    for (UserClass c : kAllClasses) {
      summary += std::string(to_string(c)) + ',' + std::to_string(result.classification.count(c)) + ',' +
                 format_double(result.classification.share(c)) + '\n';
      rec.counts["class_" + class_name(c)] = static_cast<double>(result.classification.count(c));
    }
    bundle.write("class_summary.csv", summary);

    for (const PlatformResults& pr : result.platforms) {
      const std::string tag(platform_tag(pr.platform));
      bundle.write("graph_" + tag + ".gexf", render_graph(pr.graph.view(), &classes, ExportFormat::Gexf));
      bundle.write("graph_" + tag + "_kcore.gexf", render_graph(pr.core.view(), &classes, ExportFormat::Gexf));
      bundle.write("graph_" + tag + "_kcore_edges.csv", render_graph(pr.core.view(), nullptr, ExportFormat::EdgeCsv));
      std::string nodes = "actor_id,class,community,indegree,outdegree,degree_centrality,clustering\n";
      for (const auto& [actor, m] : node_metrics(pr.core)) {
        const auto c = pr.partition ? std::to_string(pr.partition->assignment.at(actor)) : std::string();
        nodes += csv_field(actor) + ',' + std::string(to_string(class_of(classes, actor))) + ',' + c + ',' +
                 std::to_string(m.indegree) + ',' + std::to_string(m.outdegree) + ',' +
                 format_double(m.degree_centrality) + ',' + format_double(m.clustering) + '\n';
      }
      bundle.write("graph_" + tag + "_kcore_nodes.csv", nodes);
    }
  });

  const ClassMap& classes = result.classification.classes;

  run_stage("cascades", [&](StageRecord& rec) {
    for (PlatformResults& pr : result.platforms) {
      const std::string tag(platform_tag(pr.platform));
      pr.cascades = extract_cascades(result.log, pr.platform);
      pr.distributions = class_distribution_report(pr.cascades, classes);
      rec.counts[tag + "_cascades"] = static_cast<double>(pr.cascades.cascades.size());
      for (auto& f : pr.distributions.flags) rec.warnings.push_back(tag + ": " + f);
      bundle.write("cascades_" + tag + "_summary.csv", render_summary_csv(pr.distributions));
      bundle.write("cascades_" + tag + "_tests.csv", render_tests_csv(pr.distributions));
      for (const ClassDistribution& d : pr.distributions.distributions) {
        if (d.values.empty()) continue;
        bundle.write("ccdf_" + tag + "_" + std::string(to_string(d.metric)) + "_" + class_name(d.cls) + ".csv",
                     render_ccdf_csv(ccdf(d.values)));
      }
    }
  });

  run_stage("coordination", [&](StageRecord& rec) {
    CoActionOptions opts;
    opts.min_weight = config.min_weight;
    opts.dedup_per_object = config.dedup_per_object;
    opts.jobs = config.jobs;
    for (PlatformResults& pr : result.platforms) {
      const std::string tag(platform_tag(pr.platform));
      const bool x = pr.platform == Platform::X;
      std::vector<Event> events;
      for (const Event& e : result.log) {
        if (e.platform == pr.platform) events.push_back(e);
      }
      const EventLog platform_log = normalize_log(std::move(events));
      pr.sweep = window_sweep(platform_log, x ? CoAction::CoRetweet : CoAction::CoReply,
                              x ? config.x_windows : config.reddit_windows, opts, &classes);
      bundle.write("coord_" + tag + "_summary.csv", render_sweep_summary_csv(pr.sweep));
      bundle.write("coord_" + tag + "_profile.csv", render_sweep_profile_csv(pr.sweep));
      for (const SweepEntry& e : pr.sweep.entries) {
        const std::string w = std::to_string(e.network.window_seconds);
        bundle.write("coord_" + tag + "_w" + w + ".gexf", render_graph(e.network.view(), &classes, ExportFormat::Gexf));
        rec.counts[tag + "_w" + w + "_edges"] = static_cast<double>(e.network.edges.size());
      }
    }
  });

  run_stage("engagement", [&](StageRecord& rec) {
    for (PlatformResults& pr : result.platforms) {
      const std::string tag(platform_tag(pr.platform));
      pr.engagement = engagement_metrics(result.log, classes, pr.platform);
      bundle.write("engagement_" + tag + ".csv", render_engagement_csv(pr.engagement));
      rec.counts[tag + "_rows"] = static_cast<double>(pr.engagement.rows.size());
    }
  });

  run_stage("series", [&](StageRecord& rec) {
    std::vector<std::string> communities;
    for (const auto& [c, n] : result.log.community_counts()) communities.push_back(c);
    std::string series_csv = "date,community,class,metric,value\n";
    for (const std::string& c : communities) {
      auto s = stats::build_daily_series(result.log, classes, config.series_metric, c);
      for (std::size_t d = 0; d < s.size(); ++d) {
        series_csv += stats::iso_date(s.first_day + static_cast<std::int64_t>(d)) + ',' + csv_field(c) + ",ALL," +
                      std::string(stats::to_string(s.metric)) + ',' + format_double(s.counts[d]) + '\n';
      }
      for (UserClass cls : kKnownClasses) {
        auto cs = stats::build_daily_series(result.log, classes, config.series_metric, c, cls);
        for (std::size_t d = 0; d < cs.size(); ++d) {
          series_csv += stats::iso_date(cs.first_day + static_cast<std::int64_t>(d)) + ',' + csv_field(c) + ',' +
                        std::string(to_string(cls)) + ',' + std::string(stats::to_string(cs.metric)) + ',' +
                        format_double(cs.counts[d]) + '\n';
        }
      }
      result.series.series.push_back(std::move(s));
    }
    bundle.write("series.csv", series_csv);
    rec.counts["days"] = result.series.series.empty() ? 0.0 : static_cast<double>(result.series.series.front().size());
    if (communities.size() < 2) {
      rec.status = "skipped";
      rec.reason = "fewer than two communities; no cross-community tests";
      return;
    }
    rec.warnings.push_back(config.difference
                               ? "Granger tests run on first-differenced daily series"
                               : "Granger tests run on raw daily series; no stationarity preprocessing was applied");
    std::string corr = "community_a,community_b,pearson_r\n";
    std::string granger = "direction,lag,F,p,df_num,df_den,verdict\n";
    auto prepared = [&](const stats::DailySeries& s) {
      return config.difference ? stats::first_difference(s.counts) : s.counts;
    };
    const auto& all = result.series.series;
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = 0; j < all.size(); ++j) {
        if (i == j) continue;
        const auto x = prepared(all[i]);
        const auto y = prepared(all[j]);
        if (i < j) {
          try {
            const double r = stats::pearson_r(x, y);
            result.series.correlations.emplace_back(all[i].community, all[j].community, r);
            corr += csv_field(all[i].community) + ',' + csv_field(all[j].community) + ',' + format_double(r) + '\n';
          } catch (const stats::StatsError& e) {
            rec.warnings.push_back("pearson " + all[i].community + "/" + all[j].community + ": " + e.what());
          }
        }
        try {
          auto g = stats::granger_test(x, y, config.maxlag, config.alpha, all[i].community, all[j].community);
          for (const auto& lag : g.lags) {
            granger += csv_field(g.cause + "->" + g.effect) + ',' + std::to_string(lag.lag) + ',' + format_double(lag.f) +
                       ',' + format_double(lag.p_value) + ',' + format_double(lag.df_num) + ',' +
                       format_double(lag.df_den) + ',' + (lag.causes ? "causes" : "no") + '\n';
          }
          result.series.granger.push_back(std::move(g));
        } catch (const stats::StatsError& e) {
          rec.warnings.push_back("granger " + all[i].community + "->" + all[j].community + ": " + e.what());
        }
      }
    }
    bundle.write("correlations.csv", corr);
    bundle.write("granger.csv", granger);
    rec.counts["granger_tests"] = static_cast<double>(result.series.granger.size());
  });

  run_stage("toxicity", [&](StageRecord& rec) {
    if (config.scorer == ScorerChoice::None) {
      rec.status = "skipped";
      rec.reason = "no toxicity scorer configured";
      return;
    }
    bool any_text = false;
    for (const Event& e : result.log) {
      if (e.text && !e.text->empty()) {
        any_text = true;
        break;
      }
    }
    if (!any_text) {
      rec.status = "skipped";
      rec.reason = "no event text";
      return;
    }
    std::unique_ptr<Scorer> scorer;
    if (config.scorer == ScorerChoice::Stub) {
      if (config.lexicon.empty()) {
        const auto& words = synthetic_lexicon();
        scorer = std::make_unique<LexiconScorer>(std::set<std::string>(words.begin(), words.end()));
      } else {
        scorer = std::make_unique<LexiconScorer>(LexiconScorer::from_file(config.lexicon));
      }
    } else {
      HttpScorerOptions opts;
      opts.url = config.scorer_url;
      opts.api_key_env = config.scorer_key_env;
      opts.qps = config.scorer_qps;
      scorer = std::make_unique<HttpScorer>(opts);
    }
    std::unique_ptr<CachingScorer> cached;
    Scorer* active = scorer.get();
    if (!config.scorer_cache.empty()) {
      cached = std::make_unique<CachingScorer>(*scorer, config.scorer_cache);
      active = cached.get();
    }
    result.toxicity_scores = score_all_users(result.log, *active, config.jobs);
    result.toxicity = toxicity_report(result.toxicity_scores, classes);
    for (auto& f : result.toxicity->flags) rec.warnings.push_back(f);
    rec.counts["scored_users"] = static_cast<double>(result.toxicity_scores.size());
    bundle.write("toxicity_values.csv", render_toxicity_values_csv(result.toxicity_scores, classes));
    bundle.write("toxicity_matrix.csv", render_toxicity_matrix_csv(*result.toxicity));
  });

  write_manifest();
  return result;
}

}  // namespace botscope
