#include "botscope/toxicity.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <thread>

#include "botscope/text.hpp"
#include "internal/http_post.hpp"

namespace botscope {

std::vector<double> Scorer::score_batch(std::span<const std::string> documents) {
  std::vector<double> out;
  out.reserve(documents.size());
  for (const std::string& d : documents) out.push_back(score(d));
  return out;
}

LexiconScorer::LexiconScorer(std::set<std::string> lexicon, std::size_t max_length) : max_length_(max_length) {
  for (const std::string& w : lexicon) {
    for (std::string& token : text::tokenize(w)) lexicon_.insert(std::move(token));
  }
}

LexiconScorer LexiconScorer::from_file(const std::string& path, std::size_t max_length) {
  std::set<std::string> words;
  const std::string contents = read_file(path);
  std::size_t pos = 0;
  while (pos < contents.size()) {
    auto end = contents.find('\n', pos);
    if (end == std::string::npos) end = contents.size();
    std::string line = contents.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.insert(line);
  }
  return LexiconScorer(std::move(words), max_length);
}

double LexiconScorer::score(std::string_view document) {
  const auto tokens = text::tokenize(document);
  if (tokens.empty()) return 0.0;
  std::size_t hits = 0;
  for (const std::string& t : tokens) hits += lexicon_.count(t);
  return std::clamp(static_cast<double>(hits) / static_cast<double>(tokens.size()), 0.0, 1.0);
}

HttpScorer::HttpScorer(HttpScorerOptions options) : options_(std::move(options)) {
  if (options_.batch_size == 0) throw Error("batch_size must be positive");
  if (!options_.api_key_env.empty()) {
    if (const char* key = std::getenv(options_.api_key_env.c_str())) api_key_ = key;
  }
}

void HttpScorer::throttle() {
  if (options_.qps <= 0.0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(1.0 / options_.qps));
  }
  std::this_thread::sleep_until(slot);
}

double HttpScorer::score(std::string_view document) {
  const std::string doc(document);
  return score_batch(std::span<const std::string>(&doc, 1)).front();
}

std::vector<double> HttpScorer::score_batch(std::span<const std::string> documents) {
  internal::PostOptions post;
  post.max_attempts = options_.max_attempts;
  post.initial_backoff = options_.initial_backoff;
  post.timeout = options_.timeout;
  post.api_key = api_key_;
  std::vector<double> out;
  out.reserve(documents.size());
  for (std::size_t start = 0; start < documents.size(); start += options_.batch_size) {
    const auto batch = documents.subspan(start, std::min(options_.batch_size, documents.size() - start));
    const nlohmann::json request = {{"documents", std::vector<std::string>(batch.begin(), batch.end())}};
    throttle();
    const std::string body = internal::http_post_json(options_.url, request.dump(), post);
    try {
      const auto response = nlohmann::json::parse(body);
      const auto& scores = response.at("scores");
      if (scores.size() != batch.size()) throw TransportError("toxicity response has the wrong number of scores");
      for (const auto& s : scores) {
        const double v = s.get<double>();
        if (!(v >= 0.0 && v <= 1.0)) throw TransportError("toxicity score outside [0, 1]");
        out.push_back(v);
      }
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed toxicity response: ") + e.what());
    }
  }
  return out;
}

CachingScorer::CachingScorer(Scorer& inner, std::string cache_path) : inner_(inner), path_(std::move(cache_path)) {
  std::ifstream in(path_);
  std::string line;
  const std::string scorer = inner_.id();
  while (std::getline(in, line)) {
    const auto fields = split_csv_line(line);
    if (fields.size() != 3 || fields[1] != scorer) continue;
    try {
      cache_[fields[0]] = std::stod(fields[2]);
    } catch (const std::exception&) {
      // A torn final line from an interrupted run; the entry is rescored.
    }
  }
}

std::optional<double> CachingScorer::lookup(const std::string& hash) {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(hash);
  if (it == cache_.end()) return std::nullopt;
  ++hits_;
  return it->second;
}

void CachingScorer::store(const std::string& hash, double value) {
  std::lock_guard lock(mutex_);
  if (!cache_.emplace(hash, value).second) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to cache " + path_);
  out << hash << ',' << csv_field(inner_.id()) << ',' << format_double(value) << '\n';
}

double CachingScorer::score(std::string_view document) {
  const std::string hash = sha256_hex(document);
  if (auto hit = lookup(hash)) return *hit;
  const double v = inner_.score(document);
  store(hash, v);
  return v;
}

std::vector<double> CachingScorer::score_batch(std::span<const std::string> documents) {
  std::vector<double> out(documents.size());
  std::vector<std::string> missing;
  std::vector<std::size_t> where;
  std::vector<std::string> hashes(documents.size());
  for (std::size_t i = 0; i < documents.size(); ++i) {
    hashes[i] = sha256_hex(documents[i]);
    if (auto hit = lookup(hashes[i])) {
      out[i] = *hit;
    } else {
      missing.push_back(documents[i]);
      where.push_back(i);
    }
  }
  if (!missing.empty()) {
    const auto fresh = inner_.score_batch(missing);
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      out[where[k]] = fresh[k];
      store(hashes[where[k]], fresh[k]);
    }
  }
  return out;
}

namespace {

ToxicityScore score_document(std::string actor, std::string community, const std::string& document,
                             Scorer& scorer) {
  ToxicityScore result;
  result.actor_id = std::move(actor);
  result.community = std::move(community);
  result.scorer_id = scorer.id();
  result.text_chars = text::code_point_count(document);
  if (result.text_chars == 0) throw Error("no scorable text for " + result.actor_id);

  std::vector<std::string> chunks;
  if (scorer.max_length() == 0 || result.text_chars <= scorer.max_length()) {
    chunks.push_back(document);
  } else {
    chunks = text::chunk_on_whitespace(document, scorer.max_length());
  }
  std::vector<double> values;
  for (int attempt = 0;; ++attempt) {
    try {
      values = scorer.score_batch(chunks);
      break;
    } catch (const TransportError&) {
      if (attempt == 3) throw;
    }
  }
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const double w = static_cast<double>(text::code_point_count(chunks[i]));
    weighted += w * values[i];
    total += w;
  }
  result.score = std::clamp(total > 0.0 ? weighted / total : 0.0, 0.0, 1.0);
  return result;
}

void append_text(std::string& document, const std::string& text) {
  if (text.empty()) return;
  if (!document.empty()) document += '\n';
  document += text;
}

}  // namespace

ToxicityScore score_user_toxicity(const EventLog& log, std::string_view actor_id, Scorer& scorer) {
  std::string document;
  for (const Event& e : log) {
    if (e.actor_id == actor_id && e.text) append_text(document, *e.text);
  }
  if (document.empty()) throw Error("no scorable text for " + std::string(actor_id));
  return score_document(std::string(actor_id), "", document, scorer);
}

std::vector<ToxicityScore> score_all_users(const EventLog& log, Scorer& scorer, unsigned jobs) {
  std::map<std::pair<std::string, std::string>, std::string> documents;
  for (const Event& e : log) {
    if (e.text && !e.text->empty()) append_text(documents[{e.community, e.actor_id}], *e.text);
  }
  std::vector<const std::pair<const std::pair<std::string, std::string>, std::string>*> items;
  for (const auto& item : documents) items.push_back(&item);
  std::vector<std::optional<ToxicityScore>> out(items.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next++) < items.size();) {
      try {
        const auto& [key, document] = *items[i];
        out[i] = score_document(key.second, key.first, document, scorer);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = items.size();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(items.size(), 1))));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ToxicityScore> scores;
  scores.reserve(out.size());
  for (auto& s : out) scores.push_back(std::move(*s));
  return scores;
}

ToxicityReport toxicity_report(std::span<const ToxicityScore> scores, const ClassMap& classes) {
  std::map<std::pair<std::string, UserClass>, std::vector<double>> grouped;
  for (const ToxicityScore& s : scores) {
    const UserClass cls = class_of(classes, s.actor_id);
    if (cls == UserClass::Unknown) continue;
    grouped[{s.community, cls}].push_back(s.score);
  }
  ToxicityReport report;
  for (auto& [key, values] : grouped) {
    ToxicityGroup g;
    g.community = key.first;
    g.cls = key.second;
    g.values = std::move(values);
    std::sort(g.values.begin(), g.values.end());
    g.tested = g.values.size() >= 2;
    if (!g.tested) {
      report.flags.push_back((g.community.empty() ? std::string("all") : g.community) + "/" +
                             std::string(to_string(g.cls)) + ": " + std::to_string(g.values.size()) +
                             " scored user, excluded from the test matrix");
    }
    report.groups.push_back(std::move(g));
  }
  const std::size_t n = report.groups.size();
  report.matrix.assign(n, std::vector<std::optional<stats::TestResult>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!report.groups[i].tested || !report.groups[j].tested) continue;
      try {
        auto r = stats::welch_t(report.groups[i].values, report.groups[j].values);
        auto mirrored = r;
        mirrored.statistic = -r.statistic;
        std::swap(mirrored.n1, mirrored.n2);
        report.matrix[i][j] = std::move(r);
        report.matrix[j][i] = std::move(mirrored);
      } catch (const stats::StatsError& e) {
        report.flags.push_back(std::string("pair ") + std::to_string(i) + "," + std::to_string(j) + ": " + e.what());
      }
    }
  }
  return report;
}

std::string render_toxicity_values_csv(std::span<const ToxicityScore> scores, const ClassMap& classes) {
  std::string out = "community,class,actor_id,score\n";
  for (const ToxicityScore& s : scores) {
    out += csv_field(s.community) + ',' + std::string(to_string(class_of(classes, s.actor_id))) + ',' +
           csv_field(s.actor_id) + ',' + format_double(s.score) + '\n';
  }
  return out;
}

std::string render_toxicity_matrix_csv(const ToxicityReport& report) {
  std::string out = "group_a,group_b,t,p,df,n1,n2\n";
  auto name = [&](std::size_t i) {
    const ToxicityGroup& g = report.groups[i];
    return csv_field((g.community.empty() ? std::string("all") : g.community) + "/" + std::string(to_string(g.cls)));
  };
  for (std::size_t i = 0; i < report.matrix.size(); ++i) {
    for (std::size_t j = 0; j < report.matrix.size(); ++j) {
      const auto& r = report.matrix[i][j];
      if (!r) continue;
      out += name(i) + ',' + name(j) + ',' + format_double(r->statistic) + ',' + format_double(r->p_value) + ',' +
             format_double(r->df) + ',' + std::to_string(r->n1) + ',' + std::to_string(r->n2) + '\n';
    }
  }
  return out;
}

}  // namespace botscope
