#include "botscope/event.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "botscope/text.hpp"

namespace botscope {

using json = nlohmann::json;

void EventLog::recount() {
  kind_counts_.clear();
  community_counts_.clear();
  for (const Event& e : events_) {
    ++kind_counts_[e.kind];
    ++community_counts_[e.community];
  }
}

EventLog EventLog::from_sorted(std::vector<Event> events) {
  EventLog log;
  log.events_ = std::move(events);
  log.recount();
  return log;
}

std::string_view to_string(Adapter a) {
  switch (a) {
    case Adapter::XExport: return "X_EXPORT";
    case Adapter::RedditDump: return "REDDIT_DUMP";
    case Adapter::Canonical: return "CANONICAL";
  }
  return "CANONICAL";
}

Adapter adapter_from_string(std::string_view name) {
  if (name == "X_EXPORT") return Adapter::XExport;
  if (name == "REDDIT_DUMP") return Adapter::RedditDump;
  if (name == "CANONICAL") return Adapter::Canonical;
  throw Error("unknown adapter: " + std::string(name));
}

namespace {

struct RecordError {
  std::string message;
};

std::string require_id(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) throw RecordError{std::string("missing field '") + key + "'"};
  if (it->is_string()) {
    std::string s = it->get<std::string>();
    if (s.empty()) throw RecordError{std::string("empty field '") + key + "'"};
    return s;
  }
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw RecordError{std::string("field '") + key + "' must be a string"};
}

std::optional<std::string> optional_id(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) {
    std::string s = it->get<std::string>();
    if (s.empty()) return std::nullopt;
    return s;
  }
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw RecordError{std::string("field '") + key + "' must be a string"};
}

std::optional<std::string> optional_text(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw RecordError{std::string("field '") + key + "' must be a string"};
  return it->get<std::string>();
}

std::int64_t require_timestamp(const json& rec, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) continue;
    double v = 0;
    if (it->is_number()) {
      v = it->get<double>();
      if (it->is_number_integer()) {
        std::int64_t iv = it->get<std::int64_t>();
        if (iv < 0) throw RecordError{"negative timestamp"};
        return iv;
      }
    } else if (it->is_string()) {
      const std::string s = it->get<std::string>();
      try {
        std::size_t used = 0;
        v = std::stod(s, &used);
        if (used != s.size()) throw RecordError{"non-numeric timestamp"};
      } catch (const std::logic_error&) {
        throw RecordError{"non-numeric timestamp"};
      }
    } else {
      throw RecordError{"timestamp must be numeric"};
    }
    if (!std::isfinite(v) || v < 0) throw RecordError{"invalid timestamp"};
    return static_cast<std::int64_t>(std::floor(v));
  }
  throw RecordError{"missing timestamp"};
}

std::string community_for(const json& rec, const ParseOptions& options) {
  if (!options.community.empty()) return options.community;
  if (auto lang = optional_id(rec, "lang")) return *lang;
  return options.fallback_community;
}

Event parse_x_record(const json& rec, const ParseOptions& options) {
  Event e;
  e.platform = Platform::X;
  e.event_id = require_id(rec, "id");
  e.actor_id = require_id(rec, "author");
  e.timestamp = require_timestamp(rec, {"ts", "timestamp"});
  e.text = optional_text(rec, "text");
  e.community = community_for(rec, options);
  auto url = optional_id(rec, "url");
  if (auto rt_author = optional_id(rec, "retweeted_author")) {
    e.kind = EventKind::Retweet;
    e.target_actor_id = std::move(rt_author);
    e.object_id = url ? url : optional_id(rec, "retweeted_id");
    if (!e.object_id) throw RecordError{"retweet without url or retweeted_id"};
  } else if (auto reply_author = optional_id(rec, "in_reply_to_author")) {
    e.kind = EventKind::Reply;
    e.target_actor_id = std::move(reply_author);
    e.object_id = optional_id(rec, "in_reply_to_id");
  } else {
    e.kind = EventKind::Post;
    e.object_id = url ? url : e.event_id;
  }
  return e;
}

Event parse_reddit_record(const json& rec, const ParseOptions& options) {
  Event e;
  e.platform = Platform::Reddit;
  e.event_id = require_id(rec, "id");
  e.actor_id = require_id(rec, "author");
  e.timestamp = require_timestamp(rec, {"ts", "created_utc"});
  e.text = optional_text(rec, "body");
  if (!e.text) e.text = optional_text(rec, "text");
  e.community = community_for(rec, options);
  if (auto parent = optional_id(rec, "parent_id")) {
    e.kind = EventKind::Reply;
    e.object_id = parent;
    auto parent_author = optional_id(rec, "parent_author");
    if (parent_author && *parent_author != "[deleted]") {
      e.target_actor_id = std::move(parent_author);
    } else {
      e.target_actor_id = parent;
    }
  } else {
    e.kind = EventKind::Post;
    e.object_id = e.event_id;
  }
  return e;
}

Event parse_canonical_record(const json& rec) {
  Event e;
  e.event_id = require_id(rec, "event_id");
  auto platform = parse_platform(rec.value("platform", ""));
  if (!platform) throw RecordError{"invalid platform"};
  e.platform = *platform;
  auto kind = parse_event_kind(rec.value("kind", ""));
  if (!kind) throw RecordError{"invalid kind"};
  e.kind = *kind;
  e.actor_id = require_id(rec, "actor_id");
  e.target_actor_id = optional_id(rec, "target_actor_id");
  e.object_id = optional_id(rec, "object_id");
  e.timestamp = require_timestamp(rec, {"timestamp"});
  auto community = rec.find("community");
  if (community == rec.end() || !community->is_string()) throw RecordError{"missing community"};
  e.community = community->get<std::string>();
  e.text = optional_text(rec, "text");
  if (e.kind != EventKind::Post && !e.target_actor_id) throw RecordError{"missing target_actor_id"};
  if (e.kind == EventKind::Retweet && !e.object_id) throw RecordError{"retweet without object_id"};
  return e;
}

void parse_range(std::span<const std::string_view> lines, std::size_t first_line, Adapter adapter,
                 const ParseOptions& options, ParseResult& out) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    ++out.lines;
    const std::size_t line_no = first_line + i + 1;
    json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object()) {
      out.errors.push_back({line_no, "not a JSON object"});
      continue;
    }
    try {
      switch (adapter) {
        case Adapter::XExport: out.events.push_back(parse_x_record(rec, options)); break;
        case Adapter::RedditDump: out.events.push_back(parse_reddit_record(rec, options)); break;
        case Adapter::Canonical: out.events.push_back(parse_canonical_record(rec)); break;
      }
    } catch (const RecordError& err) {
      out.errors.push_back({line_no, err.message});
    } catch (const json::exception& err) {
      out.errors.push_back({line_no, err.what()});
    }
  }
}

}  // namespace

ParseResult parse_events(std::span<const std::string_view> lines, Adapter adapter,
                         const ParseOptions& options) {
  const std::size_t jobs = std::max<std::size_t>(1, std::min<std::size_t>(options.jobs, lines.size() / 1024 + 1));
  if (jobs == 1) {
    ParseResult result;
    parse_range(lines, 0, adapter, options, result);
    return result;
  }
  std::vector<ParseResult> shards(jobs);
  std::vector<std::thread> workers;
  const std::size_t per = (lines.size() + jobs - 1) / jobs;
  for (std::size_t j = 0; j < jobs; ++j) {
    const std::size_t lo = std::min(lines.size(), j * per);
    const std::size_t hi = std::min(lines.size(), lo + per);
    workers.emplace_back([&, j, lo, hi] {
      parse_range(lines.subspan(lo, hi - lo), lo, adapter, options, shards[j]);
    });
  }
  for (auto& w : workers) w.join();
  ParseResult result;
  for (auto& s : shards) {
    result.lines += s.lines;
    std::move(s.events.begin(), s.events.end(), std::back_inserter(result.events));
    std::move(s.errors.begin(), s.errors.end(), std::back_inserter(result.errors));
  }
  return result;
}

ParseResult parse_events(std::string_view contents, Adapter adapter, const ParseOptions& options) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t nl = contents.find('\n', pos);
    if (nl == std::string_view::npos) nl = contents.size();
    lines.push_back(contents.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return parse_events(std::span<const std::string_view>(lines), adapter, options);
}

EventLog normalize_log(std::vector<Event> events) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(events.size());
  std::vector<std::size_t> keep;
  keep.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (seen.insert(events[i].event_id).second) keep.push_back(i);
  }
  seen.clear();
  std::vector<Event> unique;
  unique.reserve(keep.size());
  for (std::size_t i : keep) unique.push_back(std::move(events[i]));
  std::sort(unique.begin(), unique.end(), [](const Event& a, const Event& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.event_id < b.event_id;
  });
  return EventLog::from_sorted(std::move(unique));
}

EventLog resolve_reply_targets(const EventLog& log) {
  std::unordered_map<std::string_view, std::string_view> author_of;
  for (const Event& e : log) {
    if (e.platform == Platform::Reddit) author_of.emplace(e.event_id, e.actor_id);
  }
  auto strip = [](std::string_view id) {
    if (id.size() > 3 && id[0] == 't' && id[2] == '_' && id[1] >= '1' && id[1] <= '6') {
      id.remove_prefix(3);
    }
    return id;
  };
  std::vector<Event> out(log.begin(), log.end());
  for (Event& e : out) {
    if (e.platform != Platform::Reddit || e.kind != EventKind::Reply) continue;
    if (!e.object_id || !e.target_actor_id || *e.target_actor_id != *e.object_id) continue;
    auto it = author_of.find(strip(*e.object_id));
    if (it == author_of.end()) it = author_of.find(*e.object_id);
    if (it != author_of.end()) e.target_actor_id = std::string(it->second);
  }
  return EventLog::from_sorted(std::move(out));
}

// ---------------------------------------------------------------------------
// Query

class QueryParser {
 public:
  explicit QueryParser(std::string_view src) : src_(src) {}

  Query run() {
    Query q;
    skip_ws();
    if (pos_ == src_.size()) return q;
    q_ = &q;
    q.root_ = parse_or();
    skip_ws();
    if (pos_ != src_.size()) throw QueryError(pos_, "unexpected input");
    return q;
  }

 private:
  using Node = Query::Node;

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n')) ++pos_;
  }

  bool keyword(std::string_view kw) {
    skip_ws();
    if (src_.size() - pos_ < kw.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i) {
      char c = src_[pos_ + i];
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
      if (c != kw[i]) return false;
    }
    const std::size_t after = pos_ + kw.size();
    if (after < src_.size()) {
      char c = src_[after];
      if (c != ' ' && c != '\t' && c != '\n' && c != '(' && c != '"' &&
          src_.substr(after, 3) != "\xE2\x80\x9C") {
        return false;
      }
    }
    pos_ = after;
    return true;
  }

  std::size_t add(Node n) {
    q_->nodes_.push_back(std::move(n));
    return q_->nodes_.size() - 1;
  }

  std::size_t parse_or() {
    std::vector<std::size_t> parts{parse_and()};
    while (keyword("OR")) parts.push_back(parse_and());
    if (parts.size() == 1) return parts.front();
    return add(Node{Node::Type::Or, {}, std::move(parts)});
  }

  std::size_t parse_and() {
    std::vector<std::size_t> parts{parse_primary()};
    while (keyword("AND")) parts.push_back(parse_primary());
    if (parts.size() == 1) return parts.front();
    return add(Node{Node::Type::And, {}, std::move(parts)});
  }

  std::size_t parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw QueryError(pos_, "expected term or '('");
    if (src_[pos_] == '(') {
      ++pos_;
      std::size_t inner = parse_or();
      skip_ws();
      if (pos_ >= src_.size() || src_[pos_] != ')') throw QueryError(pos_, "expected ')'");
      ++pos_;
      return inner;
    }
    const std::size_t start = pos_;
    std::string_view close;
    if (src_[pos_] == '"') {
      close = "\"";
      pos_ += 1;
    } else if (src_.substr(pos_, 3) == "\xE2\x80\x9C") {  // left double quotation mark
      close = "\xE2\x80\x9D";
      pos_ += 3;
    } else {
      throw QueryError(pos_, "expected quoted term or '('");
    }
    std::size_t end = src_.find(close, pos_);
    if (close != "\"" && end == std::string_view::npos) end = src_.find('"', pos_);
    if (end == std::string_view::npos) throw QueryError(start, "unterminated quoted term");
    std::string_view body = src_.substr(pos_, end - pos_);
    pos_ = end + (src_[end] == '"' ? 1 : 3);
    auto tokens = text::tokenize(body);
    if (tokens.empty()) throw QueryError(start, "empty term");
    return add(Node{Node::Type::Term, std::move(tokens), {}});
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Query* q_ = nullptr;
};

Query Query::parse(std::string_view expression) { return QueryParser(expression).run(); }

bool Query::eval(std::size_t node, std::span<const std::string> tokens) const {
  const Node& n = nodes_[node];
  switch (n.type) {
    case Node::Type::Term: {
      if (n.term.size() > tokens.size()) return false;
      auto it = std::search(tokens.begin(), tokens.end(), n.term.begin(), n.term.end());
      return it != tokens.end();
    }
    case Node::Type::And:
      return std::all_of(n.children.begin(), n.children.end(),
                         [&](std::size_t c) { return eval(c, tokens); });
    case Node::Type::Or:
      return std::any_of(n.children.begin(), n.children.end(),
                         [&](std::size_t c) { return eval(c, tokens); });
  }
  return false;
}

bool Query::matches_tokens(std::span<const std::string> tokens) const {
  if (empty()) return true;
  return eval(root_, tokens);
}

bool Query::matches(std::string_view text_body) const {
  if (empty()) return true;
  const auto tokens = text::tokenize(text_body);
  return eval(root_, tokens);
}

EventLog filter_query(const EventLog& log, const Query& query) {
  if (query.empty()) return log;
  std::vector<Event> kept;
  for (const Event& e : log) {
    if (e.text && query.matches(*e.text)) kept.push_back(e);
  }
  return EventLog::from_sorted(std::move(kept));
}

EventLog filter_query(const EventLog& log, std::string_view query) {
  return filter_query(log, Query::parse(query));
}

EventLog filter_community(const EventLog& log, std::string_view community) {
  std::vector<Event> kept;
  for (const Event& e : log) {
    if (e.community == community) kept.push_back(e);
  }
  return EventLog::from_sorted(std::move(kept));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json optional_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string to_json_line(const Event& e) {
  nlohmann::ordered_json j;
  j["event_id"] = e.event_id;
  j["platform"] = to_string(e.platform);
  j["kind"] = to_string(e.kind);
  j["actor_id"] = e.actor_id;
  j["target_actor_id"] = optional_json(e.target_actor_id);
  j["object_id"] = optional_json(e.object_id);
  j["timestamp"] = e.timestamp;
  j["community"] = e.community;
  j["text"] = optional_json(e.text);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_events_jsonl(std::ostream& out, const EventLog& log) {
  for (const Event& e : log) out << to_json_line(e) << '\n';
}

std::string log_stats_json(const EventLog& log, const ParseResult* parse) {
  nlohmann::ordered_json j;
  j["events"] = log.size();
  nlohmann::ordered_json kinds = nlohmann::ordered_json::object();
  for (EventKind k : {EventKind::Post, EventKind::Retweet, EventKind::Reply}) {
    auto it = log.kind_counts().find(k);
    kinds[std::string(to_string(k))] = it == log.kind_counts().end() ? 0 : it->second;
  }
  j["kinds"] = kinds;
  nlohmann::ordered_json communities = nlohmann::ordered_json::object();
  for (const auto& [c, n] : log.community_counts()) communities[c] = n;
  j["communities"] = communities;
  std::unordered_set<std::string_view> actors;
  for (const Event& e : log) actors.insert(e.actor_id);
  j["distinct_actors"] = actors.size();
  if (parse != nullptr) {
    j["lines"] = parse->lines;
    j["parsed"] = parse->events.size();
    j["errors"] = parse->errors.size();
    nlohmann::ordered_json errs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < parse->errors.size() && i < 100; ++i) {
      errs.push_back({{"line", parse->errors[i].line}, {"message", parse->errors[i].message}});
    }
    j["first_errors"] = errs;
  }
  return j.dump(2) + "\n";
}

}  // namespace botscope
