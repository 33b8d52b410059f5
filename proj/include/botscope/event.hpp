#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "botscope/common.hpp"

namespace botscope {

/// One timestamped platform action.
///
/// Retweets and replies always carry `target_actor_id`; retweets always carry
/// `object_id`. For Reddit replies whose parent author is unknown at parse
/// time the target is the parent id itself (an anonymous node) until
/// resolve_reply_targets() maps it to the parent's author.
struct Event {
  std::string event_id;
  Platform platform = Platform::X;
  EventKind kind = EventKind::Post;
  std::string actor_id;
  std::optional<std::string> target_actor_id;
  std::optional<std::string> object_id;
  std::int64_t timestamp = 0;  // UTC seconds
  std::string community;
  std::optional<std::string> text;

  bool operator==(const Event&) const = default;
};

class Query;

/// Validated, deduplicated log sorted by (timestamp, event_id). Only built
/// through normalize_log() and the filters below, so the ordering and tallies
/// always hold.
class EventLog {
 public:
  EventLog() = default;

  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }

  const std::map<EventKind, std::size_t>& kind_counts() const { return kind_counts_; }
  const std::map<std::string, std::size_t>& community_counts() const { return community_counts_; }

  bool operator==(const EventLog& other) const { return events_ == other.events_; }

 private:
  friend EventLog normalize_log(std::vector<Event> events);
  friend EventLog resolve_reply_targets(const EventLog& log);
  friend EventLog filter_query(const EventLog& log, const Query& query);
  friend EventLog filter_community(const EventLog& log, std::string_view community);

  // `events` must already be sorted and unique.
  static EventLog from_sorted(std::vector<Event> events);
  void recount();

  std::vector<Event> events_;
  std::map<EventKind, std::size_t> kind_counts_;
  std::map<std::string, std::size_t> community_counts_;
};

enum class Adapter { XExport, RedditDump, Canonical };

std::string_view to_string(Adapter a);
// Throws Error on an unrecognized adapter name.
Adapter adapter_from_string(std::string_view name);

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  std::vector<Event> events;
  std::vector<LineError> errors;
  std::size_t lines = 0;  // non-blank lines seen
};

struct ParseOptions {
  // Forces every event's community when non-empty; otherwise the record's
  // "lang" field is used, falling back to `fallback_community`.
  std::string community;
  std::string fallback_community = "und";
  unsigned jobs = 1;
};

// One Event per well-formed record; malformed lines become LineError entries
// and the run continues. Blank lines are skipped.
ParseResult parse_events(std::span<const std::string_view> lines, Adapter adapter,
                         const ParseOptions& options = {});
ParseResult parse_events(std::string_view contents, Adapter adapter,
                         const ParseOptions& options = {});

EventLog normalize_log(std::vector<Event> events);

// Maps anonymous Reddit reply targets (target == parent id) to the author of
// the parent event when that event is present in the log.
EventLog resolve_reply_targets(const EventLog& log);

class QueryError : public Error {
 public:
  QueryError(std::size_t position, const std::string& what)
      : Error("query error at position " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Boolean keyword expression: quoted terms joined by AND / OR with
/// parentheses, AND binding tighter. A term matches when its tokens occur as a
/// consecutive run in the text's tokens (case-insensitive, whole tokens).
class Query {
 public:
  Query() = default;
  // Throws QueryError with the byte offset of the problem.
  static Query parse(std::string_view expression);

  bool empty() const { return nodes_.empty(); }
  bool matches(std::string_view text) const;
  bool matches_tokens(std::span<const std::string> tokens) const;

 private:
  struct Node {
    enum class Type { Term, And, Or } type = Type::Term;
    std::vector<std::string> term;
    std::vector<std::size_t> children;
  };
  friend class QueryParser;

  bool eval(std::size_t node, std::span<const std::string> tokens) const;

  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

// Keeps events whose text satisfies the query, preserving order. An empty
// query passes everything through; otherwise events without text are dropped.
EventLog filter_query(const EventLog& log, const Query& query);
EventLog filter_query(const EventLog& log, std::string_view query);

EventLog filter_community(const EventLog& log, std::string_view community);

// Canonical newline-delimited JSON, one object per event with every Event
// field (absent optionals as null).
std::string to_json_line(const Event& e);
void write_events_jsonl(std::ostream& out, const EventLog& log);
std::string log_stats_json(const EventLog& log, const ParseResult* parse = nullptr);

}  // namespace botscope
