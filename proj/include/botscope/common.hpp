#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace botscope {

enum class Platform { X, Reddit };
enum class EventKind { Post, Retweet, Reply };

enum class Agency { Bot, Human, Unknown };
enum class Stance { SideA, SideB, Unknown };

// Faction x agency product. Unknown absorbs any unknown component.
enum class UserClass { ABot, AHuman, BBot, BHuman, Unknown };

inline constexpr UserClass kKnownClasses[] = {UserClass::ABot, UserClass::AHuman,
                                              UserClass::BBot, UserClass::BHuman};
inline constexpr UserClass kAllClasses[] = {UserClass::ABot, UserClass::AHuman, UserClass::BBot,
                                            UserClass::BHuman, UserClass::Unknown};

std::string_view to_string(Platform p);
std::string_view to_string(EventKind k);
std::string_view to_string(Agency a);
std::string_view to_string(Stance s);
std::string_view to_string(UserClass c);

std::optional<Platform> parse_platform(std::string_view s);
std::optional<EventKind> parse_event_kind(std::string_view s);
std::optional<Stance> parse_stance(std::string_view s);
std::optional<UserClass> parse_user_class(std::string_view s);

UserClass make_class(Agency agency, Stance stance);
inline bool is_bot(UserClass c) { return c == UserClass::ABot || c == UserClass::BBot; }
inline bool is_human(UserClass c) { return c == UserClass::AHuman || c == UserClass::BHuman; }
Stance stance_of(UserClass c);

using ClassMap = std::unordered_map<std::string, UserClass>;

// Unknown for actors absent from the map.
UserClass class_of(const ClassMap& classes, std::string_view actor);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input at a known line (1-based).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Network or service failure; callers may retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format_double(double v);

// Minimal CSV field quoting (RFC 4180 style).
std::string csv_field(std::string_view s);
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::string sha256_hex(std::string_view data);

}  // namespace botscope
