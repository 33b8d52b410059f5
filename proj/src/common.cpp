#include "botscope/common.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace botscope {

std::string_view to_string(Platform p) { return p == Platform::X ? "X" : "REDDIT"; }

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Post: return "POST";
    case EventKind::Retweet: return "RETWEET";
    case EventKind::Reply: return "REPLY";
  }
  return "POST";
}

std::string_view to_string(Agency a) {
  switch (a) {
    case Agency::Bot: return "BOT";
    case Agency::Human: return "HUMAN";
    case Agency::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string_view to_string(Stance s) {
  switch (s) {
    case Stance::SideA: return "SIDE_A";
    case Stance::SideB: return "SIDE_B";
    case Stance::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string_view to_string(UserClass c) {
  switch (c) {
    case UserClass::ABot: return "A_BOT";
    case UserClass::AHuman: return "A_HUMAN";
    case UserClass::BBot: return "B_BOT";
    case UserClass::BHuman: return "B_HUMAN";
    case UserClass::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::optional<Platform> parse_platform(std::string_view s) {
  if (s == "X") return Platform::X;
  if (s == "REDDIT") return Platform::Reddit;
  return std::nullopt;
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  if (s == "POST") return EventKind::Post;
  if (s == "RETWEET") return EventKind::Retweet;
  if (s == "REPLY") return EventKind::Reply;
  return std::nullopt;
}

std::optional<Stance> parse_stance(std::string_view s) {
  if (s == "SIDE_A") return Stance::SideA;
  if (s == "SIDE_B") return Stance::SideB;
  if (s == "UNKNOWN") return Stance::Unknown;
  return std::nullopt;
}

std::optional<UserClass> parse_user_class(std::string_view s) {
  for (UserClass c : kAllClasses) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

UserClass make_class(Agency agency, Stance stance) {
  if (agency == Agency::Unknown || stance == Stance::Unknown) return UserClass::Unknown;
  if (stance == Stance::SideA) return agency == Agency::Bot ? UserClass::ABot : UserClass::AHuman;
  return agency == Agency::Bot ? UserClass::BBot : UserClass::BHuman;
}

Stance stance_of(UserClass c) {
  switch (c) {
    case UserClass::ABot:
    case UserClass::AHuman: return Stance::SideA;
    case UserClass::BBot:
    case UserClass::BHuman: return Stance::SideB;
    case UserClass::Unknown: return Stance::Unknown;
  }
  return Stance::Unknown;
}

UserClass class_of(const ClassMap& classes, std::string_view actor) {
  auto it = classes.find(std::string(actor));
  return it == classes.end() ? UserClass::Unknown : it->second;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

}  // namespace botscope
