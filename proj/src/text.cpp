#include "botscope/text.hpp"

#include <cstdint>

namespace botscope::text {
namespace {

struct CodePoint {
  char32_t value;
  std::size_t begin;
  std::size_t length;
  bool valid;
};

// Decodes one code point at `pos`. Invalid sequences yield a one-byte invalid
// code point so iteration always advances.
CodePoint decode_at(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, pos, 1, true};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0xFFFD, pos, 1, false};
  }
  if (pos + len > s.size()) return {0xFFFD, pos, 1, false};
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return {0xFFFD, pos, 1, false};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, pos, len, true};
}

bool is_whitespace(char32_t c) {
  return c == ' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

bool is_separator(const CodePoint& cp) {
  if (!cp.valid) return true;
  const char32_t c = cp.value;
  if (c < 0x80) {
    return !((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'));
  }
  if (is_whitespace(c)) return true;
  if (c >= 0xA1 && c <= 0xBF && c != 0xAA && c != 0xB5 && c != 0xBA) return true;
  if (c == 0xD7 || c == 0xF7) return true;
  if (c >= 0x2000 && c <= 0x206F) return true;  // general punctuation
  if (c >= 0x2E00 && c <= 0x2E7F) return true;  // supplemental punctuation
  if (c >= 0x3000 && c <= 0x303F) return true;  // CJK symbols and punctuation
  if (c >= 0xFE30 && c <= 0xFE4F) return true;  // CJK compatibility forms
  if ((c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
      (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65)) {
    return true;  // fullwidth punctuation
  }
  return false;
}

char32_t fold(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  if (c >= 0xFF21 && c <= 0xFF3A) return c + 0x20;
  return c;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else if (c < 0x10000) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (c >> 18));
    out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t pos = 0; pos < utf8.size();) {
    const CodePoint cp = decode_at(utf8, pos);
    pos += cp.length;
    if (is_separator(cp)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      append_utf8(cur, fold(cp.value));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::string fold_case(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for (std::size_t pos = 0; pos < utf8.size();) {
    const CodePoint cp = decode_at(utf8, pos);
    pos += cp.length;
    if (cp.valid) {
      append_utf8(out, fold(cp.value));
    } else {
      out += utf8[cp.begin];
    }
  }
  return out;
}

std::size_t code_point_count(std::string_view utf8) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < utf8.size(); ++n) pos += decode_at(utf8, pos).length;
  return n;
}

std::vector<std::string> chunk_on_whitespace(std::string_view utf8, std::size_t max_chars) {
  std::vector<CodePoint> cps;
  for (std::size_t pos = 0; pos < utf8.size();) {
    cps.push_back(decode_at(utf8, pos));
    pos += cps.back().length;
  }
  auto slice = [&](std::size_t from, std::size_t to) {
    const std::size_t b = cps[from].begin;
    const std::size_t e = to < cps.size() ? cps[to].begin : utf8.size();
    return std::string(utf8.substr(b, e - b));
  };
  auto ws = [&](std::size_t i) { return cps[i].valid && is_whitespace(cps[i].value); };

  std::vector<std::string> pieces;
  if (max_chars == 0) return pieces;
  std::size_t i = 0;
  while (i < cps.size() && ws(i)) ++i;
  while (i < cps.size()) {
    if (cps.size() - i <= max_chars) {
      std::size_t end = cps.size();
      while (end > i && ws(end - 1)) --end;
      if (end > i) pieces.push_back(slice(i, end));
      break;
    }
    std::size_t cut = i + max_chars;  // first code point not in this piece
    std::size_t brk = cut;
    while (brk > i && !ws(brk)) --brk;
    if (brk > i) {
      std::size_t end = brk;
      while (end > i && ws(end - 1)) --end;
      pieces.push_back(slice(i, end));
      i = brk;
    } else {
      pieces.push_back(slice(i, cut));
      i = cut;
    }
    while (i < cps.size() && ws(i)) ++i;
  }
  return pieces;
}

}  // namespace botscope::text
