#pragma once

// Small string helpers shared by the modules. Case mapping is ASCII-only;
// non-ASCII bytes pass through untouched. Character counts are in UTF-8
// code points.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace acro::text {

inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_alpha(char c) { return is_upper(c) || is_lower(c); }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }
inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = to_lower(c);
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// Lowercase and collapse whitespace runs to a single space.
inline std::string normalize_phrase(std::string_view s) { return join(split_ws(lower(s))); }

inline bool is_continuation_byte(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

inline std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) n += is_continuation_byte(c) ? 0 : 1;
  return n;
}

// Last `n` code points (the whole string when it is shorter).
inline std::string last_codepoints(std::string_view s, std::size_t n) {
  if (n == 0) return {};
  std::size_t pos = s.size();
  std::size_t seen = 0;
  while (pos > 0) {
    --pos;
    if (!is_continuation_byte(s[pos]) && ++seen == n) break;
  }
  return std::string(s.substr(pos));
}

}  // namespace acro::text
