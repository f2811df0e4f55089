#pragma once

// Rule-based short/long form pair extraction in the style of Schwartz and
// Hearst: a short form enclosed in parentheses is paired with the shortest
// suffix of the preceding words that covers its characters right to left.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "acrotag/tags.hpp"
#include "acrotag/text.hpp"

namespace acro::rules {

struct PairCandidate {
  Mention short_form;
  Mention long_form;
};

struct ExtractOptions {
  // Also accept "SHORT ( long form )".
  bool reverse_pattern = false;
};

inline bool is_acronym_form(std::string_view token) {
  std::size_t len = text::codepoint_count(token);
  if (len < 2 || len > 10) return false;
  if (!text::is_alnum(token.front())) return false;
  std::size_t alpha = 0, upper = 0;
  for (char c : token) {
    if (text::is_alpha(c)) {
      ++alpha;
      if (text::is_upper(c)) ++upper;
    }
  }
  return alpha > 0 && upper * 10 >= alpha * 6;
}

// Maximum number of words searched for the long form of `acronym`.
inline std::size_t window_cap(std::string_view acronym) {
  std::size_t n = text::codepoint_count(acronym);
  return std::min(n + 5, 2 * n);
}

// Right-to-left character alignment over the window text. Every alphanumeric
// acronym character must be found, in order, scanning leftwards; the first one
// must additionally start a word. Returns the words from the one holding the
// first match to the end of the window, or nothing.
inline std::optional<Mention> best_long_form(std::string_view acronym,
                                             std::span<const std::string> window) {
  if (window.empty() || acronym.empty()) return std::nullopt;
  std::string joined;
  std::vector<std::size_t> word_of;  // char position -> window word
  for (std::size_t w = 0; w < window.size(); ++w) {
    if (w) {
      joined += ' ';
      word_of.push_back(w);
    }
    joined += window[w];
    word_of.insert(word_of.end(), window[w].size(), w);
  }
  long s = static_cast<long>(acronym.size()) - 1;
  long l = static_cast<long>(joined.size()) - 1;
  long matched = -1;
  while (s >= 0) {
    char c = text::to_lower(acronym[static_cast<std::size_t>(s)]);
    if (!text::is_alnum(c)) {
      --s;
      continue;
    }
    while (l >= 0 &&
           (text::to_lower(joined[static_cast<std::size_t>(l)]) != c ||
            (s == 0 && l > 0 && text::is_alnum(joined[static_cast<std::size_t>(l - 1)])))) {
      --l;
    }
    if (l < 0) return std::nullopt;
    matched = l;
    --l;
    --s;
  }
  if (matched < 0) return std::nullopt;
  std::size_t first = word_of[static_cast<std::size_t>(matched)];
  return Mention{MentionClass::Long, first, window.size()};
}

namespace detail {

inline bool is_paren(const std::string& t) { return t == "(" || t == ")"; }

inline bool overlaps(const Mention& a, const Mention& b) { return a.start < b.end && b.start < a.end; }

inline bool overlaps_any(const Mention& m, const std::vector<PairCandidate>& pairs) {
  for (const auto& p : pairs) {
    if (overlaps(m, p.short_form) || overlaps(m, p.long_form)) return true;
  }
  return false;
}

}  // namespace detail

inline std::vector<PairCandidate> extract_pairs(std::span<const std::string> tokens,
                                                const ExtractOptions& opts = {}) {
  std::vector<PairCandidate> out;
  const std::size_t n = tokens.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (tokens[i - 1] != "(" || tokens[i + 1] != ")" || !is_acronym_form(tokens[i])) continue;
    // The window stops at the sentence start, the cap, or any parenthesis.
    std::size_t cap = window_cap(tokens[i]);
    std::size_t begin = i - 1;
    while (begin > 0 && (i - 1 - begin) < cap && !detail::is_paren(tokens[begin - 1])) --begin;
    auto window = tokens.subspan(begin, i - 1 - begin);
    auto found = best_long_form(tokens[i], window);
    if (!found) continue;
    PairCandidate p{{MentionClass::Short, i, i + 1},
                    {MentionClass::Long, begin + found->start, begin + found->end}};
    if (!detail::overlaps_any(p.long_form, out) && !detail::overlaps_any(p.short_form, out)) {
      out.push_back(p);
    }
  }
  if (opts.reverse_pattern) {
    for (std::size_t i = 0; i + 3 < n; ++i) {
      if (tokens[i + 1] != "(" || !is_acronym_form(tokens[i])) continue;
      std::size_t close = i + 2;
      std::size_t cap = window_cap(tokens[i]);
      while (close < n && tokens[close] != ")" && tokens[close] != "(" && close - (i + 2) < cap) ++close;
      if (close >= n || tokens[close] != ")" || close == i + 2) continue;
      auto window = tokens.subspan(i + 2, close - (i + 2));
      if (window.size() < 2) continue;
      auto found = best_long_form(tokens[i], window);
      if (!found || found->start != 0) continue;
      PairCandidate p{{MentionClass::Short, i, i + 1},
                      {MentionClass::Long, i + 2, i + 2 + found->end}};
      if (!detail::overlaps_any(p.long_form, out) && !detail::overlaps_any(p.short_form, out)) {
        out.push_back(p);
      }
    }
    std::sort(out.begin(), out.end(), [](const PairCandidate& a, const PairCandidate& b) {
      return std::min(a.short_form.start, a.long_form.start) <
             std::min(b.short_form.start, b.long_form.start);
    });
  }
  return out;
}

inline std::vector<Tag> pairs_to_tags(std::size_t length, std::span<const PairCandidate> pairs) {
  std::vector<Tag> tags(length, Tag::O);
  std::vector<bool> used(length, false);
  for (const auto& p : pairs) {
    for (const Mention& m : {p.short_form, p.long_form}) {
      if (m.start >= m.end || m.end > length) throw std::invalid_argument("pairs_to_tags: mention out of bounds");
      for (std::size_t t = m.start; t < m.end; ++t) {
        if (used[t]) throw std::invalid_argument("pairs_to_tags: overlapping pairs at token " + std::to_string(t));
        used[t] = true;
        tags[t] = t == m.start ? begin_tag(m.cls) : inside_tag(m.cls);
      }
    }
  }
  return tags;
}

inline std::vector<Tag> tag_sentence(std::span<const std::string> tokens, const ExtractOptions& opts = {}) {
  return pairs_to_tags(tokens.size(), extract_pairs(tokens, opts));
}

}  // namespace acro::rules
