#pragma once

// Token features for the CRF tagger.
//
// Key vocabulary (frozen; trained models depend on it):
//
//   current token     w.lower=<s>  w.last3=<s>  w.isupper=<b>  w.istitle=<b>
//                     w.pos=<P>    w.pos2=<PP>  w.upper60=<b>
//   token at -1/+1    -1:lower=<s> -1:istitle=<b> -1:isupper=<b> -1:pos=<P> -1:pos2=<PP>
//                     (and the same with a +1: prefix)
//   boundaries        BOS when there is no left neighbour, EOS when there is
//                     no right neighbour
//
// <b> is "true" or "false".

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "acrotag/text.hpp"

namespace acro {

// Sorted, duplicate-free feature keys of one token.
using FeatureSet = std::vector<std::string>;

enum class PosTag { Noun, Verb, Adj, Adv, Det, Adp, Num, Punct, X };

inline std::string_view to_string(PosTag p) {
  switch (p) {
    case PosTag::Noun: return "NOUN";
    case PosTag::Verb: return "VERB";
    case PosTag::Adj: return "ADJ";
    case PosTag::Adv: return "ADV";
    case PosTag::Det: return "DET";
    case PosTag::Adp: return "ADP";
    case PosTag::Num: return "NUM";
    case PosTag::Punct: return "PUNCT";
    case PosTag::X: return "X";
  }
  return "X";
}

namespace detail {

inline const std::unordered_map<std::string_view, PosTag>& closed_class_lexicon() {
  static const std::unordered_map<std::string_view, PosTag> lex = {
      {"the", PosTag::Det},     {"a", PosTag::Det},        {"an", PosTag::Det},
      {"this", PosTag::Det},    {"that", PosTag::Det},     {"these", PosTag::Det},
      {"those", PosTag::Det},   {"each", PosTag::Det},     {"every", PosTag::Det},
      {"some", PosTag::Det},    {"any", PosTag::Det},      {"no", PosTag::Det},
      {"all", PosTag::Det},     {"both", PosTag::Det},     {"of", PosTag::Adp},
      {"in", PosTag::Adp},      {"on", PosTag::Adp},       {"at", PosTag::Adp},
      {"by", PosTag::Adp},      {"for", PosTag::Adp},      {"with", PosTag::Adp},
      {"from", PosTag::Adp},    {"to", PosTag::Adp},       {"into", PosTag::Adp},
      {"over", PosTag::Adp},    {"under", PosTag::Adp},    {"between", PosTag::Adp},
      {"through", PosTag::Adp}, {"during", PosTag::Adp},   {"without", PosTag::Adp},
      {"within", PosTag::Adp},  {"via", PosTag::Adp},      {"as", PosTag::Adp},
      {"is", PosTag::Verb},     {"are", PosTag::Verb},     {"was", PosTag::Verb},
      {"were", PosTag::Verb},   {"be", PosTag::Verb},      {"been", PosTag::Verb},
      {"has", PosTag::Verb},    {"have", PosTag::Verb},    {"had", PosTag::Verb},
      {"can", PosTag::Verb},    {"could", PosTag::Verb},   {"will", PosTag::Verb},
      {"would", PosTag::Verb},  {"may", PosTag::Verb},     {"should", PosTag::Verb},
      {"not", PosTag::Adv},     {"also", PosTag::Adv},     {"very", PosTag::Adv},
      {"however", PosTag::Adv}, {"thus", PosTag::Adv},     {"then", PosTag::Adv},
      {"and", PosTag::X},       {"or", PosTag::X},         {"but", PosTag::X},
      {"we", PosTag::X},        {"it", PosTag::X},         {"they", PosTag::X},
      {"which", PosTag::X},     {"its", PosTag::X},        {"our", PosTag::X},
      {"their", PosTag::X},
  };
  return lex;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool is_number(std::string_view s) {
  bool digit = false;
  for (char c : s) {
    if (text::is_digit(c)) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '-' && c != '+' && c != '%') {
      return false;
    }
  }
  return digit;
}

inline bool is_punct(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (text::is_alnum(c) || static_cast<unsigned char>(c) >= 0x80) return false;
  }
  return true;
}

// Python str.isupper: at least one cased character and no lowercase ones.
inline bool py_isupper(std::string_view s) {
  bool cased = false;
  for (char c : s) {
    if (text::is_lower(c)) return false;
    if (text::is_upper(c)) cased = true;
  }
  return cased;
}

// Python str.istitle: uppercase only after uncased characters, lowercase only
// after cased ones, and at least one cased character.
inline bool py_istitle(std::string_view s) {
  bool cased = false;
  bool prev_cased = false;
  for (char c : s) {
    if (text::is_upper(c)) {
      if (prev_cased) return false;
      prev_cased = cased = true;
    } else if (text::is_lower(c)) {
      if (!prev_cased) return false;
      prev_cased = cased = true;
    } else {
      prev_cased = false;
    }
  }
  return cased;
}

}  // namespace detail

// Heuristic tagger: punctuation and number patterns, a closed-class lexicon,
// suffix rules for lowercase words, NOUN otherwise.
inline PosTag pos_tag_token(std::string_view token) {
  if (detail::is_punct(token)) return PosTag::Punct;
  if (detail::is_number(token)) return PosTag::Num;
  std::string low = text::lower(token);
  const auto& lex = detail::closed_class_lexicon();
  if (auto it = lex.find(low); it != lex.end()) return it->second;
  if (detail::py_isupper(token) || low.size() < 5) return PosTag::Noun;
  using detail::ends_with;
  if (ends_with(low, "ing") || ends_with(low, "ed") || ends_with(low, "ize") ||
      ends_with(low, "ise")) {
    return PosTag::Verb;
  }
  if (ends_with(low, "ly")) return PosTag::Adv;
  for (std::string_view suf : {"ous", "ive", "able", "ible", "al", "ful", "less", "ic"}) {
    if (ends_with(low, suf)) return PosTag::Adj;
  }
  return PosTag::Noun;
}

inline std::vector<PosTag> pos_tag(std::span<const std::string> tokens) {
  std::vector<PosTag> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(pos_tag_token(t));
  return out;
}

inline std::vector<std::string> pos_strings(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.emplace_back(to_string(pos_tag_token(t)));
  return out;
}

// Uppercase characters make up at least 60% of all characters.
inline bool mostly_upper(std::string_view word) {
  std::size_t total = text::codepoint_count(word);
  if (total == 0) return false;
  std::size_t upper = 0;
  for (char c : word) upper += text::is_upper(c) ? 1 : 0;
  return upper * 10 >= total * 6;
}

namespace detail {

inline const char* flag(bool b) { return b ? "true" : "false"; }

inline std::string pos_prefix2(std::string_view pos) {
  return std::string(pos.substr(0, std::min<std::size_t>(2, pos.size())));
}

inline void add_neighbour(FeatureSet& out, std::string_view prefix, const std::string& word,
                          std::string_view pos) {
  std::string p(prefix);
  out.push_back(p + "lower=" + text::lower(word));
  out.push_back(p + "istitle=" + flag(py_istitle(word)));
  out.push_back(p + "isupper=" + flag(py_isupper(word)));
  out.push_back(p + "pos=" + std::string(pos));
  out.push_back(p + "pos2=" + pos_prefix2(pos));
}

}  // namespace detail

// POS tags are passed as strings so that precomputed tags from any tagset
// can be used.
inline FeatureSet extract_features(std::span<const std::string> tokens,
                                   std::span<const std::string> pos, std::size_t index) {
  if (pos.size() != tokens.size()) throw std::invalid_argument("extract_features: pos/token length mismatch");
  if (index >= tokens.size()) throw std::out_of_range("extract_features: index out of range");
  using detail::flag;
  const std::string& w = tokens[index];
  FeatureSet f;
  f.reserve(18);
  f.push_back("w.lower=" + text::lower(w));
  f.push_back("w.last3=" + text::last_codepoints(w, 3));
  f.push_back(std::string("w.isupper=") + flag(detail::py_isupper(w)));
  f.push_back(std::string("w.istitle=") + flag(detail::py_istitle(w)));
  f.push_back("w.pos=" + pos[index]);
  f.push_back("w.pos2=" + detail::pos_prefix2(pos[index]));
  f.push_back(std::string("w.upper60=") + flag(mostly_upper(w)));
  if (index == 0) {
    f.push_back("BOS");
  } else {
    detail::add_neighbour(f, "-1:", tokens[index - 1], pos[index - 1]);
  }
  if (index + 1 == tokens.size()) {
    f.push_back("EOS");
  } else {
    detail::add_neighbour(f, "+1:", tokens[index + 1], pos[index + 1]);
  }
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

inline std::vector<FeatureSet> featurize_sentence(std::span<const std::string> tokens,
                                                  std::span<const std::string> pos) {
  if (pos.size() != tokens.size()) throw std::invalid_argument("featurize_sentence: pos/token length mismatch");
  std::vector<FeatureSet> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) out.push_back(extract_features(tokens, pos, i));
  return out;
}

inline std::vector<FeatureSet> featurize_sentence(std::span<const std::string> tokens) {
  auto pos = pos_strings(tokens);
  return featurize_sentence(tokens, pos);
}

}  // namespace acro
