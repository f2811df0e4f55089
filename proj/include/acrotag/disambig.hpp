#pragma once

// Acronym disambiguation as span selection.
//
// Input construction (version "seq_a-v1"):
//   sequence_a = [acronym token] + tokens of every candidate long form, in
//                dictionary order, with no separators. candidate_spans records
//                the [start, end) range of each candidate inside sequence_a.
//   sequence_b = up to n/2 tokens left of the acronym, the acronym, and up to
//                n/2 tokens right of it; clipped at sentence boundaries.
//
// A span scorer yields start/end distributions over sequence_a. The best
// (s, e) with s <= e inside the candidate region maximizes start[s] * end[e];
// the span text is mapped to a dictionary candidate by word-set Jaccard.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "acrotag/corpus.hpp"
#include "acrotag/error.hpp"
#include "acrotag/io.hpp"
#include "acrotag/text.hpp"

namespace acro::ad {

inline constexpr std::string_view kConstructionVersion = "seq_a-v1";
inline constexpr std::size_t kDefaultWindow = 120;

struct CandidateSpan {
  std::size_t candidate;  // index into the dictionary entry
  std::size_t start;
  std::size_t end;  // exclusive
};

struct AdInput {
  std::string id;
  std::vector<std::string> sequence_a;
  std::vector<std::string> sequence_b;
  std::vector<CandidateSpan> candidate_spans;
  std::vector<std::string> candidates;
  // Position of the acronym inside sequence_b.
  std::size_t acronym_in_b = 0;
  std::size_t n = kDefaultWindow;
};

struct SpanScores {
  std::vector<double> start;
  std::vector<double> end;
};

enum class Source { Lexical, External, Ensemble, Postprocess };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::Lexical: return "lexical";
    case Source::External: return "external";
    case Source::Ensemble: return "ensemble";
    case Source::Postprocess: return "postprocess";
  }
  return "lexical";
}

struct AdPrediction {
  std::string id;
  std::string expansion;
  std::string span_text;
  double jaccard = 0.0;
  Source source = Source::Lexical;
};

inline AdInput build_input(const AdInstance& inst, const ExpansionDictionary& dict,
                           std::size_t n = kDefaultWindow) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("build_input: n must be even and >= 2");
  if (inst.acronym_index >= inst.tokens.size()) {
    throw std::invalid_argument("build_input: acronym index out of range in " + inst.id);
  }
  const auto* cands = dict.find(inst.acronym());
  if (!cands) throw DataError(inst.id + ": acronym '" + inst.acronym() + "' not in dictionary");

  AdInput in;
  in.id = inst.id;
  in.n = n;
  in.candidates = *cands;
  in.sequence_a.push_back(inst.acronym());
  for (std::size_t c = 0; c < cands->size(); ++c) {
    auto words = text::split_ws((*cands)[c]);
    std::size_t start = in.sequence_a.size();
    in.sequence_a.insert(in.sequence_a.end(), words.begin(), words.end());
    in.candidate_spans.push_back({c, start, in.sequence_a.size()});
  }
  const std::size_t half = n / 2;
  const std::size_t i = inst.acronym_index;
  const std::size_t lo = i >= half ? i - half : 0;
  const std::size_t hi = std::min(inst.tokens.size(), i + half + 1);
  in.sequence_b.assign(inst.tokens.begin() + static_cast<std::ptrdiff_t>(lo),
                       inst.tokens.begin() + static_cast<std::ptrdiff_t>(hi));
  in.acronym_in_b = i - lo;
  return in;
}

inline std::set<std::string> word_set(std::string_view s) {
  auto w = text::split_ws(text::lower(s));
  return {w.begin(), w.end()};
}

inline double jaccard(std::string_view a, std::string_view b) {
  auto sa = word_set(a), sb = word_set(b);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Candidate with the highest Jaccard score; ties go to the earliest.
inline std::pair<std::size_t, double> match_candidate(std::string_view span,
                                                      std::span<const std::string> candidates) {
  if (candidates.empty()) throw std::invalid_argument("match_candidate: empty candidate list");
  std::size_t best = 0;
  double best_score = jaccard(span, candidates[0]);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    double s = jaccard(span, candidates[c]);
    if (s > best_score) {
      best = c;
      best_score = s;
    }
  }
  return {best, best_score};
}

// Fraction of each candidate's distinct words that occur in the context,
// ignoring the acronym token itself.
inline std::vector<double> lexical_score(const AdInput& in) {
  std::set<std::string> context;
  for (std::size_t t = 0; t < in.sequence_b.size(); ++t) {
    if (t != in.acronym_in_b) context.insert(text::lower(in.sequence_b[t]));
  }
  std::vector<double> out;
  out.reserve(in.candidates.size());
  for (const auto& c : in.candidates) {
    auto words = word_set(c);
    std::size_t hit = 0;
    for (const auto& w : words) hit += context.count(w);
    out.push_back(words.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(words.size()));
  }
  return out;
}

namespace detail {

inline void normalize(std::vector<double>& v, const std::string& what) {
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw DataError(what + ": negative or non-finite probability");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-3) {
    throw DataError(what + ": probabilities sum to " + std::to_string(sum));
  }
  for (double& x : v) x /= sum;
}

}  // namespace detail

// Validates lengths against the inputs and renormalizes each vector (sums
// within 1e-3 of one are accepted).
inline std::map<std::string, SpanScores> parse_external_scores(const nlohmann::json& doc,
                                                               std::span<const AdInput> inputs) {
  if (!doc.is_object() || doc.value("format", "") != "acrotag-span-scores") {
    throw DataError("not an acrotag span score file");
  }
  if (doc.value("construction", "") != kConstructionVersion) {
    throw DataError("score file built for input construction '" + doc.value("construction", "") +
                    "', expected '" + std::string(kConstructionVersion) + "'");
  }
  if (doc.contains("n") && !doc["n"].is_number_unsigned()) throw DataError("score file field 'n' is not a count");
  std::map<std::string, const nlohmann::json*> records;
  try {
    for (const auto& r : doc.at("records")) records[r.at("id").get<std::string>()] = &r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed score file: ") + e.what());
  }
  std::map<std::string, SpanScores> out;
  for (const auto& in : inputs) {
    if (doc.contains("n") && doc["n"].get<std::size_t>() != in.n) {
      throw DataError("score file window n=" + doc["n"].dump() + " differs from " + std::to_string(in.n));
    }
    auto it = records.find(in.id);
    if (it == records.end()) throw DataError("no scores for id " + in.id);
    SpanScores s;
    try {
      s.start = it->second->at("start").get<std::vector<double>>();
      s.end = it->second->at("end").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("id " + in.id + ": " + e.what());
    }
    if (s.start.size() != in.sequence_a.size() || s.end.size() != in.sequence_a.size()) {
      throw DataError("id " + in.id + ": score vectors of length " + std::to_string(s.start.size()) +
                      "/" + std::to_string(s.end.size()) + " for sequence_a of length " +
                      std::to_string(in.sequence_a.size()));
    }
    detail::normalize(s.start, "id " + in.id + " start");
    detail::normalize(s.end, "id " + in.id + " end");
    out.emplace(in.id, std::move(s));
  }
  return out;
}

inline std::map<std::string, SpanScores> load_external_scores(const std::filesystem::path& path,
                                                              std::span<const AdInput> inputs) {
  auto doc = io::read_json(path);
  try {
    return parse_external_scores(doc, inputs);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline nlohmann::json inputs_to_json(std::span<const AdInput> inputs) {
  nlohmann::json j;
  j["construction"] = std::string(kConstructionVersion);
  j["records"] = nlohmann::json::array();
  for (const auto& in : inputs) {
    nlohmann::json r;
    r["id"] = in.id;
    r["n"] = in.n;
    r["sequence_a"] = in.sequence_a;
    r["sequence_b"] = in.sequence_b;
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& c : in.candidate_spans) {
      spans.push_back({{"candidate", in.candidates[c.candidate]}, {"start", c.start}, {"end", c.end}});
    }
    r["candidate_spans"] = std::move(spans);
    j["records"].push_back(std::move(r));
  }
  return j;
}

inline SpanScores average_scores(std::span<const SpanScores> scores) {
  if (scores.empty()) throw std::invalid_argument("average_scores: empty list");
  const std::size_t len = scores.front().start.size();
  SpanScores out{std::vector<double>(len, 0.0), std::vector<double>(len, 0.0)};
  for (const auto& s : scores) {
    if (s.start.size() != len || s.end.size() != len) {
      throw std::invalid_argument("average_scores: vectors of different lengths (inputs built differently)");
    }
    for (std::size_t i = 0; i < len; ++i) {
      out.start[i] += s.start[i];
      out.end[i] += s.end[i];
    }
  }
  const double n = static_cast<double>(scores.size());
  for (std::size_t i = 0; i < len; ++i) {
    out.start[i] /= n;
    out.end[i] /= n;
  }
  return out;
}

// Inclusive [s, e] maximizing start[s] * end[e]; ties prefer smaller s, then
// smaller e.
inline std::pair<std::size_t, std::size_t> extract_span(const SpanScores& scores, const AdInput& in) {
  const std::size_t len = in.sequence_a.size();
  if (len <= 1) throw std::invalid_argument("extract_span: empty candidate region");
  if (scores.start.size() != len || scores.end.size() != len) {
    throw std::invalid_argument("extract_span: score length does not match sequence_a");
  }
  std::pair<std::size_t, std::size_t> best{1, 1};
  double best_p = -1.0;
  for (std::size_t s = 1; s < len; ++s) {
    for (std::size_t e = s; e < len; ++e) {
      double p = scores.start[s] * scores.end[e];
      if (p > best_p) {
        best_p = p;
        best = {s, e};
      }
    }
  }
  return best;
}

inline std::string span_text(const AdInput& in, std::pair<std::size_t, std::size_t> span) {
  std::vector<std::string> words(in.sequence_a.begin() + static_cast<std::ptrdiff_t>(span.first),
                                 in.sequence_a.begin() + static_cast<std::ptrdiff_t>(span.second) + 1);
  return text::join(words);
}

// Turns span scores into a prediction via extract_span + match_candidate.
inline AdPrediction predict_from_scores(const AdInput& in, const SpanScores& scores, Source source) {
  auto span = extract_span(scores, in);
  AdPrediction p;
  p.id = in.id;
  p.span_text = span_text(in, span);
  auto [c, j] = match_candidate(p.span_text, in.candidates);
  p.expansion = in.candidates[c];
  p.jaccard = j;
  p.source = source;
  return p;
}

// Highest lexical score; ties go to the earliest candidate.
inline AdPrediction predict_lexical(const AdInput& in) {
  auto scores = lexical_score(in);
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  AdPrediction p;
  p.id = in.id;
  p.expansion = in.candidates[best];
  p.span_text = p.expansion;
  p.jaccard = 1.0;
  p.source = Source::Lexical;
  return p;
}

namespace detail {

inline bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace detail

// When the acronym is written as "( ACRO )" and one or more candidates occur
// verbatim (case-insensitively, as a token run) in the sentence, the longest
// such candidate replaces the prediction.
inline AdPrediction postprocess(const AdInstance& inst, const ExpansionDictionary& dict,
                                AdPrediction prediction) {
  const std::size_t i = inst.acronym_index;
  if (i == 0 || i + 1 >= inst.tokens.size()) return prediction;
  if (inst.tokens[i - 1] != "(" || inst.tokens[i + 1] != ")") return prediction;
  const auto* cands = dict.find(inst.acronym());
  if (!cands) return prediction;
  std::vector<std::string> sentence;
  sentence.reserve(inst.tokens.size());
  for (const auto& t : inst.tokens) sentence.push_back(text::lower(t));
  std::optional<std::size_t> best;
  std::size_t best_len = 0;
  for (std::size_t c = 0; c < cands->size(); ++c) {
    auto words = text::split_ws((*cands)[c]);
    if (words.size() > best_len && detail::contains_run(sentence, words)) {
      best = c;
      best_len = words.size();
    }
  }
  if (!best) return prediction;
  prediction.expansion = (*cands)[*best];
  prediction.span_text = prediction.expansion;
  prediction.jaccard = 1.0;
  prediction.source = Source::Postprocess;
  return prediction;
}

enum class ScorerKind { Lexical, External, Ensemble };

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Lexical;
  std::size_t n = kDefaultWindow;
  bool postprocess = false;
  // One map per score file. External uses the first; Ensemble averages all.
  std::vector<std::map<std::string, SpanScores>> external;
};

struct InstanceError {
  std::string id;
  std::string message;
};

struct AdRun {
  std::vector<AdPrediction> predictions;
  std::vector<InstanceError> errors;
};

inline AdPrediction predict_one(const AdInstance& inst, const ExpansionDictionary& dict,
                                const ScorerConfig& cfg) {
  AdInput in = build_input(inst, dict, cfg.n);
  AdPrediction p;
  switch (cfg.kind) {
    case ScorerKind::Lexical:
      p = predict_lexical(in);
      break;
    case ScorerKind::External:
    case ScorerKind::Ensemble: {
      if (cfg.external.empty()) throw std::invalid_argument("predict: no external scores configured");
      std::vector<SpanScores> parts;
      const std::size_t used = cfg.kind == ScorerKind::External ? 1 : cfg.external.size();
      for (std::size_t f = 0; f < used; ++f) {
        auto it = cfg.external[f].find(inst.id);
        if (it == cfg.external[f].end()) throw DataError("no scores for id " + inst.id);
        parts.push_back(it->second);
      }
      if (cfg.kind == ScorerKind::External) {
        p = predict_from_scores(in, parts.front(), Source::External);
      } else {
        p = predict_from_scores(in, average_scores(parts), Source::Ensemble);
      }
      break;
    }
  }
  if (cfg.postprocess) p = postprocess(inst, dict, std::move(p));
  return p;
}

// Per-instance failures are collected and the run continues.
inline AdRun predict(std::span<const AdInstance> instances, const ExpansionDictionary& dict,
                     const ScorerConfig& cfg) {
  AdRun run;
  for (const auto& inst : instances) {
    try {
      run.predictions.push_back(predict_one(inst, dict, cfg));
    } catch (const std::exception& e) {
      run.errors.push_back({inst.id, e.what()});
    }
  }
  return run;
}

inline nlohmann::json predictions_to_json(std::span<const AdPrediction> preds) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : preds) {
    arr.push_back({{"id", p.id},
                   {"expansion", p.expansion},
                   {"span", p.span_text},
                   {"jaccard", p.jaccard},
                   {"source", std::string(to_string(p.source))}});
  }
  return arr;
}

}  // namespace acro::ad
