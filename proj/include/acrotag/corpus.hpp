#pragma once

// Dataset records, loaders and fold assignment.
//
// AI file:   [{"id": .., "tokens": [..], "labels": [..], "pos": [..]?}, ..]
// AD file:   [{"id": .., "tokens": [..], "acronym": <index>, "expansion": ..?}, ..]
//            ("sentence": "<space separated>" is accepted in place of "tokens")
// Dictionary: {"<acronym>": ["<long form>", ..], ..}

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "acrotag/error.hpp"
#include "acrotag/io.hpp"
#include "acrotag/tags.hpp"
#include "acrotag/text.hpp"

namespace acro {

struct AiInstance {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<std::vector<Tag>> tags;
  // Precomputed POS tags; when absent the built-in tagger is used.
  std::optional<std::vector<std::string>> pos;
};

struct AdInstance {
  std::string id;
  std::vector<std::string> tokens;
  std::size_t acronym_index = 0;
  std::optional<std::string> expansion;

  const std::string& acronym() const { return tokens.at(acronym_index); }
};

class ExpansionDictionary {
 public:
  using Entries = std::map<std::string, std::vector<std::string>>;

  ExpansionDictionary() = default;

  // Candidates are normalized and deduplicated keeping first occurrence.
  void add(const std::string& acronym, const std::vector<std::string>& candidates) {
    std::vector<std::string> list;
    std::set<std::string> seen;
    for (const auto& c : candidates) {
      std::string norm = text::normalize_phrase(c);
      if (norm.empty()) continue;
      if (seen.insert(norm).second) list.push_back(std::move(norm));
    }
    if (list.empty()) throw DataError("acronym '" + acronym + "' has an empty candidate list");
    entries_[acronym] = std::move(list);
  }

  const std::vector<std::string>* find(const std::string& acronym) const {
    auto it = entries_.find(acronym);
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool contains(const std::string& acronym) const { return entries_.count(acronym) != 0; }
  std::size_t size() const { return entries_.size(); }
  const Entries& entries() const { return entries_; }

 private:
  Entries entries_;
};

namespace detail {

inline std::string record_context(const std::filesystem::path& path, std::size_t index,
                                  const io::json& rec) {
  std::string id = "?";
  if (rec.is_object() && rec.contains("id")) {
    if (rec["id"].is_string()) id = rec["id"].get<std::string>();
    if (rec["id"].is_number_integer()) id = std::to_string(rec["id"].get<long long>());
  }
  return path.string() + ": record " + std::to_string(index) + " (id " + id + ")";
}

inline std::vector<std::string> string_array(const io::json& j, const char* field) {
  if (!j.is_array()) throw DataError(std::string("field '") + field + "' is not an array");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_string()) throw DataError(std::string("field '") + field + "' has a non-string");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline const io::json& records_array(const io::json& doc, const std::filesystem::path& path) {
  if (!doc.is_array()) throw DataError(path.string() + ": expected a JSON array of records");
  return doc;
}

inline std::string record_id(const io::json& rec, std::size_t index) {
  if (!rec.contains("id")) return std::to_string(index);
  const auto& id = rec["id"];
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<long long>());
  throw DataError("field 'id' must be a string or integer");
}

}  // namespace detail

inline AiInstance parse_ai_record(const io::json& rec, std::size_t index) {
  if (!rec.is_object()) throw DataError("record is not an object");
  AiInstance inst;
  inst.id = detail::record_id(rec, index);
  if (!rec.contains("tokens")) throw DataError("missing field 'tokens'");
  inst.tokens = detail::string_array(rec["tokens"], "tokens");
  if (inst.tokens.empty()) throw DataError("empty token list");
  if (rec.contains("labels") && !rec["labels"].is_null()) {
    auto labels = detail::string_array(rec["labels"], "labels");
    if (labels.size() != inst.tokens.size()) {
      throw DataError(std::to_string(inst.tokens.size()) + " tokens but " +
                      std::to_string(labels.size()) + " labels");
    }
    inst.tags = tags_from_strings(labels);
  }
  if (rec.contains("pos") && !rec["pos"].is_null()) {
    auto pos = detail::string_array(rec["pos"], "pos");
    if (pos.size() != inst.tokens.size()) throw DataError("pos/token length mismatch");
    inst.pos = std::move(pos);
  }
  return inst;
}

inline std::vector<AiInstance> load_ai_corpus(const std::filesystem::path& path) {
  io::json doc = io::read_json(path);
  const auto& recs = detail::records_array(doc, path);
  std::vector<AiInstance> out;
  out.reserve(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    try {
      out.push_back(parse_ai_record(recs[i], i));
    } catch (const std::exception& e) {
      throw DataError(detail::record_context(path, i, recs[i]) + ": " + e.what());
    }
  }
  return out;
}

inline io::json ai_to_json(const AiInstance& inst) {
  io::json j;
  j["id"] = inst.id;
  j["tokens"] = inst.tokens;
  if (inst.tags) j["labels"] = tags_to_strings(*inst.tags);
  if (inst.pos) j["pos"] = *inst.pos;
  return j;
}

inline io::json ai_corpus_to_json(const std::vector<AiInstance>& corpus) {
  io::json arr = io::json::array();
  for (const auto& inst : corpus) arr.push_back(ai_to_json(inst));
  return arr;
}

inline AdInstance parse_ad_record(const io::json& rec, std::size_t index) {
  if (!rec.is_object()) throw DataError("record is not an object");
  AdInstance inst;
  inst.id = detail::record_id(rec, index);
  if (rec.contains("tokens")) {
    inst.tokens = detail::string_array(rec["tokens"], "tokens");
  } else if (rec.contains("sentence") && rec["sentence"].is_string()) {
    inst.tokens = text::split_ws(rec["sentence"].get<std::string>());
  } else {
    throw DataError("missing field 'tokens'");
  }
  if (inst.tokens.empty()) throw DataError("empty token list");
  if (!rec.contains("acronym") || !rec["acronym"].is_number_integer()) {
    throw DataError("missing integer field 'acronym'");
  }
  long long idx = rec["acronym"].get<long long>();
  if (idx < 0 || static_cast<std::size_t>(idx) >= inst.tokens.size()) {
    throw DataError("acronym index " + std::to_string(idx) + " out of range for " +
                    std::to_string(inst.tokens.size()) + " tokens");
  }
  inst.acronym_index = static_cast<std::size_t>(idx);
  if (rec.contains("expansion") && !rec["expansion"].is_null()) {
    if (!rec["expansion"].is_string()) throw DataError("field 'expansion' is not a string");
    inst.expansion = text::normalize_phrase(rec["expansion"].get<std::string>());
  }
  return inst;
}

inline std::vector<AdInstance> load_ad_corpus(const std::filesystem::path& path) {
  io::json doc = io::read_json(path);
  const auto& recs = detail::records_array(doc, path);
  std::vector<AdInstance> out;
  out.reserve(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    try {
      out.push_back(parse_ad_record(recs[i], i));
    } catch (const std::exception& e) {
      throw DataError(detail::record_context(path, i, recs[i]) + ": " + e.what());
    }
  }
  return out;
}

inline ExpansionDictionary dictionary_from_json(const io::json& doc) {
  if (!doc.is_object()) throw DataError("dictionary must be a JSON object");
  ExpansionDictionary dict;
  for (const auto& [acronym, cands] : doc.items()) {
    try {
      dict.add(acronym, detail::string_array(cands, acronym.c_str()));
    } catch (const DataError& e) {
      throw DataError("entry '" + acronym + "': " + e.what());
    }
  }
  return dict;
}

inline ExpansionDictionary load_dictionary(const std::filesystem::path& path) {
  io::json doc = io::read_json(path);
  try {
    return dictionary_from_json(doc);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

struct AdIssue {
  std::size_t index;
  std::string id;
  std::string reason;
};

// Instances whose acronym is missing from the dictionary, or whose gold
// expansion is not one of its candidates.
inline std::vector<AdIssue> check_ad_corpus(const std::vector<AdInstance>& corpus,
                                            const ExpansionDictionary& dict) {
  std::vector<AdIssue> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& inst = corpus[i];
    const auto* cands = dict.find(inst.acronym());
    if (!cands) {
      out.push_back({i, inst.id, "acronym '" + inst.acronym() + "' not in dictionary"});
      continue;
    }
    if (inst.expansion &&
        std::find(cands->begin(), cands->end(), *inst.expansion) == cands->end()) {
      out.push_back({i, inst.id, "expansion '" + *inst.expansion + "' not a candidate of '" +
                                     inst.acronym() + "'"});
    }
  }
  return out;
}

struct FoldAssignment {
  std::size_t k = 0;
  std::unordered_map<std::string, std::size_t> fold_of;

  // Ids of fold `f`, in input order of `ids`.
  std::vector<std::string> members(const std::vector<std::string>& ids, std::size_t f) const {
    std::vector<std::string> out;
    for (const auto& id : ids) {
      if (fold_of.at(id) == f) out.push_back(id);
    }
    return out;
  }
};

namespace detail {

// Uniform integer in [0, bound) by rejection; independent of the standard
// library's distribution implementation, so folds are stable across toolchains.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_below(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

// Shuffles ids deterministically and deals them round-robin. With strata, ids
// are grouped by stratum (strata in key order), shuffled within the group and
// dealt with a running counter, so each stratum is spread as evenly as
// possible and fold sizes differ by at most one.
inline FoldAssignment split_folds(const std::vector<std::string>& ids, std::size_t k,
                                  const std::map<std::string, std::string>* strata,
                                  std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("split_folds: k must be at least 2");
  if (k > ids.size()) {
    throw std::invalid_argument("split_folds: k=" + std::to_string(k) + " exceeds " +
                                std::to_string(ids.size()) + " ids");
  }
  std::mt19937_64 rng(seed);
  FoldAssignment out;
  out.k = k;

  std::map<std::string, std::vector<std::string>> groups;
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw std::invalid_argument("split_folds: duplicate id " + id);
    std::string key;
    if (strata) {
      auto it = strata->find(id);
      if (it == strata->end()) throw std::invalid_argument("split_folds: no stratum for id " + id);
      key = it->second;
    }
    groups[key].push_back(id);
  }

  std::size_t counter = 0;
  for (auto& [key, members] : groups) {
    detail::shuffle(members, rng);
    for (const auto& id : members) out.fold_of[id] = counter++ % k;
  }
  return out;
}

inline FoldAssignment split_folds(const std::vector<std::string>& ids, std::size_t k,
                                  std::uint64_t seed) {
  return split_folds(ids, k, nullptr, seed);
}

}  // namespace acro
