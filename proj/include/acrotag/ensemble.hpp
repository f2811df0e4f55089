#pragma once

// Token-level hard voting and CRF blending over base taggers.
//
// Voting: for each token the label with the highest score
// W(y, x) = sum_i [base i predicts y at x] wins. Ties go to the label
// predicted by the earliest base in the caller's priority order.
//
// Blending: base taggers' predictions on a held-out split become the
// features of a meta CRF. k meta CRFs are trained on k-fold splits of that
// data (each early-stopped on its own validation fold); at prediction time all
// k decode and their outputs are combined by hard voting.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "acrotag/corpus.hpp"
#include "acrotag/crf.hpp"
#include "acrotag/features.hpp"
#include "acrotag/tags.hpp"

namespace acro::ensemble {

template <class Label>
struct VoteTally {
  // (label, count) in order of first appearance in priority order.
  std::vector<std::pair<Label, std::size_t>> counts;

  std::size_t count(const Label& y) const {
    for (const auto& [l, c] : counts) {
      if (l == y) return c;
    }
    return 0;
  }
};

// Base indices in priority order: bases named in `priority` first, in that
// order, then the rest in input order.
inline std::vector<std::size_t> priority_order(std::span<const std::string> names,
                                               std::span<const std::string> priority) {
  std::vector<std::size_t> order;
  std::vector<bool> used(names.size(), false);
  for (const auto& p : priority) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!used[i] && names[i] == p) {
        order.push_back(i);
        used[i] = true;
      }
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!used[i]) order.push_back(i);
  }
  return order;
}

template <class Label>
VoteTally<Label> tally(std::span<const std::vector<Label>> predictions,
                       std::span<const std::size_t> order, std::size_t position) {
  VoteTally<Label> t;
  for (std::size_t i : order) {
    const Label& y = predictions[i][position];
    auto it = std::find_if(t.counts.begin(), t.counts.end(),
                           [&](const auto& e) { return e.first == y; });
    if (it == t.counts.end()) {
      t.counts.emplace_back(y, 1);
    } else {
      ++it->second;
    }
  }
  return t;
}

// `order` lists base indices from highest to lowest priority.
template <class Label>
std::vector<Label> hard_vote(std::span<const std::vector<Label>> predictions,
                             std::span<const std::size_t> order) {
  if (predictions.empty()) throw std::invalid_argument("hard_vote: no predictions");
  const std::size_t len = predictions.front().size();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != len) {
      throw std::invalid_argument("hard_vote: prediction " + std::to_string(i) + " has length " +
                                  std::to_string(predictions[i].size()) + ", expected " +
                                  std::to_string(len));
    }
  }
  if (order.size() != predictions.size()) throw std::invalid_argument("hard_vote: bad priority order");
  std::vector<Label> out;
  out.reserve(len);
  for (std::size_t x = 0; x < len; ++x) {
    auto t = tally(predictions, order, x);
    // Tally entries are in first-appearance-by-priority order, so the first
    // maximum is the tie winner.
    std::size_t best = 0;
    for (std::size_t j = 1; j < t.counts.size(); ++j) {
      if (t.counts[j].second > t.counts[best].second) best = j;
    }
    out.push_back(t.counts[best].first);
  }
  return out;
}

template <class Label>
std::vector<Label> hard_vote(std::span<const std::vector<Label>> predictions,
                             std::span<const std::string> names, std::span<const std::string> priority) {
  if (names.size() != predictions.size()) throw std::invalid_argument("hard_vote: names/predictions mismatch");
  auto order = priority_order(names, priority);
  return hard_vote(predictions, std::span<const std::size_t>(order));
}

// Input order is the priority order.
template <class Label>
std::vector<Label> hard_vote(std::span<const std::vector<Label>> predictions) {
  std::vector<std::size_t> order(predictions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  return hard_vote(predictions, std::span<const std::size_t>(order));
}

struct BlendOptions {
  // Add the word features of the CRF tagger to the base-prediction features.
  bool word_features = false;
};

// One sentence as seen by the blender. `base_tags[i]` is the prediction of the
// i-th base in the blend's base order.
struct BlendSentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::vector<std::string>> base_tags;
  std::optional<std::vector<std::string>> gold;
};

inline std::vector<FeatureSet> blend_features(std::span<const std::string> base_order,
                                              std::span<const std::vector<std::string>> base_tags,
                                              std::span<const std::string> tokens = {},
                                              const BlendOptions& opts = {}) {
  if (base_order.size() != base_tags.size()) {
    throw std::invalid_argument("blend_features: " + std::to_string(base_tags.size()) +
                                " predictions for " + std::to_string(base_order.size()) + " bases");
  }
  if (base_tags.empty()) return {};
  const std::size_t len = base_tags.front().size();
  for (const auto& tags : base_tags) {
    if (tags.size() != len) throw std::invalid_argument("blend_features: misaligned base predictions");
  }
  std::vector<FeatureSet> out(len);
  for (std::size_t x = 0; x < len; ++x) {
    for (std::size_t b = 0; b < base_order.size(); ++b) {
      out[x].push_back("base:" + base_order[b] + "=" + base_tags[b][x]);
    }
  }
  if (opts.word_features) {
    if (tokens.size() != len) throw std::invalid_argument("blend_features: token count mismatch");
    auto words = featurize_sentence(tokens);
    for (std::size_t x = 0; x < len; ++x) out[x].insert(out[x].end(), words[x].begin(), words[x].end());
  }
  for (auto& fs : out) {
    std::sort(fs.begin(), fs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
  }
  return out;
}

struct BlendModel {
  std::vector<std::string> base_order;
  std::vector<crf::Model> meta_models;
  BlendOptions options;
};

inline crf::LabeledSequence blend_example(const BlendModel& shape, const BlendSentence& s) {
  if (!s.gold) throw std::invalid_argument("blend_train: sentence " + s.id + " has no gold tags");
  crf::LabeledSequence ex;
  ex.features = blend_features(shape.base_order, s.base_tags, s.tokens, shape.options);
  ex.tags = *s.gold;
  if (ex.features.size() != ex.tags.size()) {
    throw std::invalid_argument("blend_train: gold/prediction length mismatch in " + s.id);
  }
  return ex;
}

inline BlendModel blend_train(std::vector<std::string> base_order,
                              const std::vector<BlendSentence>& held_out, std::size_t k,
                              const crf::TrainConfig& config, const BlendOptions& opts = {}) {
  if (k < 2) throw std::invalid_argument("blend_train: k must be at least 2");
  if (held_out.size() < k) {
    throw std::invalid_argument("blend_train: " + std::to_string(held_out.size()) +
                                " sentences are not enough for " + std::to_string(k) + " folds");
  }
  BlendModel model;
  model.base_order = std::move(base_order);
  model.options = opts;

  std::vector<std::string> ids;
  std::vector<crf::LabeledSequence> examples;
  for (const auto& s : held_out) {
    ids.push_back(s.id);
    examples.push_back(blend_example(model, s));
  }
  // Every meta model decodes over the full tag set, in canonical order.
  std::vector<std::string> labels;
  for (Tag t : kAllTags) labels.emplace_back(to_string(t));
  for (const auto& l : crf::derive_label_set(examples)) {
    if (!parse_tag(l)) labels.push_back(l);
  }

  FoldAssignment folds = split_folds(ids, k, config.seed);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<crf::LabeledSequence> train, valid;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      (folds.fold_of.at(ids[i]) == f ? valid : train).push_back(examples[i]);
    }
    model.meta_models.push_back(crf::train(train, config, valid, Scheme::Bio, nullptr, labels));
  }
  return model;
}

inline std::vector<std::string> blend_predict(const BlendModel& model,
                                              std::span<const std::string> base_order,
                                              std::span<const std::vector<std::string>> base_tags,
                                              std::span<const std::string> tokens = {}) {
  if (!std::equal(base_order.begin(), base_order.end(), model.base_order.begin(),
                  model.base_order.end())) {
    throw std::invalid_argument("blend_predict: base taggers do not match the blend's base order");
  }
  if (model.meta_models.empty()) throw std::invalid_argument("blend_predict: empty blend model");
  auto feats = blend_features(model.base_order, base_tags, tokens, model.options);
  if (feats.empty()) return {};
  std::vector<std::vector<std::string>> outputs;
  outputs.reserve(model.meta_models.size());
  for (const auto& m : model.meta_models) outputs.push_back(crf::viterbi_decode(m, feats));
  return hard_vote(std::span<const std::vector<std::string>>(outputs));
}

inline nlohmann::json blend_to_json(const BlendModel& m) {
  nlohmann::json j;
  j["format"] = "acrotag-blend";
  j["version"] = 1;
  j["base_order"] = m.base_order;
  j["word_features"] = m.options.word_features;
  j["meta_models"] = nlohmann::json::array();
  for (const auto& mm : m.meta_models) j["meta_models"].push_back(crf::model_to_json(mm));
  return j;
}

inline BlendModel blend_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "acrotag-blend" || j.value("version", 0) != 1) {
    throw DataError("not an acrotag blend model (version 1)");
  }
  BlendModel m;
  try {
    m.base_order = j.at("base_order").get<std::vector<std::string>>();
    m.options.word_features = j.at("word_features").get<bool>();
    for (const auto& mm : j.at("meta_models")) m.meta_models.push_back(crf::model_from_json(mm));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed blend model: ") + e.what());
  }
  if (m.meta_models.size() < 2) throw DataError("blend model needs at least two meta models");
  return m;
}

}  // namespace acro::ensemble
