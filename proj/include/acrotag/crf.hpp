#pragma once

// Linear-chain CRF over string labels and presence-valued string features.
//
// Potentials: for a label sequence y over positions 0..L-1
//
//   score(y) = begin[y0] + sum_t sum_{f active at t} emission[f, y_t]
//            + sum_{t>0} transition[y_{t-1}, y_t] + end[y_{L-1}]
//
// All weights live in one flat vector laid out as
// [emission (F x K) | transition (K x K) | begin (K) | end (K)], which is also
// the layout of gradients. Training is mini-batch SGD with L2 decay; the
// optional BIO mask only affects decoding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "acrotag/corpus.hpp"
#include "acrotag/error.hpp"
#include "acrotag/eval.hpp"
#include "acrotag/features.hpp"
#include "acrotag/io.hpp"
#include "acrotag/tags.hpp"

namespace acro::crf {

inline constexpr int kModelFormatVersion = 1;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TrainConfig {
  int epochs = 20;
  int patience = 10;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (patience < 0) throw std::invalid_argument("TrainConfig: patience must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(l2 >= 0.0)) throw std::invalid_argument("TrainConfig: l2 must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  }
};

struct LabeledSequence {
  std::vector<FeatureSet> features;
  std::vector<std::string> tags;
};

// Feature ids per position; unknown features are dropped.
using EncodedSequence = std::vector<std::vector<std::uint32_t>>;

class Model {
 public:
  Model() = default;

  Model(std::vector<std::string> labels, std::vector<std::string> feature_keys)
      : labels_(std::move(labels)), features_(std::move(feature_keys)) {
    if (labels_.empty()) throw std::invalid_argument("crf::Model: empty label set");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (!label_index_.emplace(labels_[i], i).second) {
        throw std::invalid_argument("crf::Model: duplicate label " + labels_[i]);
      }
    }
    for (std::size_t i = 0; i < features_.size(); ++i) {
      if (!feature_index_.emplace(features_[i], static_cast<std::uint32_t>(i)).second) {
        throw std::invalid_argument("crf::Model: duplicate feature " + features_[i]);
      }
    }
    weights_.assign(num_weights(), 0.0);
    rebuild_mask();
  }

  std::size_t num_labels() const { return labels_.size(); }
  std::size_t num_features() const { return features_.size(); }
  std::size_t num_weights() const {
    const std::size_t k = num_labels();
    return num_features() * k + k * k + 2 * k;
  }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& feature_keys() const { return features_; }

  std::optional<std::size_t> label_id(const std::string& label) const {
    auto it = label_index_.find(label);
    if (it == label_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::uint32_t> feature_id(const std::string& key) const {
    auto it = feature_index_.find(key);
    if (it == feature_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t emission_offset(std::size_t f, std::size_t y) const { return f * num_labels() + y; }
  std::size_t transition_offset(std::size_t from, std::size_t to) const {
    return num_features() * num_labels() + from * num_labels() + to;
  }
  std::size_t begin_offset(std::size_t y) const {
    return num_features() * num_labels() + num_labels() * num_labels() + y;
  }
  std::size_t end_offset(std::size_t y) const { return begin_offset(y) + num_labels(); }

  double emission(std::size_t f, std::size_t y) const { return weights_[emission_offset(f, y)]; }
  double transition(std::size_t a, std::size_t b) const { return weights_[transition_offset(a, b)]; }
  double begin(std::size_t y) const { return weights_[begin_offset(y)]; }
  double end(std::size_t y) const { return weights_[end_offset(y)]; }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }

  // Scheme of the label strings; used to rebuild BIO output after decoding.
  Scheme scheme() const { return scheme_; }
  void set_scheme(Scheme s) { scheme_ = s; }

  // When set, decoding never produces an I-x label after O, after another
  // class, or at sentence start.
  bool bio_constraint() const { return bio_constraint_; }
  void set_bio_constraint(bool on) { bio_constraint_ = on; }

  bool transition_allowed(std::size_t from, std::size_t to) const {
    return !bio_constraint_ || allowed_[from * num_labels() + to];
  }
  bool start_allowed(std::size_t y) const { return !bio_constraint_ || start_allowed_[y]; }

  EncodedSequence encode(std::span<const FeatureSet> features) const {
    EncodedSequence out(features.size());
    for (std::size_t t = 0; t < features.size(); ++t) {
      for (const auto& key : features[t]) {
        if (auto id = feature_id(key)) out[t].push_back(*id);
      }
    }
    return out;
  }

  std::vector<std::size_t> encode_labels(std::span<const std::string> tags) const {
    std::vector<std::size_t> out;
    out.reserve(tags.size());
    for (const auto& t : tags) {
      auto id = label_id(t);
      if (!id) throw std::invalid_argument("crf: unknown tag '" + t + "'");
      out.push_back(*id);
    }
    return out;
  }

  // Emission scores, row-major L x K.
  std::vector<double> emission_scores(const EncodedSequence& seq) const {
    const std::size_t k = num_labels();
    std::vector<double> out(seq.size() * k, 0.0);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      for (std::uint32_t f : seq[t]) {
        const double* w = &weights_[emission_offset(f, 0)];
        for (std::size_t y = 0; y < k; ++y) out[t * k + y] += w[y];
      }
    }
    return out;
  }

 private:
  void rebuild_mask() {
    const std::size_t k = num_labels();
    allowed_.assign(k * k, true);
    start_allowed_.assign(k, true);
    for (std::size_t b = 0; b < k; ++b) {
      auto next = parse_tag(labels_[b]);
      if (!next) continue;
      start_allowed_[b] = bio_transition_allowed(std::nullopt, *next);
      for (std::size_t a = 0; a < k; ++a) {
        auto prev = parse_tag(labels_[a]);
        if (prev) allowed_[a * k + b] = bio_transition_allowed(*prev, *next);
      }
    }
  }

  std::vector<std::string> labels_;
  std::vector<std::string> features_;
  std::unordered_map<std::string, std::size_t> label_index_;
  std::unordered_map<std::string, std::uint32_t> feature_index_;
  std::vector<double> weights_;
  Scheme scheme_ = Scheme::Bio;
  bool bio_constraint_ = false;
  std::vector<bool> allowed_;
  std::vector<bool> start_allowed_;
};

namespace detail {

inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Forward/backward tables in log space, row-major L x K.
struct Lattice {
  std::size_t length = 0;
  std::size_t k = 0;
  std::vector<double> emit;
  std::vector<double> alpha;
  std::vector<double> beta;
  double log_z = 0.0;
};

inline Lattice forward_backward(const Model& m, const EncodedSequence& seq, bool with_beta) {
  Lattice lat;
  lat.length = seq.size();
  lat.k = m.num_labels();
  const std::size_t L = lat.length, K = lat.k;
  lat.emit = m.emission_scores(seq);
  lat.alpha.assign(L * K, 0.0);
  std::vector<double> buf(K);
  for (std::size_t y = 0; y < K; ++y) lat.alpha[y] = m.begin(y) + lat.emit[y];
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t y = 0; y < K; ++y) {
      for (std::size_t i = 0; i < K; ++i) buf[i] = lat.alpha[(t - 1) * K + i] + m.transition(i, y);
      lat.alpha[t * K + y] = log_sum_exp(buf) + lat.emit[t * K + y];
    }
  }
  for (std::size_t y = 0; y < K; ++y) buf[y] = lat.alpha[(L - 1) * K + y] + m.end(y);
  lat.log_z = log_sum_exp(buf);
  if (with_beta) {
    lat.beta.assign(L * K, 0.0);
    for (std::size_t y = 0; y < K; ++y) lat.beta[(L - 1) * K + y] = m.end(y);
    for (std::size_t t = L - 1; t-- > 0;) {
      for (std::size_t y = 0; y < K; ++y) {
        for (std::size_t j = 0; j < K; ++j) {
          buf[j] = m.transition(y, j) + lat.emit[(t + 1) * K + j] + lat.beta[(t + 1) * K + j];
        }
        lat.beta[t * K + y] = log_sum_exp(buf);
      }
    }
  }
  return lat;
}

inline double score_encoded(const Model& m, const EncodedSequence& seq,
                            std::span<const std::size_t> y) {
  double s = m.begin(y.front()) + m.end(y.back());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (std::uint32_t f : seq[t]) s += m.emission(f, y[t]);
    if (t > 0) s += m.transition(y[t - 1], y[t]);
  }
  return s;
}

// Adds the data gradient of one sequence, (expected - empirical) counts,
// scaled by `scale`, into `grad`. Returns the sequence NLL.
inline double accumulate_gradient(const Model& m, const EncodedSequence& seq,
                                  std::span<const std::size_t> gold, double scale,
                                  std::span<double> grad,
                                  std::vector<std::size_t>* touched = nullptr) {
  Lattice lat = forward_backward(m, seq, true);
  const std::size_t L = lat.length, K = lat.k;
  auto add = [&](std::size_t idx, double v) {
    if (touched && grad[idx] == 0.0) touched->push_back(idx);
    grad[idx] += scale * v;
  };
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t y = 0; y < K; ++y) {
      double p = std::exp(lat.alpha[t * K + y] + lat.beta[t * K + y] - lat.log_z);
      double g = p - (gold[t] == y ? 1.0 : 0.0);
      for (std::uint32_t f : seq[t]) add(m.emission_offset(f, y), g);
      if (t == 0) add(m.begin_offset(y), g);
      if (t + 1 == L) add(m.end_offset(y), g);
    }
    if (t == 0) continue;
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        double p = std::exp(lat.alpha[(t - 1) * K + i] + m.transition(i, j) +
                            lat.emit[t * K + j] + lat.beta[t * K + j] - lat.log_z);
        double g = p - ((gold[t - 1] == i && gold[t] == j) ? 1.0 : 0.0);
        add(m.transition_offset(i, j), g);
      }
    }
  }
  return lat.log_z - score_encoded(m, seq, gold);
}

}  // namespace detail

inline double sequence_score(const Model& m, std::span<const FeatureSet> features,
                             std::span<const std::string> tags) {
  if (features.size() != tags.size()) throw std::invalid_argument("sequence_score: length mismatch");
  if (features.empty()) return 0.0;
  auto y = m.encode_labels(tags);
  return detail::score_encoded(m, m.encode(features), y);
}

inline double log_partition(const Model& m, std::span<const FeatureSet> features) {
  if (features.empty()) throw std::invalid_argument("log_partition: empty sequence");
  return detail::forward_backward(m, m.encode(features), false).log_z;
}

// Max-product decoding. Suffix maxima are computed right to left, then labels
// are chosen left to right taking the earliest label among exact ties, which
// yields the lexicographically smallest optimal sequence in label order.
inline std::vector<std::size_t> viterbi_encoded(const Model& m, const EncodedSequence& seq) {
  const std::size_t L = seq.size(), K = m.num_labels();
  if (L == 0) throw std::invalid_argument("viterbi_decode: empty sequence");
  std::vector<double> emit = m.emission_scores(seq);
  auto trans = [&](std::size_t a, std::size_t b) {
    return m.transition_allowed(a, b) ? m.transition(a, b) : kNegInf;
  };
  std::vector<double> best(L * K, kNegInf);
  for (std::size_t y = 0; y < K; ++y) best[(L - 1) * K + y] = m.end(y);
  for (std::size_t t = L - 1; t-- > 0;) {
    for (std::size_t y = 0; y < K; ++y) {
      double b = kNegInf;
      for (std::size_t j = 0; j < K; ++j) {
        b = std::max(b, trans(y, j) + emit[(t + 1) * K + j] + best[(t + 1) * K + j]);
      }
      best[t * K + y] = b;
    }
  }
  std::vector<std::size_t> path(L);
  double top = kNegInf;
  for (std::size_t y = 0; y < K; ++y) {
    if (!m.start_allowed(y)) continue;
    double v = m.begin(y) + emit[y] + best[y];
    if (v > top) {
      top = v;
      path[0] = y;
    }
  }
  for (std::size_t t = 1; t < L; ++t) {
    top = kNegInf;
    for (std::size_t y = 0; y < K; ++y) {
      double v = trans(path[t - 1], y) + emit[t * K + y] + best[t * K + y];
      if (v > top) {
        top = v;
        path[t] = y;
      }
    }
  }
  return path;
}

inline std::vector<std::string> viterbi_decode(const Model& m, std::span<const FeatureSet> features) {
  auto path = viterbi_encoded(m, m.encode(features));
  std::vector<std::string> out;
  out.reserve(path.size());
  for (auto y : path) out.push_back(m.labels()[y]);
  return out;
}

// Sum of per-sequence negative log-likelihoods plus (l2 / 2) * |w|^2.
inline double objective(const Model& m, std::span<const LabeledSequence> batch, double l2) {
  double total = 0.0;
  for (const auto& ex : batch) {
    if (ex.features.size() != ex.tags.size() || ex.features.empty()) {
      throw std::invalid_argument("crf: invalid batch entry");
    }
    auto y = m.encode_labels(ex.tags);
    auto seq = m.encode(ex.features);
    total += detail::forward_backward(m, seq, false).log_z - detail::score_encoded(m, seq, y);
  }
  double sq = 0.0;
  for (double w : m.weights()) sq += w * w;
  return total + 0.5 * l2 * sq;
}

// Gradient of `objective`: expected minus empirical feature counts summed over
// the batch, plus l2 * w. Same layout as Model::weights().
inline std::vector<double> nll_gradient(const Model& m, std::span<const LabeledSequence> batch,
                                        double l2) {
  std::vector<double> grad(m.num_weights(), 0.0);
  for (const auto& ex : batch) {
    if (ex.features.size() != ex.tags.size() || ex.features.empty()) {
      throw std::invalid_argument("crf: invalid batch entry");
    }
    auto y = m.encode_labels(ex.tags);
    detail::accumulate_gradient(m, m.encode(ex.features), y, 1.0, grad);
  }
  auto w = m.weights();
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += l2 * w[i];
  return grad;
}

// Label order used when a label set is derived from data: known tags in
// canonical order (O first), then any other labels sorted.
inline std::vector<std::string> derive_label_set(std::span<const LabeledSequence> data) {
  std::set<std::string> seen;
  for (const auto& ex : data) seen.insert(ex.tags.begin(), ex.tags.end());
  std::vector<std::string> out;
  for (Tag t : kAllTags) {
    std::string s(to_string(t));
    if (seen.erase(s)) out.push_back(s);
  }
  out.insert(out.end(), seen.begin(), seen.end());
  return out;
}

struct EpochStats {
  int epoch = 0;
  double train_objective = 0.0;
  std::optional<double> dev_f1;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
};

// Decodes to BIO tags according to the model's scheme.
inline std::vector<Tag> predict_tags(const Model& m, std::span<const FeatureSet> features) {
  auto labels = viterbi_decode(m, features);
  return to_bio(tags_from_strings(labels), m.scheme());
}

inline double dev_macro_f1(const Model& m, std::span<const LabeledSequence> dev) {
  std::vector<std::vector<Tag>> gold, pred;
  gold.reserve(dev.size());
  pred.reserve(dev.size());
  for (const auto& ex : dev) {
    gold.push_back(to_bio(tags_from_strings(ex.tags), m.scheme()));
    pred.push_back(predict_tags(m, ex.features));
  }
  return evaluate_ai(std::span<const std::vector<Tag>>(gold), std::span<const std::vector<Tag>>(pred)).f1;
}

// Mini-batch SGD from zero weights. Each step applies
//   w <- w - lr * (g_batch / |batch| + l2 * w)
// where g_batch is the summed data gradient of the batch. Examples are
// reshuffled every epoch from `config.seed`. With a dev set, the dev macro F1
// (on BIO-reconstructed tags) is computed after every epoch, training stops
// after `patience` epochs without improvement and the best model is returned.
inline Model train(std::span<const LabeledSequence> data, const TrainConfig& config,
                   std::span<const LabeledSequence> dev = {}, Scheme scheme = Scheme::Bio,
                   TrainLog* log = nullptr, std::vector<std::string> label_set = {}) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("crf::train: empty training data");
  if (label_set.empty()) label_set = derive_label_set(data);

  std::set<std::string> keys;
  for (const auto& ex : data) {
    if (ex.features.size() != ex.tags.size() || ex.features.empty()) {
      throw std::invalid_argument("crf::train: invalid training example");
    }
    for (const auto& fs : ex.features) keys.insert(fs.begin(), fs.end());
  }
  Model model(std::move(label_set), std::vector<std::string>(keys.begin(), keys.end()));
  model.set_scheme(scheme);
  model.set_bio_constraint(scheme == Scheme::Bio);

  std::vector<EncodedSequence> enc;
  std::vector<std::vector<std::size_t>> gold;
  enc.reserve(data.size());
  gold.reserve(data.size());
  for (const auto& ex : data) {
    enc.push_back(model.encode(ex.features));
    gold.push_back(model.encode_labels(ex.tags));
  }

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(config.seed);

  std::vector<double> grad(model.num_weights(), 0.0);
  std::vector<std::size_t> touched;
  Model best = model;
  double best_f1 = -1.0;
  int since_best = 0;
  const double decay = 1.0 - config.learning_rate * config.l2;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    ::acro::detail::shuffle(order, rng);
    double epoch_nll = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t stop = std::min(order.size(), start + config.batch_size);
      double scale = 1.0 / static_cast<double>(stop - start);
      touched.clear();
      for (std::size_t b = start; b < stop; ++b) {
        std::size_t i = order[b];
        epoch_nll += detail::accumulate_gradient(model, enc[i], gold[i], scale, grad, &touched);
      }
      auto w = model.weights();
      if (config.l2 > 0.0) {
        for (double& x : w) x *= decay;
      }
      for (std::size_t idx : touched) {
        w[idx] -= config.learning_rate * grad[idx];
        grad[idx] = 0.0;
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_objective = epoch_nll;
    if (!dev.empty()) {
      double f1 = dev_macro_f1(model, dev);
      stats.dev_f1 = f1;
      if (f1 > best_f1) {
        best_f1 = f1;
        best = model;
        since_best = 0;
        if (log) log->best_epoch = epoch;
      } else if (++since_best >= config.patience) {
        if (log) log->epochs.push_back(stats);
        break;
      }
    } else if (log) {
      log->best_epoch = epoch;
    }
    if (log) log->epochs.push_back(stats);
  }
  return dev.empty() ? model : best;
}

inline nlohmann::json model_to_json(const Model& m) {
  nlohmann::json j;
  j["format"] = "acrotag-crf";
  j["version"] = kModelFormatVersion;
  j["scheme"] = std::string(to_string(m.scheme()));
  j["bio_constraint"] = m.bio_constraint();
  j["labels"] = m.labels();
  j["features"] = m.feature_keys();
  std::vector<double> w(m.weights().begin(), m.weights().end());
  j["weights"] = std::move(w);
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "acrotag-crf") {
    throw DataError("not an acrotag CRF model");
  }
  if (j.value("version", 0) != kModelFormatVersion) {
    throw DataError("unsupported CRF model version " + j.value("version", nlohmann::json()).dump());
  }
  try {
    Model m(j.at("labels").get<std::vector<std::string>>(),
            j.at("features").get<std::vector<std::string>>());
    auto scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (!scheme) throw DataError("bad scheme");
    m.set_scheme(*scheme);
    m.set_bio_constraint(j.at("bio_constraint").get<bool>());
    auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != m.num_weights()) throw DataError("weight vector size mismatch");
    for (double x : w) {
      if (!std::isfinite(x)) throw DataError("non-finite weight");
    }
    std::copy(w.begin(), w.end(), m.weights().begin());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed CRF model: ") + e.what());
  }
}

inline void save_model(const Model& m, const std::filesystem::path& path) {
  io::write_json(path, model_to_json(m));
}

inline Model load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(io::read_json(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace acro::crf
