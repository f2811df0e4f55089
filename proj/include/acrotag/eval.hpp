#pragma once

// Span-level scoring for identification and per-expansion scoring for
// disambiguation, plus a k-fold cross-validation driver.
//
// Identification: a predicted mention is correct iff class, start and end all
// match a gold mention. Per-class precision and recall are averaged over the
// classes that occur in gold or prediction; the macro F1 is the harmonic mean
// of those averaged precision and recall values.
//
// Disambiguation: precision/recall/F1 per expansion string over the labels
// seen in gold or prediction; macro F1 is the unweighted mean of per-label F1.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "acrotag/corpus.hpp"
#include "acrotag/tags.hpp"

namespace acro {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_pos = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

inline double harmonic(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline Prf make_prf(std::size_t tp, std::size_t predicted, std::size_t gold) {
  Prf s;
  s.true_pos = tp;
  s.predicted = predicted;
  s.gold = gold;
  s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  s.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

struct AiMetrics {
  Prf short_form;
  Prf long_form;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline AiMetrics evaluate_ai(std::span<const std::vector<Tag>> gold,
                             std::span<const std::vector<Tag>> pred) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("evaluate_ai: " + std::to_string(gold.size()) + " gold vs " +
                                std::to_string(pred.size()) + " predicted sentences");
  }
  std::size_t tp[2] = {0, 0}, np[2] = {0, 0}, ng[2] = {0, 0};
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw std::invalid_argument("evaluate_ai: length mismatch in sentence " + std::to_string(s));
    }
    auto gm = extract_mentions(gold[s]);
    auto pm = extract_mentions(pred[s]);
    std::set<Mention> gs(gm.begin(), gm.end());
    for (const auto& m : gm) ++ng[static_cast<int>(m.cls)];
    for (const auto& m : pm) {
      ++np[static_cast<int>(m.cls)];
      if (gs.count(m)) ++tp[static_cast<int>(m.cls)];
    }
  }
  AiMetrics out;
  out.short_form = make_prf(tp[0], np[0], ng[0]);
  out.long_form = make_prf(tp[1], np[1], ng[1]);
  double p = 0.0, r = 0.0;
  int present = 0;
  for (const Prf* c : {&out.short_form, &out.long_form}) {
    if (c->predicted == 0 && c->gold == 0) continue;
    p += c->precision;
    r += c->recall;
    ++present;
  }
  if (present == 0) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  out.precision = p / present;
  out.recall = r / present;
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

// Id-keyed variant; both maps must cover the same ids.
inline AiMetrics evaluate_ai(const std::map<std::string, std::vector<Tag>>& gold,
                             const std::map<std::string, std::vector<Tag>>& pred) {
  std::vector<std::vector<Tag>> g, p;
  for (const auto& [id, tags] : gold) {
    auto it = pred.find(id);
    if (it == pred.end()) throw DataError("no prediction for id " + id);
    if (it->second.size() != tags.size()) {
      throw DataError("id " + id + ": " + std::to_string(tags.size()) + " gold tags vs " +
                      std::to_string(it->second.size()) + " predicted");
    }
    g.push_back(tags);
    p.push_back(it->second);
  }
  for (const auto& [id, tags] : pred) {
    if (!gold.count(id)) throw DataError("prediction for unknown id " + id);
  }
  return evaluate_ai(std::span<const std::vector<Tag>>(g), std::span<const std::vector<Tag>>(p));
}

struct AdMetrics {
  std::map<std::string, Prf> per_expansion;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline AdMetrics evaluate_ad(const std::map<std::string, std::string>& gold,
                             const std::map<std::string, std::string>& pred) {
  std::map<std::string, std::size_t> tp, np, ng;
  for (const auto& [id, g] : gold) {
    auto it = pred.find(id);
    if (it == pred.end()) throw DataError("no prediction for id " + id);
    ++ng[g];
    ++np[it->second];
    if (it->second == g) ++tp[g];
    tp.try_emplace(it->second, 0);
  }
  AdMetrics out;
  std::set<std::string> labels;
  for (const auto& [l, _] : ng) labels.insert(l);
  for (const auto& [l, _] : np) labels.insert(l);
  for (const auto& l : labels) out.per_expansion[l] = make_prf(tp[l], np[l], ng[l]);
  if (labels.empty()) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  for (const auto& [_, s] : out.per_expansion) {
    out.precision += s.precision;
    out.recall += s.recall;
    out.f1 += s.f1;
  }
  double n = static_cast<double>(labels.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  return out;
}

struct CvReport {
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
};

// Generic k-fold driver. `id_of(instance)` names each instance; `strata`, when
// given, maps ids to stratum keys. `fit_and_score(train, held_out)` trains on
// the k-1 training folds and returns the held-out macro F1. Folds run in
// order, so reports are reproducible for a fixed seed.
template <class Instance, class IdOf, class FitAndScore>
CvReport cross_validate(const std::vector<Instance>& data, std::size_t k, std::uint64_t seed,
                        IdOf id_of, FitAndScore fit_and_score,
                        const std::map<std::string, std::string>* strata = nullptr) {
  std::vector<std::string> ids;
  ids.reserve(data.size());
  for (const auto& inst : data) ids.push_back(id_of(inst));
  FoldAssignment folds = split_folds(ids, k, strata, seed);
  CvReport report;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Instance> train, held_out;
    for (std::size_t i = 0; i < data.size(); ++i) {
      (folds.fold_of.at(ids[i]) == f ? held_out : train).push_back(data[i]);
    }
    report.fold_f1.push_back(fit_and_score(train, held_out));
  }
  double sum = 0.0;
  for (double v : report.fold_f1) sum += v;
  report.mean_f1 = sum / static_cast<double>(k);
  return report;
}

}  // namespace acro
