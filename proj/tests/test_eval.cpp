#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "acrotag/eval.hpp"
#include "testutil.hpp"

using acro::Tag;
using Tags = std::vector<Tag>;

namespace {

constexpr Tag O = Tag::O, BS = Tag::BShort, IS = Tag::IShort, BL = Tag::BLong, IL = Tag::ILong;

acro::AiMetrics eval(const std::vector<Tags>& gold, const std::vector<Tags>& pred) {
  return acro::evaluate_ai(std::span<const Tags>(gold), std::span<const Tags>(pred));
}

Tags random_bio(std::mt19937_64& rng, std::size_t len) {
  Tags t(len, O);
  for (std::size_t i = 0; i < len; ++i) {
    std::size_t r = testutil::uniform(rng, 0, 5);
    if (r == 1) t[i] = BS;
    if (r == 2) t[i] = BL;
    if (r == 3 && i > 0 && t[i - 1] != O) t[i] = acro::inside_tag(acro::mention_class(t[i - 1]));
  }
  return t;
}

}  // namespace

TEST(EvaluateAi, PerfectPrediction) {
  std::vector<Tags> gold{{BL, IL, O, BS}, {O, O}};
  auto m = eval(gold, gold);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
}

TEST(EvaluateAi, AllOPrediction) {
  std::vector<Tags> gold{{BL, IL, O, BS}};
  std::vector<Tags> pred{{O, O, O, O}};
  auto m = eval(gold, pred);
  EXPECT_DOUBLE_EQ(m.recall, 0.0);
  EXPECT_DOUBLE_EQ(m.f1, 0.0);
}

TEST(EvaluateAi, OneCorrectOneSpurious) {
  std::vector<Tags> gold{{BS, O, BS, O, O}};
  std::vector<Tags> pred{{BS, O, O, O, BS}};
  auto m = eval(gold, pred);
  EXPECT_DOUBLE_EQ(m.short_form.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.short_form.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.short_form.f1, 0.5);
  EXPECT_EQ(m.long_form.gold, 0u);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);  // long-form class absent from both sides
}

TEST(EvaluateAi, BoundaryMismatchIsMiss) {
  std::vector<Tags> gold{{BL, IL, IL, O}};
  std::vector<Tags> pred{{O, BL, IL, O}};
  auto m = eval(gold, pred);
  EXPECT_EQ(m.long_form.true_pos, 0u);
  EXPECT_DOUBLE_EQ(m.f1, 0.0);
}

TEST(EvaluateAi, MacroIsHarmonicOfAveragedPrecisionAndRecall) {
  // short: P=1, R=1/2; long: P=1/2, R=1.
  std::vector<Tags> gold{{BS, O, BS, O, BL, O, O}};
  std::vector<Tags> pred{{BS, O, O, O, BL, O, BL}};
  auto m = eval(gold, pred);
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.75);
  EXPECT_DOUBLE_EQ(m.f1, 0.75);
  EXPECT_NEAR(m.short_form.f1, 2.0 / 3.0, 1e-15);
}

TEST(EvaluateAi, LengthAndIdMismatch) {
  EXPECT_THROW(eval({{O, O}}, {{O}}), std::invalid_argument);
  EXPECT_THROW(eval({{O}}, {}), std::invalid_argument);
  std::map<std::string, Tags> gold{{"a", {O}}}, pred{{"b", {O}}};
  EXPECT_THROW(acro::evaluate_ai(gold, pred), acro::DataError);
  std::map<std::string, Tags> longer{{"a", {O, O}}};
  EXPECT_THROW(acro::evaluate_ai(gold, longer), acro::DataError);
}

TEST(EvaluateAi, LenientOnDanglingInside) {
  std::vector<Tags> gold{{BL, O}};
  std::vector<Tags> pred{{IL, O}};
  EXPECT_DOUBLE_EQ(eval(gold, pred).f1, 1.0);
}

TEST(EvaluateAi, OrderInvariantAndMonotone) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = testutil::uniform(rng, 1, 6);
    std::vector<Tags> gold, pred;
    for (std::size_t s = 0; s < n; ++s) {
      std::size_t len = testutil::uniform(rng, 1, 8);
      gold.push_back(random_bio(rng, len));
      pred.push_back(rng() % 3 == 0 ? gold.back() : random_bio(rng, len));
    }
    auto base = eval(gold, pred);
    for (double v : {base.precision, base.recall, base.f1, base.short_form.f1, base.long_form.f1}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Tags> g2, p2;
    for (auto i : perm) {
      g2.push_back(gold[i]);
      p2.push_back(pred[i]);
    }
    auto shuffled = eval(g2, p2);
    ASSERT_DOUBLE_EQ(shuffled.f1, base.f1);

    // A spurious short mention in a fresh sentence never raises short precision.
    auto g3 = gold, p3 = pred;
    g3.push_back({O, O});
    p3.push_back({BS, O});
    ASSERT_LE(eval(g3, p3).short_form.precision, base.short_form.precision + 1e-15);

    // Dropping a correct prediction never raises recall.
    for (std::size_t s = 0; s < n; ++s) {
      auto mentions = acro::extract_mentions(pred[s]);
      auto gm = acro::extract_mentions(gold[s]);
      for (const auto& m : mentions) {
        if (std::find(gm.begin(), gm.end(), m) == gm.end()) continue;
        auto p4 = pred;
        for (std::size_t t = m.start; t < m.end; ++t) p4[s][t] = O;
        auto after = eval(gold, p4);
        auto& cls_after = m.cls == acro::MentionClass::Short ? after.short_form : after.long_form;
        auto& cls_before = m.cls == acro::MentionClass::Short ? base.short_form : base.long_form;
        ASSERT_LE(cls_after.recall, cls_before.recall);
        break;
      }
    }
  }
}

TEST(EvaluateAd, Examples) {
  std::map<std::string, std::string> gold{{"1", "feature map"}, {"2", "fuzzy measure"}};
  EXPECT_DOUBLE_EQ(acro::evaluate_ad(gold, gold).f1, 1.0);

  std::map<std::string, std::string> missing{{"1", "feature map"}};
  EXPECT_THROW(acro::evaluate_ad(gold, missing), acro::DataError);
}

TEST(EvaluateAd, FourInstanceFixture) {
  // "a" is always right; "b" is always predicted as "a".
  std::map<std::string, std::string> gold{{"1", "a"}, {"2", "a"}, {"3", "b"}, {"4", "b"}};
  std::map<std::string, std::string> pred{{"1", "a"}, {"2", "a"}, {"3", "a"}, {"4", "a"}};
  auto m = acro::evaluate_ad(gold, pred);
  // a: tp 2, predicted 4, gold 2 -> P 1/2, R 1, F1 2/3. b: all zero.
  EXPECT_DOUBLE_EQ(m.per_expansion.at("a").precision, 0.5);
  EXPECT_DOUBLE_EQ(m.per_expansion.at("a").recall, 1.0);
  EXPECT_NEAR(m.per_expansion.at("a").f1, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.per_expansion.at("b").f1, 0.0);
  EXPECT_NEAR(m.f1, 1.0 / 3.0, 1e-15);
}

TEST(EvaluateAd, PredictedOnlyLabelCounts) {
  std::map<std::string, std::string> gold{{"1", "a"}}, pred{{"1", "c"}};
  auto m = acro::evaluate_ad(gold, pred);
  EXPECT_EQ(m.per_expansion.size(), 2u);
  EXPECT_DOUBLE_EQ(m.f1, 0.0);
}

TEST(CrossValidate, StructureDeterminismAndMemorizer) {
  std::vector<std::string> data;
  for (int i = 0; i < 23; ++i) data.push_back("x" + std::to_string(i));
  auto id_of = [](const std::string& s) { return s; };
  auto scorer = [](const std::vector<std::string>& train, const std::vector<std::string>& test) {
    return static_cast<double>(test.size()) / static_cast<double>(train.size() + test.size());
  };
  auto r = acro::cross_validate(data, 5, 3, id_of, scorer);
  ASSERT_EQ(r.fold_f1.size(), 5u);
  auto again = acro::cross_validate(data, 5, 3, id_of, scorer);
  EXPECT_EQ(r.fold_f1, again.fold_f1);
  EXPECT_NEAR(r.mean_f1, 0.2, 1e-12);

  // Duplicated data with a memorizing trainer: every held-out item was seen.
  std::vector<std::pair<std::string, std::string>> dup;
  for (int i = 0; i < 10; ++i) {
    dup.push_back({"a" + std::to_string(i), "v" + std::to_string(i)});
    dup.push_back({"b" + std::to_string(i), "v" + std::to_string(i)});
  }
  std::map<std::string, std::string> strata;
  for (const auto& [id, v] : dup) strata[id] = v;
  auto memorize = [](const auto& train, const auto& test) {
    std::set<std::string> seen;
    for (const auto& [id, v] : train) seen.insert(v);
    double hit = 0;
    for (const auto& [id, v] : test) hit += seen.count(v) ? 1.0 : 0.0;
    return hit / static_cast<double>(test.size());
  };
  auto mem = acro::cross_validate(dup, 2, 1, [](const auto& p) { return p.first; }, memorize, &strata);
  EXPECT_DOUBLE_EQ(mem.mean_f1, 1.0);
}
