#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "acrotag/crf.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

namespace crf = acro::crf;
using acro::FeatureSet;

namespace {

std::vector<FeatureSet> single_feature_sequence(std::size_t L) {
  return std::vector<FeatureSet>(L, FeatureSet{"f0"});
}

crf::LabeledSequence pattern_example(const std::vector<std::string>& words,
                                     const std::vector<std::string>& tags) {
  crf::LabeledSequence ex;
  for (const auto& w : words) ex.features.push_back({"w=" + w});
  ex.tags = tags;
  return ex;
}

}  // namespace

TEST(SequenceScore, Examples) {
  crf::Model zero({"O", "B-short"}, {"f0", "f1"});
  auto x = single_feature_sequence(3);
  EXPECT_DOUBLE_EQ(crf::sequence_score(zero, x, std::vector<std::string>{"O", "B-short", "O"}), 0.0);

  crf::Model m({"O", "B-short"}, {"f0"});
  m.weights()[m.emission_offset(0, 1)] = 1.3;
  EXPECT_DOUBLE_EQ(crf::sequence_score(m, single_feature_sequence(1), std::vector<std::string>{"B-short"}), 1.3);
}

TEST(SequenceScore, MatchesHandSummedPotentials) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t L = testutil::uniform(rng, 1, 6), K = testutil::uniform(rng, 1, 4);
    auto p = oracle::random_problem(rng, L, K);
    auto tags = oracle::random_labels(rng, p.model, L);
    auto y = p.model.encode_labels(tags);
    ASSERT_NEAR(crf::sequence_score(p.model, p.features, tags), oracle::path_score(p.model, p.features, y), 1e-12);
  }
}

TEST(SequenceScore, UnknownTagAndLengthMismatch) {
  crf::Model m({"O"}, {"f0"});
  EXPECT_THROW(crf::sequence_score(m, single_feature_sequence(1), std::vector<std::string>{"B-long"}),
               std::invalid_argument);
  EXPECT_THROW(crf::sequence_score(m, single_feature_sequence(2), std::vector<std::string>{"O"}),
               std::invalid_argument);
}

TEST(LogPartition, AllZeroModel) {
  for (std::size_t K = 1; K <= 5; ++K) {
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < K; ++k) labels.push_back("y" + std::to_string(k));
    crf::Model m(labels, {"f0"});
    for (std::size_t L = 1; L <= 7; ++L) {
      EXPECT_NEAR(crf::log_partition(m, single_feature_sequence(L)),
                  static_cast<double>(L) * std::log(static_cast<double>(K)), 1e-12);
    }
  }
}

TEST(LogPartition, SingleTokenIsLogSumExp) {
  crf::Model m({"a", "b", "c"}, {"f0"});
  std::vector<double> w{0.5, -1.25, 2.0};
  for (std::size_t y = 0; y < 3; ++y) m.weights()[m.emission_offset(0, y)] = w[y];
  double expected = std::log(std::exp(0.5) + std::exp(-1.25) + std::exp(2.0));
  EXPECT_NEAR(crf::log_partition(m, single_feature_sequence(1)), expected, 1e-12);
}

TEST(LogPartition, MatchesEnumeration) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t L = testutil::uniform(rng, 1, 6), K = testutil::uniform(rng, 1, 4);
    auto p = oracle::random_problem(rng, L, K);
    ASSERT_NEAR(crf::log_partition(p.model, p.features), oracle::brute_log_partition(p.model, p.features), 1e-8);
  }
}

TEST(LogPartition, ProbabilitiesSumToOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t L = testutil::uniform(rng, 1, 6), K = testutil::uniform(rng, 2, 4);
    auto p = oracle::random_problem(rng, L, K);
    double logz = crf::log_partition(p.model, p.features);
    double total = 0.0;
    oracle::for_each_path(L, K, [&](const auto& y) {
      double s = oracle::path_score(p.model, p.features, y);
      ASSERT_LE(s, logz + 1e-12);
      total += std::exp(s - logz);
    });
    ASSERT_NEAR(total, 1.0, 1e-8);
  }
}

TEST(LogPartition, StableForLargeWeightsAndLongSequences) {
  std::mt19937_64 rng(4);
  auto p = oracle::random_problem(rng, 512, 5, 8, 50.0);
  double logz = crf::log_partition(p.model, p.features);
  EXPECT_TRUE(std::isfinite(logz));
  auto best = crf::viterbi_decode(p.model, p.features);
  EXPECT_LE(crf::sequence_score(p.model, p.features, best), logz);
}

TEST(LogPartition, EmptySequenceRejected) {
  crf::Model m({"O"}, {});
  EXPECT_THROW(crf::log_partition(m, std::vector<FeatureSet>{}), std::invalid_argument);
  EXPECT_THROW(crf::viterbi_decode(m, std::vector<FeatureSet>{}), std::invalid_argument);
}

TEST(Viterbi, AllZeroModelPicksFirstLabel) {
  crf::Model m({"O", "B-short", "B-long"}, {"f0"});
  EXPECT_EQ(crf::viterbi_decode(m, single_feature_sequence(4)), (std::vector<std::string>(4, "O")));
}

TEST(Viterbi, LargeOWeightGivesAllO) {
  crf::Model m({"B-short", "O", "B-long"}, {"f0"});
  m.weights()[m.emission_offset(0, 1)] = 10.0;
  EXPECT_EQ(crf::viterbi_decode(m, single_feature_sequence(5)), (std::vector<std::string>(5, "O")));
}

TEST(Viterbi, MatchesBruteForceArgmax) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t L = testutil::uniform(rng, 1, 6), K = testutil::uniform(rng, 1, 4);
    auto p = oracle::random_problem(rng, L, K);
    auto path = crf::viterbi_encoded(p.model, p.model.encode(p.features));
    ASSERT_EQ(path, oracle::brute_argmax(p.model, p.features));
  }
}

TEST(Viterbi, TiesResolveLexicographically) {
  // Integer weights in {-1, 0, 1} produce many exact ties.
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t L = testutil::uniform(rng, 1, 5), K = testutil::uniform(rng, 2, 3);
    auto p = oracle::random_problem(rng, L, K, 3);
    for (double& w : p.model.weights()) w = static_cast<double>(testutil::uniform(rng, 0, 2)) - 1.0;
    auto path = crf::viterbi_encoded(p.model, p.model.encode(p.features));
    ASSERT_EQ(path, oracle::brute_argmax(p.model, p.features));
  }
}

TEST(Viterbi, BeatsRandomSequences) {
  std::mt19937_64 rng(7);
  auto p = oracle::random_problem(rng, 12, 5);
  auto best = crf::viterbi_decode(p.model, p.features);
  double top = crf::sequence_score(p.model, p.features, best);
  for (int i = 0; i < 1000; ++i) {
    auto y = oracle::random_labels(rng, p.model, 12);
    ASSERT_GE(top, crf::sequence_score(p.model, p.features, y));
  }
}

TEST(Viterbi, BioConstraintForbidsDanglingInside) {
  crf::Model m({"O", "B-short", "I-short", "B-long", "I-long"}, {"f0"});
  m.weights()[m.emission_offset(0, 2)] = 5.0;  // I-short everywhere is attractive
  auto x = single_feature_sequence(3);
  EXPECT_EQ(crf::viterbi_decode(m, x), (std::vector<std::string>(3, "I-short")));
  m.set_bio_constraint(true);
  auto constrained = crf::viterbi_decode(m, x);
  EXPECT_EQ(constrained, (std::vector<std::string>{"B-short", "I-short", "I-short"}));
  EXPECT_TRUE(acro::validate_bio(acro::tags_from_strings(constrained)).empty());
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t K = testutil::uniform(rng, 2, 4);
    auto p = oracle::random_problem(rng, 4, K, 5, 1.0);
    std::vector<crf::LabeledSequence> batch;
    for (int b = 0; b < 3; ++b) {
      std::size_t L = testutil::uniform(rng, 1, 5);
      auto q = oracle::random_problem(rng, L, K, 5);
      batch.push_back({q.features, oracle::random_labels(rng, p.model, L)});
    }
    const double l2 = 0.01;
    auto grad = crf::nll_gradient(p.model, batch, l2);
    for (int c = 0; c < 20; ++c) {
      std::size_t i = testutil::uniform(rng, 0, p.model.num_weights() - 1);
      double fd = oracle::finite_difference(p.model, batch, l2, i, 1e-5);
      double rel = std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd) + std::abs(grad[i]));
      ASSERT_LE(rel, 1e-4) << "coordinate " << i << ": analytic " << grad[i] << " numeric " << fd;
    }
  }
}

TEST(Gradient, ZeroModelTransitionsAreUniform) {
  for (std::size_t K : {2u, 3u, 5u}) {
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < K; ++k) labels.push_back("y" + std::to_string(k));
    crf::Model m(labels, {"f0"});
    crf::LabeledSequence ex{single_feature_sequence(2), {labels[1], labels[0]}};
    auto grad = crf::nll_gradient(m, std::span(&ex, 1), 0.0);
    const double uniform = 1.0 / static_cast<double>(K * K);
    for (std::size_t a = 0; a < K; ++a) {
      for (std::size_t b = 0; b < K; ++b) {
        double empirical = (a == 1 && b == 0) ? 1.0 : 0.0;
        EXPECT_NEAR(grad[m.transition_offset(a, b)], uniform - empirical, 1e-12);
      }
    }
  }
}

TEST(Gradient, DuplicatedBatchDoublesDataTerm) {
  std::mt19937_64 rng(9);
  auto p = oracle::random_problem(rng, 4, 3);
  crf::LabeledSequence ex{p.features, oracle::random_labels(rng, p.model, 4)};
  std::vector<crf::LabeledSequence> once{ex}, twice{ex, ex};
  auto g1 = crf::nll_gradient(p.model, once, 0.0);
  auto g2 = crf::nll_gradient(p.model, twice, 0.0);
  for (std::size_t i = 0; i < g1.size(); ++i) ASSERT_NEAR(g2[i], 2.0 * g1[i], 1e-12);
}

TEST(Train, RejectsBadConfig) {
  std::vector<crf::LabeledSequence> data{pattern_example({"a"}, {"O"})};
  crf::TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(crf::train(data, cfg), std::invalid_argument);
  cfg = {};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(crf::train(data, cfg), std::invalid_argument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(crf::train(data, cfg), std::invalid_argument);
  cfg = {};
  cfg.patience = -1;
  EXPECT_THROW(crf::train(data, cfg), std::invalid_argument);
  EXPECT_THROW(crf::train(std::vector<crf::LabeledSequence>{}, crf::TrainConfig{}), std::invalid_argument);
}

TEST(Train, ObjectiveDecreasesOnRepeatedExample) {
  auto ex = pattern_example({"Hidden", "Markov", "Models", "(", "HMM", ")"},
                            {"B-long", "I-long", "I-long", "O", "B-short", "O"});
  std::vector<crf::LabeledSequence> data(8, ex);
  crf::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.01;
  cfg.l2 = 0.0;

  // Replays the updates one step at a time and checks the objective after each.
  auto labels = crf::derive_label_set(data);
  std::set<std::string> keys;
  for (const auto& fs : ex.features) keys.insert(fs.begin(), fs.end());
  crf::Model m(labels, {keys.begin(), keys.end()});
  double prev = crf::objective(m, std::span(&ex, 1), 0.0);
  for (int step = 0; step < 8; ++step) {
    auto g = crf::nll_gradient(m, std::span(&ex, 1), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) m.weights()[i] -= cfg.learning_rate * g[i];
    double now = crf::objective(m, std::span(&ex, 1), 0.0);
    ASSERT_LE(now, prev + 1e-12) << "step " << step;
    prev = now;
  }

  // train() performs the same steps.
  auto trained = crf::train(data, cfg);
  EXPECT_NEAR(crf::objective(trained, std::span(&ex, 1), 0.0), prev, 1e-9);
}

TEST(Train, LearnsSimplePatternAndIsDeterministic) {
  std::vector<crf::LabeledSequence> data{
      pattern_example({"a", "big", "Thing", "(", "ABT", ")"}, {"O", "B-long", "I-long", "O", "B-short", "O"}),
      pattern_example({"the", "Other", "Way", "(", "OW", ")"}, {"O", "B-long", "I-long", "O", "B-short", "O"}),
      pattern_example({"no", "acronym", "here"}, {"O", "O", "O"}),
  };
  crf::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 2;
  cfg.seed = 42;
  auto a = crf::train(data, cfg);
  auto b = crf::train(data, cfg);
  ASSERT_EQ(a.weights().size(), b.weights().size());
  for (std::size_t i = 0; i < a.weights().size(); ++i) ASSERT_EQ(a.weights()[i], b.weights()[i]);
  for (const auto& ex : data) EXPECT_EQ(crf::viterbi_decode(a, ex.features), ex.tags);
  EXPECT_EQ(a.labels().front(), "O");
}

TEST(Train, EarlyStoppingKeepsBestModel) {
  std::vector<crf::LabeledSequence> data{
      pattern_example({"x", "(", "AB", ")"}, {"B-long", "O", "B-short", "O"}),
  };
  crf::TrainConfig cfg;
  cfg.epochs = 50;
  cfg.patience = 2;
  crf::TrainLog log;
  auto m = crf::train(data, cfg, data, acro::Scheme::Bio, &log);
  ASSERT_FALSE(log.epochs.empty());
  EXPECT_LT(log.epochs.size(), 50u);
  EXPECT_EQ(log.best_epoch, 1);
  EXPECT_EQ(static_cast<int>(log.epochs.size()), log.best_epoch + cfg.patience);
  EXPECT_DOUBLE_EQ(crf::dev_macro_f1(m, data), 1.0);
}

TEST(Train, BiolessModelReconstructsBio) {
  std::vector<crf::LabeledSequence> data{
      pattern_example({"Big", "Thing", "(", "BT", ")"}, {"B-long", "B-long", "O", "B-short", "O"}),
  };
  crf::TrainConfig cfg;
  cfg.epochs = 20;
  auto m = crf::train(data, cfg, {}, acro::Scheme::Bioless);
  EXPECT_EQ(m.scheme(), acro::Scheme::Bioless);
  EXPECT_FALSE(m.bio_constraint());
  using acro::Tag;
  EXPECT_EQ(crf::predict_tags(m, data[0].features),
            (std::vector<Tag>{Tag::BLong, Tag::ILong, Tag::O, Tag::BShort, Tag::O}));
}

TEST(Serialization, RoundTrip) {
  testutil::TempDir dir;
  std::mt19937_64 rng(10);
  auto p = oracle::random_problem(rng, 5, 3);
  p.model.set_scheme(acro::Scheme::Bioless);
  p.model.set_bio_constraint(true);
  auto path = dir.file("m.json");
  crf::save_model(p.model, path);
  auto back = crf::load_model(path);
  EXPECT_EQ(back.labels(), p.model.labels());
  EXPECT_EQ(back.feature_keys(), p.model.feature_keys());
  EXPECT_EQ(back.scheme(), acro::Scheme::Bioless);
  EXPECT_TRUE(back.bio_constraint());
  for (std::size_t i = 0; i < back.weights().size(); ++i) ASSERT_EQ(back.weights()[i], p.model.weights()[i]);
}

TEST(Serialization, RejectsForeignOrCorruptFiles) {
  testutil::TempDir dir;
  EXPECT_THROW(crf::load_model(dir.write("a.json", nlohmann::json{{"format", "other"}})), acro::DataError);
  auto j = crf::model_to_json(crf::Model({"O"}, {"f"}));
  j["version"] = 99;
  EXPECT_THROW(crf::load_model(dir.write("b.json", j)), acro::DataError);
  j = crf::model_to_json(crf::Model({"O"}, {"f"}));
  j["weights"] = {1.0};
  EXPECT_THROW(crf::load_model(dir.write("c.json", j)), acro::DataError);
}

TEST(Encode, UnknownFeaturesAreIgnored) {
  crf::Model m({"O", "B-short"}, {"known"});
  m.weights()[m.emission_offset(0, 1)] = 2.0;
  std::vector<FeatureSet> x{{"known", "unseen"}};
  EXPECT_DOUBLE_EQ(crf::sequence_score(m, x, std::vector<std::string>{"B-short"}), 2.0);
}
