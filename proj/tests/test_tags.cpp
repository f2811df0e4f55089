#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "acrotag/tags.hpp"

using acro::Mention;
using acro::MentionClass;
using acro::Tag;

namespace {

constexpr Tag O = Tag::O, BS = Tag::BShort, IS = Tag::IShort, BL = Tag::BLong, IL = Tag::ILong;

// Every sequence over the 5-tag alphabet of the given length.
void for_each_sequence(std::size_t len, const std::function<void(const std::vector<Tag>&)>& fn) {
  std::vector<Tag> seq(len, O);
  std::vector<std::size_t> digits(len, 0);
  while (true) {
    for (std::size_t i = 0; i < len; ++i) seq[i] = acro::kAllTags[digits[i]];
    fn(seq);
    std::size_t i = 0;
    while (i < len && ++digits[i] == 5) digits[i++] = 0;
    if (i == len) break;
  }
}

// Reference mention reader: a mention starts at every B and every I that does
// not continue the previous token's class.
std::set<Mention> reference_mentions(const std::vector<Tag>& tags) {
  std::set<Mention> out;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] == O) {
      ++i;
      continue;
    }
    auto cls = acro::mention_class(tags[i]);
    std::size_t j = i + 1;
    while (j < tags.size() && acro::is_inside(tags[j]) && acro::mention_class(tags[j]) == cls) ++j;
    out.insert({cls, i, j});
    i = j;
  }
  return out;
}

}  // namespace

TEST(TagStrings, RoundTripAndRejectUnknown) {
  for (Tag t : acro::kAllTags) EXPECT_EQ(acro::tag_from_string(acro::to_string(t)), t);
  EXPECT_EQ(acro::to_string(BS), "B-short");
  EXPECT_EQ(acro::to_string(IL), "I-long");
  EXPECT_FALSE(acro::parse_tag("B-SHORT"));
  EXPECT_THROW(acro::tag_from_string("B-acronym"), acro::DataError);
}

TEST(ValidateBio, Examples) {
  EXPECT_TRUE(acro::validate_bio(std::vector{BS, IS, O}).empty());

  auto v = acro::validate_bio(std::vector{O, IL});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].index, 1u);

  v = acro::validate_bio(std::vector{BS, IL});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].index, 1u);
  EXPECT_NE(v[0].reason.find("class switch"), std::string::npos);
}

TEST(ValidateBio, LeadingInsideIsViolation) {
  auto v = acro::validate_bio(std::vector{IS, IS});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].index, 0u);
}

TEST(ToBioless, Examples) {
  EXPECT_EQ(acro::to_bioless(std::vector{BL, IL, IL, O, BS, O}), (std::vector{BL, BL, BL, O, BS, O}));
  EXPECT_EQ(acro::to_bioless(std::vector{O, O, O}), (std::vector{O, O, O}));
  EXPECT_EQ(acro::to_bioless(std::vector{BS, IS}), (std::vector{BS, BS}));
}

TEST(FromBioless, Examples) {
  EXPECT_EQ(acro::from_bioless(std::vector{BL, BL, BL, O}), (std::vector{BL, IL, IL, O}));
  EXPECT_EQ(acro::from_bioless(std::vector{BS, O, BS}), (std::vector{BS, O, BS}));
  EXPECT_EQ(acro::from_bioless(std::vector{BS, BL}), (std::vector{BS, BL}));
}

TEST(FromBioless, RejectsInsideTags) {
  EXPECT_THROW(acro::from_bioless(std::vector{BS, IS}), std::invalid_argument);
}

TEST(ExtractMentions, Examples) {
  EXPECT_EQ(acro::extract_mentions(std::vector{BL, IL, O, BS}),
            (std::vector<Mention>{{MentionClass::Long, 0, 2}, {MentionClass::Short, 3, 4}}));
  EXPECT_TRUE(acro::extract_mentions(std::vector{O, O}).empty());

  auto lenient = acro::extract_mentions_lenient(std::vector{IL, O});
  EXPECT_EQ(lenient.mentions, (std::vector<Mention>{{MentionClass::Long, 0, 1}}));
  EXPECT_EQ(lenient.repairs, (std::vector<std::size_t>{0}));
}

TEST(ExtractMentions, ClassSwitchInsideOpensNewMention) {
  auto r = acro::extract_mentions_lenient(std::vector{BS, IL, IL});
  EXPECT_EQ(r.mentions, (std::vector<Mention>{{MentionClass::Short, 0, 1}, {MentionClass::Long, 1, 3}}));
  EXPECT_EQ(r.repairs, (std::vector<std::size_t>{1}));
}

TEST(ExtractMentions, MatchesReferenceOnAllShortSequences) {
  for (std::size_t len = 0; len <= 6; ++len) {
    for_each_sequence(len, [](const std::vector<Tag>& t) {
      auto got = acro::extract_mentions(t);
      std::set<Mention> as_set(got.begin(), got.end());
      ASSERT_EQ(as_set, reference_mentions(t));
      for (std::size_t i = 1; i < got.size(); ++i) ASSERT_LE(got[i - 1].end, got[i].start);
    });
  }
}

TEST(RoundTrip, ExhaustiveUpToLengthSix) {
  // Length 8 is covered by the acceptance binary.
  std::size_t checked = 0;
  for (std::size_t len = 0; len <= 6; ++len) {
    for_each_sequence(len, [&](const std::vector<Tag>& t) {
      if (!acro::validate_bio(t).empty() || acro::has_adjacent_same_class(t)) return;
      auto bl = acro::to_bioless(t);
      ASSERT_EQ(bl.size(), t.size());
      for (std::size_t i = 0; i < t.size(); ++i) ASSERT_EQ(bl[i] == O, t[i] == O);
      ASSERT_EQ(acro::from_bioless(bl), t);
      ASSERT_EQ(acro::extract_mentions(acro::from_bioless(bl)), acro::extract_mentions(t));
      ++checked;
    });
  }
  EXPECT_GT(checked, 1000u);
}

TEST(RoundTrip, AdjacentSameClassCollapses) {
  std::vector t{BS, BS, O};
  EXPECT_TRUE(acro::has_adjacent_same_class(t));
  EXPECT_EQ(acro::from_bioless(acro::to_bioless(t)), (std::vector{BS, IS, O}));

  std::vector<std::vector<Tag>> corpus{t, {BL, IL, O}, {BL, IL, BL}};
  auto stats = acro::bioless_collapse_count(corpus);
  EXPECT_EQ(stats.sentences, 3u);
  EXPECT_EQ(stats.collapsed, 2u);
}

TEST(RoundTrip, DifferentClassesStayApart) {
  std::vector t{BS, BL, IL};
  EXPECT_FALSE(acro::has_adjacent_same_class(t));
  EXPECT_EQ(acro::from_bioless(acro::to_bioless(t)), t);
}

TEST(ToBio, DispatchesOnScheme) {
  std::vector t{BS, BS};
  EXPECT_EQ(acro::to_bio(t, acro::Scheme::Bio), t);
  EXPECT_EQ(acro::to_bio(t, acro::Scheme::Bioless), (std::vector{BS, IS}));
}
