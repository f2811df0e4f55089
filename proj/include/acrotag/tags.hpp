#pragma once

// Acronym tag set, BIO <-> BIOless conversion and mention extraction.
//
// BIO uses the five tags B-short, I-short, B-long, I-long and O. The BIOless
// scheme drops the inside tags: every token of a short form is B-short and
// every token of a long form is B-long. Reconstruction turns the first tag of
// each run into B-* and the rest into I-*, so two adjacent mentions of the
// same class merge into one; `bioless_collapse_count` reports how often that
// happens on a corpus.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acrotag/error.hpp"

namespace acro {

enum class Tag { O, BShort, IShort, BLong, ILong };

enum class Scheme { Bio, Bioless };

enum class MentionClass { Short, Long };

// Canonical order; also the label order used for CRF models over tags.
inline constexpr std::array<Tag, 5> kAllTags = {Tag::O, Tag::BShort, Tag::IShort, Tag::BLong,
                                                Tag::ILong};

inline std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::O: return "O";
    case Tag::BShort: return "B-short";
    case Tag::IShort: return "I-short";
    case Tag::BLong: return "B-long";
    case Tag::ILong: return "I-long";
  }
  return "O";
}

inline std::string_view to_string(Scheme s) { return s == Scheme::Bio ? "bio" : "bioless"; }

inline std::string_view to_string(MentionClass c) {
  return c == MentionClass::Short ? "short" : "long";
}

inline std::optional<Tag> parse_tag(std::string_view s) {
  for (Tag t : kAllTags) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

inline Tag tag_from_string(std::string_view s) {
  auto t = parse_tag(s);
  if (!t) throw DataError("unknown tag '" + std::string(s) + "'");
  return *t;
}

inline std::optional<Scheme> parse_scheme(std::string_view s) {
  if (s == "bio") return Scheme::Bio;
  if (s == "bioless") return Scheme::Bioless;
  return std::nullopt;
}

inline std::vector<Tag> tags_from_strings(std::span<const std::string> labels) {
  std::vector<Tag> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(tag_from_string(l));
  return out;
}

inline std::vector<std::string> tags_to_strings(std::span<const Tag> tags) {
  std::vector<std::string> out;
  out.reserve(tags.size());
  for (Tag t : tags) out.emplace_back(to_string(t));
  return out;
}

inline bool is_begin(Tag t) { return t == Tag::BShort || t == Tag::BLong; }
inline bool is_inside(Tag t) { return t == Tag::IShort || t == Tag::ILong; }

// Class of a non-O tag.
inline MentionClass mention_class(Tag t) {
  return (t == Tag::BShort || t == Tag::IShort) ? MentionClass::Short : MentionClass::Long;
}

inline Tag begin_tag(MentionClass c) { return c == MentionClass::Short ? Tag::BShort : Tag::BLong; }
inline Tag inside_tag(MentionClass c) { return c == MentionClass::Short ? Tag::IShort : Tag::ILong; }

inline bool in_scheme(Tag t, Scheme s) { return s == Scheme::Bio || !is_inside(t); }

// True when `next` may follow `prev` in a valid BIO sequence. `prev` empty
// means sequence start.
inline bool bio_transition_allowed(std::optional<Tag> prev, Tag next) {
  if (!is_inside(next)) return true;
  if (!prev || *prev == Tag::O) return false;
  return mention_class(*prev) == mention_class(next);
}

struct Mention {
  MentionClass cls;
  std::size_t start;  // inclusive
  std::size_t end;    // exclusive

  friend bool operator==(const Mention&, const Mention&) = default;
  friend auto operator<=>(const Mention&, const Mention&) = default;
};

struct BioViolation {
  std::size_t index;
  std::string reason;
};

// Every I-tag that does not continue a mention of the same class.
inline std::vector<BioViolation> validate_bio(std::span<const Tag> tags) {
  std::vector<BioViolation> out;
  std::optional<Tag> prev;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    Tag t = tags[i];
    if (!bio_transition_allowed(prev, t)) {
      std::string why = std::string(to_string(t));
      if (!prev || *prev == Tag::O) {
        why += " without a preceding B/I tag";
      } else {
        why += " after " + std::string(to_string(*prev)) + " (class switch)";
      }
      out.push_back({i, std::move(why)});
    }
    prev = t;
  }
  return out;
}

inline std::vector<Tag> to_bioless(std::span<const Tag> tags) {
  std::vector<Tag> out;
  out.reserve(tags.size());
  for (Tag t : tags) {
    out.push_back(t == Tag::O ? Tag::O : begin_tag(mention_class(t)));
  }
  return out;
}

inline std::vector<Tag> from_bioless(std::span<const Tag> tags) {
  std::vector<Tag> out;
  out.reserve(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    Tag t = tags[i];
    if (is_inside(t)) {
      throw std::invalid_argument("from_bioless: " + std::string(to_string(t)) + " at index " +
                                  std::to_string(i) + " is not a BIOless tag");
    }
    if (t != Tag::O && i > 0 && tags[i - 1] == t) {
      out.push_back(inside_tag(mention_class(t)));
    } else {
      out.push_back(t);
    }
  }
  return out;
}

// Tags of the given scheme back to BIO. BIO input is returned as-is.
inline std::vector<Tag> to_bio(std::span<const Tag> tags, Scheme scheme) {
  if (scheme == Scheme::Bio) return {tags.begin(), tags.end()};
  return from_bioless(tags);
}

// True when the sequence holds two mentions of the same class that touch,
// i.e. information that the BIOless transform loses.
inline bool has_adjacent_same_class(std::span<const Tag> tags) {
  for (std::size_t i = 1; i < tags.size(); ++i) {
    if (is_begin(tags[i]) && tags[i - 1] != Tag::O &&
        mention_class(tags[i - 1]) == mention_class(tags[i])) {
      return true;
    }
  }
  return false;
}

struct MentionExtraction {
  std::vector<Mention> mentions;
  // Indices of I-tags that had to open a new mention.
  std::vector<std::size_t> repairs;
};

// Lenient extraction: an I-tag that cannot continue the current mention opens
// a new one and is recorded as a repair.
inline MentionExtraction extract_mentions_lenient(std::span<const Tag> tags) {
  MentionExtraction out;
  std::optional<Mention> open;
  auto close = [&](std::size_t end) {
    if (open) {
      open->end = end;
      out.mentions.push_back(*open);
      open.reset();
    }
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    Tag t = tags[i];
    if (t == Tag::O) {
      close(i);
    } else if (is_begin(t)) {
      close(i);
      open = Mention{mention_class(t), i, i + 1};
    } else if (!open || open->cls != mention_class(t)) {
      close(i);
      open = Mention{mention_class(t), i, i + 1};
      out.repairs.push_back(i);
    }
  }
  close(tags.size());
  return out;
}

inline std::vector<Mention> extract_mentions(std::span<const Tag> tags) {
  return extract_mentions_lenient(tags).mentions;
}

struct BiolessStats {
  std::size_t sentences = 0;
  // Sentences whose BIOless form cannot be reconstructed exactly.
  std::size_t collapsed = 0;
};

inline BiolessStats bioless_collapse_count(std::span<const std::vector<Tag>> corpus) {
  BiolessStats s;
  for (const auto& tags : corpus) {
    ++s.sentences;
    if (has_adjacent_same_class(tags)) ++s.collapsed;
  }
  return s;
}

}  // namespace acro
