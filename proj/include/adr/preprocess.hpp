#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adr/corpus.hpp"

namespace adr {

// Provenance of one normalized character: the half-open range of original
// code points it came from. Surviving characters cover exactly one original
// character; synthetic characters (inserted by an expansion such as
// ":)" -> "happy") cover the whole source token.
struct SourceRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool synthetic = false;

  friend bool operator==(const SourceRange&, const SourceRange&) = default;
};

// Half-open character span on normalized text.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const TextSpan&, const TextSpan&) = default;
  friend auto operator<=>(const TextSpan&, const TextSpan&) = default;
};

struct NormalizedTweet {
  std::string id;
  std::string text;                     // ASCII
  std::vector<SourceRange> offset_map;  // one entry per character of `text`
  std::u32string original;              // original text as code points
};

struct ResourceTables {
  std::map<std::string, std::string> contractions;   // lowercase key
  std::map<std::string, std::string> interjections;  // lowercase key
  std::map<std::u32string, std::string> smileys;     // case-sensitive key
  std::map<std::u32string, std::string> emoji;       // code point sequence

  // Loads contractions.tsv, interjections.tsv, smileys.tsv and emoji.tsv
  // (`key\treplacement`, UTF-8) from `dir`.
  static ResourceTables load(const std::string& dir);
};

std::string default_resource_dir();

// Lowercases, strips URLs, @user mentions, `rt`, non-ASCII and punctuation,
// expands contractions and interjections, spells out smileys and emoji,
// caps character runs at two and collapses whitespace.
NormalizedTweet normalize(const RawTweet& tweet, const ResourceTables& tables);

// Smallest normalized span covering every normalized character whose source
// overlaps the mention, or nullopt when nothing of the mention survived.
// Throws std::out_of_range when the span is not within the original text.
std::optional<TextSpan> project_span_to_normalized(const MentionSpan& span,
                                                   const NormalizedTweet& tweet);

// Maps a normalized span back onto the original text; the surface is re-read
// from the original. Throws std::out_of_range on empty or out-of-bounds spans.
MentionSpan project_span_to_original(const TextSpan& span, const NormalizedTweet& tweet);

// Caps runs of identical characters at two.
std::string squeeze_runs(const std::string& s);

}  // namespace adr
