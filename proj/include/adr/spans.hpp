#pragma once

#include <vector>

#include "adr/preprocess.hpp"
#include "adr/tokenize.hpp"

namespace adr {

enum class BioTag : int { kO = 0, kB = 1, kI = 2 };

const char* to_string(BioTag tag);

// Tags every token whose span overlaps a mention; the first such token of a
// mention is B-ADR, the rest I-ADR. A mention whose first overlapping token is
// already claimed by the previous mention continues that mention. Throws
// std::invalid_argument when mentions overlap.
std::vector<BioTag> spans_to_bio(const TokenizedTweet& tokens, std::vector<TextSpan> mentions);

// Decodes B I* runs into character spans. An I that does not continue a run
// opens a new one.
std::vector<TextSpan> bio_to_spans(const std::vector<BioTag>& tags, const TokenizedTweet& tokens);

}  // namespace adr
