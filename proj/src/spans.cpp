#include "adr/spans.hpp"

#include <algorithm>
#include <stdexcept>

namespace adr {

const char* to_string(BioTag tag) {
  switch (tag) {
    case BioTag::kB: return "B-ADR";
    case BioTag::kI: return "I-ADR";
    default: return "O";
  }
}

std::vector<BioTag> spans_to_bio(const TokenizedTweet& tokens, std::vector<TextSpan> mentions) {
  std::sort(mentions.begin(), mentions.end());
  for (std::size_t i = 1; i < mentions.size(); ++i)
    if (mentions[i].begin < mentions[i - 1].end)
      throw std::invalid_argument("overlapping mentions cannot be BIO-encoded");

  const auto& spans = tokens.spans;
  std::vector<BioTag> tags(spans.size(), BioTag::kO);
  std::size_t first_free = 0;  // tokens before this index belong to earlier mentions
  for (const auto& m : mentions) {
    bool started = false;
    for (std::size_t t = 0; t < spans.size(); ++t) {
      if (spans[t].begin >= m.end || spans[t].end <= m.begin) continue;
      if (t < first_free) {
        started = true;  // shares a token with the previous mention
        continue;
      }
      tags[t] = started ? BioTag::kI : BioTag::kB;
      started = true;
      first_free = t + 1;
    }
  }
  return tags;
}

std::vector<TextSpan> bio_to_spans(const std::vector<BioTag>& tags, const TokenizedTweet& tokens) {
  if (tags.size() != tokens.spans.size())
    throw std::invalid_argument("tag count differs from token count");
  std::vector<TextSpan> out;
  bool open = false;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    switch (tags[t]) {
      case BioTag::kO:
        open = false;
        break;
      case BioTag::kB:
        out.push_back(tokens.spans[t]);
        open = true;
        break;
      case BioTag::kI:
        if (open) {
          out.back().end = tokens.spans[t].end;
        } else {
          out.push_back(tokens.spans[t]);
          open = true;
        }
        break;
    }
  }
  return out;
}

}  // namespace adr
