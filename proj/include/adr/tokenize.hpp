#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adr/preprocess.hpp"

namespace adr {

inline constexpr int kBosId = 0;   // <s>
inline constexpr int kEosId = 1;   // </s>
inline constexpr int kPadId = 2;   // <pad>
inline constexpr int kUnkId = 3;   // <unk>
inline constexpr int kFirstByteId = 4;
inline constexpr std::size_t kBaseVocabSize = 260;  // specials + 256 bytes
inline constexpr std::size_t kDefaultMaxLen = 128;

struct MergeRule {
  int left;
  int right;
  int merged;
};

// Byte-level BPE vocabulary. Ids 0..3 are the specials, 4..259 single bytes,
// and the rest come from merges in priority order.
class Vocab {
 public:
  Vocab();

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<int> find(std::string_view token) const;
  const std::vector<MergeRule>& merges() const { return merges_; }
  // Priority of the (left, right) merge, or nullopt.
  std::optional<std::size_t> merge_rank(int left, int right) const;

  // Appends a merge rule; reuses an existing id when the concatenation is
  // already a token.
  int add_merge(int left, int right);

  // Writes vocab.tsv (token\tid) and merges.tsv (left\tright) into `dir`.
  void save(const std::string& dir) const;
  static Vocab load(const std::string& dir);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  std::vector<MergeRule> merges_;
  std::map<std::pair<int, int>, std::size_t> ranks_;
};

struct TokenizedTweet {
  std::vector<int> ids;         // <s> tokens... </s>
  std::vector<TextSpan> spans;  // one per non-special token, byte offsets

  std::size_t token_count() const { return spans.size(); }
};

// Greedy BPE training over whitespace-delimited words: repeatedly merges the
// most frequent adjacent pair (ties broken by the lexicographically smallest
// pair of token strings) until `target_size` tokens exist or no pair occurs
// more than once.
Vocab train_vocab(const std::vector<std::string>& corpus, std::size_t target_size);

// Splits on whitespace, applies merges by priority inside each word, wraps in
// <s> ... </s>. Sequences longer than `max_len` are truncated, keeping </s>.
TokenizedTweet encode(std::string_view text, const Vocab& vocab,
                      std::size_t max_len = kDefaultMaxLen);

std::string escape_token(std::string_view token);
std::string unescape_token(std::string_view escaped);

}  // namespace adr
