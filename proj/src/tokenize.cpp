#include "adr/tokenize.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "adr/errors.hpp"
#include "adr/text.hpp"

namespace adr {
namespace {

const char* const kSpecials[] = {"<s>", "</s>", "<pad>", "<unk>"};

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::pair<std::size_t, std::size_t>> split_words(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_ws(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_ws(text[j])) ++j;
    words.emplace_back(i, j);
    i = j;
  }
  return words;
}

int byte_id(char c) { return kFirstByteId + static_cast<unsigned char>(c); }

void merge_pair(std::vector<int>& symbols, int left, int right, int merged) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < symbols.size(); ++r) {
    if (r + 1 < symbols.size() && symbols[r] == left && symbols[r + 1] == right) {
      symbols[w++] = merged;
      ++r;
    } else {
      symbols[w++] = symbols[r];
    }
  }
  symbols.resize(w);
}

}  // namespace

Vocab::Vocab() {
  for (const char* s : kSpecials) tokens_.emplace_back(s);
  for (int b = 0; b < 256; ++b) {
    tokens_.emplace_back(1, static_cast<char>(b));
    ids_.emplace(tokens_.back(), static_cast<int>(tokens_.size() - 1));
  }
}

std::optional<int> Vocab::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Vocab::merge_rank(int left, int right) const {
  const auto it = ranks_.find({left, right});
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

int Vocab::add_merge(int left, int right) {
  if (left < kFirstByteId || right < kFirstByteId || left >= static_cast<int>(size()) ||
      right >= static_cast<int>(size()))
    throw std::invalid_argument("merge references an unknown or reserved symbol");
  const std::string joined = token(left) + token(right);
  int merged;
  if (auto existing = find(joined)) {
    merged = *existing;
  } else {
    tokens_.push_back(joined);
    merged = static_cast<int>(tokens_.size() - 1);
    ids_.emplace(joined, merged);
  }
  if (ranks_.emplace(std::make_pair(left, right), merges_.size()).second)
    merges_.push_back({left, right, merged});
  return merged;
}

std::string escape_token(std::string_view token) {
  std::string out;
  for (char c : token) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '\\') {
      out += "\\\\";
    } else if (u > 0x20 && u < 0x7F) {
      out.push_back(c);
    } else {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\x%02x", u);
      out += buf;
    }
  }
  return out;
}

std::string unescape_token(std::string_view escaped) {
  std::string out;
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] != '\\') {
      out.push_back(escaped[i]);
      continue;
    }
    if (i + 1 < escaped.size() && escaped[i + 1] == '\\') {
      out.push_back('\\');
      ++i;
    } else if (i + 3 < escaped.size() && escaped[i + 1] == 'x') {
      out.push_back(static_cast<char>(std::stoi(std::string(escaped.substr(i + 2, 2)), nullptr, 16)));
      i += 3;
    } else {
      throw DataError("bad token escape in '" + std::string(escaped) + "'");
    }
  }
  return out;
}

void Vocab::save(const std::string& dir) const {
  std::string vocab;
  for (std::size_t id = 0; id < tokens_.size(); ++id)
    vocab += (id < kFirstByteId ? tokens_[id] : escape_token(tokens_[id])) + "\t" +
             std::to_string(id) + "\n";
  std::string merges;
  for (const auto& m : merges_)
    merges += escape_token(token(m.left)) + "\t" + escape_token(token(m.right)) + "\n";
  text::write_file(dir + "/vocab.tsv", vocab);
  text::write_file(dir + "/merges.tsv", merges);
}

Vocab Vocab::load(const std::string& dir) {
  Vocab v;
  for (const auto& line : text::read_lines(dir + "/merges.tsv")) {
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 2) throw DataError(dir + "/merges.tsv: expected left\\tright");
    const auto left = v.find(unescape_token(f[0]));
    const auto right = v.find(unescape_token(f[1]));
    if (!left || !right) throw DataError(dir + "/merges.tsv: merge references unknown token");
    v.add_merge(*left, *right);
  }
  const auto lines = text::read_lines(dir + "/vocab.tsv");
  std::size_t n = 0;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 2 || f[1] != std::to_string(n))
      throw DataError(dir + "/vocab.tsv: line " + std::to_string(n + 1) + " out of order");
    const std::string tok = n < kFirstByteId ? f[0] : unescape_token(f[0]);
    if (n >= v.size() || v.token(static_cast<int>(n)) != tok)
      throw DataError(dir + "/vocab.tsv: token " + std::to_string(n) +
                      " disagrees with merges.tsv");
    ++n;
  }
  if (n != v.size()) throw DataError(dir + "/vocab.tsv: size disagrees with merges.tsv");
  return v;
}

Vocab train_vocab(const std::vector<std::string>& corpus, std::size_t target_size) {
  if (target_size < kBaseVocabSize)
    throw std::invalid_argument("target vocabulary size must be at least 260");
  std::map<std::string, std::size_t> freq;
  for (const auto& line : corpus)
    for (auto [b, e] : split_words(line)) ++freq[line.substr(b, e - b)];
  if (freq.empty()) throw std::invalid_argument("cannot train a vocabulary on an empty corpus");

  std::vector<std::pair<std::vector<int>, std::size_t>> words;
  for (const auto& [w, count] : freq) {
    std::vector<int> symbols;
    for (char c : w) symbols.push_back(byte_id(c));
    words.emplace_back(std::move(symbols), count);
  }

  Vocab vocab;
  while (vocab.size() < target_size) {
    std::map<std::pair<int, int>, std::size_t> pairs;
    for (const auto& [symbols, count] : words)
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) pairs[{symbols[i], symbols[i + 1]}] += count;
    const std::pair<int, int>* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : pairs) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      } else if (count == best_count && best) {
        const auto& a = vocab.token(pair.first);
        const auto& b = vocab.token(best->first);
        if (a < b || (a == b && vocab.token(pair.second) < vocab.token(best->second))) best = &pair;
      }
    }
    if (!best || best_count < 2) break;
    const auto [left, right] = *best;
    const int merged = vocab.add_merge(left, right);
    for (auto& [symbols, count] : words) merge_pair(symbols, left, right, merged);
  }
  return vocab;
}

TokenizedTweet encode(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 2) throw std::invalid_argument("max_len must leave room for <s> and </s>");
  TokenizedTweet out;
  out.ids.push_back(kBosId);
  const std::size_t budget = max_len - 2;
  for (auto [b, e] : split_words(text)) {
    if (out.spans.size() >= budget) break;
    std::vector<int> symbols;
    std::vector<TextSpan> spans;
    for (std::size_t i = b; i < e; ++i) {
      symbols.push_back(byte_id(text[i]));
      spans.push_back({i, i + 1});
    }
    while (symbols.size() > 1) {
      std::optional<std::size_t> best_rank;
      std::size_t best_at = 0;
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        const auto rank = vocab.merge_rank(symbols[i], symbols[i + 1]);
        if (rank && (!best_rank || *rank < *best_rank)) {
          best_rank = rank;
          best_at = i;
        }
      }
      if (!best_rank) break;
      const int left = symbols[best_at], right = symbols[best_at + 1];
      const int merged = vocab.merges()[*best_rank].merged;
      std::size_t w = 0;
      for (std::size_t r = 0; r < symbols.size(); ++r) {
        if (r + 1 < symbols.size() && symbols[r] == left && symbols[r + 1] == right) {
          spans[w] = {spans[r].begin, spans[r + 1].end};
          symbols[w++] = merged;
          ++r;
        } else {
          spans[w] = spans[r];
          symbols[w++] = symbols[r];
        }
      }
      symbols.resize(w);
      spans.resize(w);
    }
    for (std::size_t k = 0; k < symbols.size() && out.spans.size() < budget; ++k) {
      out.ids.push_back(symbols[k]);
      out.spans.push_back(spans[k]);
    }
  }
  out.ids.push_back(kEosId);
  return out;
}

}  // namespace adr
