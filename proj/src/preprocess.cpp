#include "adr/preprocess.hpp"

#include <algorithm>
#include <stdexcept>

#include "adr/errors.hpp"
#include "adr/text.hpp"

namespace adr {
namespace {

struct Unit {
  char32_t ch;
  std::size_t begin;
  std::size_t end;
  bool synthetic;
  int group;  // index of a protected smiley/emoji token, -1 otherwise
};

using Units = std::vector<Unit>;

bool is_ascii_alnum(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_handle_char(char32_t c) { return is_ascii_alnum(c) || c == '_'; }

bool is_space(char32_t c) {
  switch (c) {
    case ' ': case '\t': case '\n': case '\v': case '\f': case '\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_apostrophe(char32_t c) { return c == '\'' || c == 0x2019 || c == 0x2018; }

char32_t ascii_lower(char32_t c) { return (c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c; }

bool starts_url(const std::u32string& cps, std::size_t i) {
  auto has_prefix = [&](std::u32string_view prefix) {
    if (i + prefix.size() > cps.size()) return false;
    for (std::size_t k = 0; k < prefix.size(); ++k)
      if (ascii_lower(cps[i + k]) != prefix[k]) return false;
    return true;
  };
  return has_prefix(U"http://") || has_prefix(U"https://") || has_prefix(U"www.");
}

template <typename Map>
std::size_t longest_match(const Map& table, std::size_t max_len, const std::u32string& cps,
                          std::size_t i, const std::string** replacement) {
  const std::size_t limit = std::min(max_len, cps.size() - i);
  for (std::size_t len = limit; len > 0; --len) {
    const auto it = table.find(cps.substr(i, len));
    if (it != table.end()) {
      *replacement = &it->second;
      return len;
    }
  }
  return 0;
}

template <typename Map>
std::size_t max_key_length(const Map& table) {
  std::size_t n = 0;
  for (const auto& [k, v] : table) n = std::max(n, k.size());
  return n;
}

// Word = maximal run of unprotected non-space units.
std::vector<std::pair<std::size_t, std::size_t>> words_of(const Units& units) {
  std::vector<std::pair<std::size_t, std::size_t>> words;
  std::size_t i = 0;
  while (i < units.size()) {
    if (units[i].ch == ' ' || units[i].group >= 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < units.size() && units[j].ch != ' ' && units[j].group < 0) ++j;
    words.emplace_back(i, j);
    i = j;
  }
  return words;
}

std::string ascii_of(const Units& units, std::size_t b, std::size_t e) {
  std::string s;
  for (std::size_t k = b; k < e; ++k) s.push_back(static_cast<char>(units[k].ch));
  return s;
}

void append_synthetic(Units& out, std::string_view replacement, std::size_t begin,
                      std::size_t end) {
  for (char c : replacement) out.push_back({static_cast<char32_t>(c), begin, end, true, -1});
}

// Replaces word bodies (leading '#' excluded) found in `table`, comparing
// against the body with runs capped at two so that lookups agree with the
// text a second pass would see.
Units expand_words(const Units& units, const std::map<std::string, std::string>& table) {
  Units out;
  out.reserve(units.size());
  std::size_t cursor = 0;
  for (auto [b, e] : words_of(units)) {
    std::size_t body = b;
    while (body < e && units[body].ch == '#') ++body;
    if (body == e) continue;
    const auto it = table.find(squeeze_runs(ascii_of(units, body, e)));
    if (it == table.end()) continue;
    out.insert(out.end(), units.begin() + cursor, units.begin() + body);
    std::size_t src_end = units[body].end;
    for (std::size_t k = body; k < e; ++k) src_end = std::max(src_end, units[k].end);
    append_synthetic(out, it->second, units[body].begin, src_end);
    cursor = e;
  }
  out.insert(out.end(), units.begin() + cursor, units.end());
  return out;
}

void remove_retweet_markers(Units& units) {
  Units out;
  out.reserve(units.size());
  std::size_t cursor = 0;
  for (auto [b, e] : words_of(units)) {
    if (e - b == 2 && ascii_lower(units[b].ch) == 'r' && ascii_lower(units[b + 1].ch) == 't') {
      out.insert(out.end(), units.begin() + cursor, units.begin() + b);
      cursor = e;
    }
  }
  out.insert(out.end(), units.begin() + cursor, units.end());
  units = std::move(out);
}

std::vector<std::pair<std::string, std::string>> read_table(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> rows;
  const auto lines = text::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tab = lines[i].find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(path + ":" + std::to_string(i + 1) + ": expected key\\treplacement");
    rows.emplace_back(lines[i].substr(0, tab), text::to_lower_ascii(lines[i].substr(tab + 1)));
  }
  return rows;
}

std::map<std::string, std::string> load_word_table(const std::string& path) {
  std::map<std::string, std::string> table;
  for (auto& [key, value] : read_table(path)) {
    // Typographic apostrophes are folded to ASCII before lookup.
    std::string folded;
    for (char32_t c : text::utf8_decode(text::to_lower_ascii(key)))
      folded += is_apostrophe(c) ? std::string("'") : text::utf8_encode(c);
    table.emplace(std::move(folded), std::move(value));
  }
  return table;
}

std::map<std::u32string, std::string> load_symbol_table(const std::string& path) {
  std::map<std::u32string, std::string> table;
  for (auto& [key, value] : read_table(path)) table.emplace(text::utf8_decode(key), std::move(value));
  return table;
}

}  // namespace

std::string default_resource_dir() { return ADR_RESOURCE_DIR; }

ResourceTables ResourceTables::load(const std::string& dir) {
  ResourceTables t;
  t.contractions = load_word_table(dir + "/contractions.tsv");
  t.interjections = load_word_table(dir + "/interjections.tsv");
  t.smileys = load_symbol_table(dir + "/smileys.tsv");
  t.emoji = load_symbol_table(dir + "/emoji.tsv");
  return t;
}

std::string squeeze_runs(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (out.size() >= 2 && s[i] == out[out.size() - 1] && s[i] == out[out.size() - 2]) continue;
    out.push_back(s[i]);
  }
  return out;
}

NormalizedTweet normalize(const RawTweet& tweet, const ResourceTables& tables) {
  NormalizedTweet result;
  result.id = tweet.id;
  result.original = text::utf8_decode(tweet.text);
  const std::u32string& cps = result.original;

  const std::size_t max_emoji = max_key_length(tables.emoji);
  const std::size_t max_smiley = max_key_length(tables.smileys);
  std::vector<const std::string*> groups;

  // (1) strip URLs, mentions, non-ASCII and punctuation; protect smileys and
  // emoji for step 5 and apostrophes for step 3.
  Units units;
  units.reserve(cps.size());
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    const bool after_alnum = i > 0 && is_ascii_alnum(cps[i - 1]);
    if (!after_alnum && starts_url(cps, i)) {
      while (i < cps.size() && !is_space(cps[i])) ++i;
      continue;
    }
    if (c == '@' && i + 1 < cps.size() && is_handle_char(cps[i + 1])) {
      ++i;
      while (i < cps.size() && is_handle_char(cps[i])) ++i;
      continue;
    }
    const std::string* replacement = nullptr;
    std::size_t len = max_emoji ? longest_match(tables.emoji, max_emoji, cps, i, &replacement) : 0;
    if (len == 0 && max_smiley)
      len = longest_match(tables.smileys, max_smiley, cps, i, &replacement);
    if (len > 0) {
      const int g = static_cast<int>(groups.size());
      groups.push_back(replacement);
      for (std::size_t k = 0; k < len; ++k) units.push_back({cps[i + k], i + k, i + k + 1, false, g});
      i += len;
      continue;
    }
    if (is_space(c)) {
      units.push_back({' ', i, i + 1, false, -1});
    } else if (is_apostrophe(c)) {
      units.push_back({'\'', i, i + 1, false, -1});
    } else if (c == '#' || is_ascii_alnum(c)) {
      units.push_back({c, i, i + 1, false, -1});
    } else if (c < 0x80) {
      units.push_back({' ', i, i + 1, false, -1});
    }
    ++i;
  }
  remove_retweet_markers(units);

  // (2) lowercase
  for (auto& u : units)
    if (u.group < 0) u.ch = ascii_lower(u.ch);

  // (3) contractions; leftover apostrophes become spaces
  units = expand_words(units, tables.contractions);
  for (auto& u : units)
    if (u.ch == '\'' && u.group < 0) u.ch = ' ';
  remove_retweet_markers(units);

  // (4) interjections
  units = expand_words(units, tables.interjections);

  // (5) smileys and emoji
  {
    Units out;
    out.reserve(units.size());
    std::size_t k = 0;
    while (k < units.size()) {
      if (units[k].group < 0) {
        out.push_back(units[k++]);
        continue;
      }
      const int g = units[k].group;
      const std::size_t b = units[k].begin;
      std::size_t e = units[k].end;
      while (k < units.size() && units[k].group == g) e = units[k++].end;
      append_synthetic(out, " " + *groups[g] + " ", b, e);
    }
    units = std::move(out);
  }

  // (6) cap runs at two
  {
    Units out;
    out.reserve(units.size());
    for (const auto& u : units) {
      const std::size_t n = out.size();
      if (u.ch != ' ' && n >= 2 && out[n - 1].ch == u.ch && out[n - 2].ch == u.ch) continue;
      out.push_back(u);
    }
    units = std::move(out);
  }

  // (7) collapse whitespace and trim
  for (const auto& u : units) {
    if (u.ch == ' ' && (result.text.empty() || result.text.back() == ' ')) continue;
    result.text.push_back(static_cast<char>(u.ch));
    result.offset_map.push_back({u.begin, u.end, u.synthetic});
  }
  if (!result.text.empty() && result.text.back() == ' ') {
    result.text.pop_back();
    result.offset_map.pop_back();
  }
  return result;
}

std::optional<TextSpan> project_span_to_normalized(const MentionSpan& span,
                                                   const NormalizedTweet& tweet) {
  if (span.begin >= span.end || span.end > tweet.original.size())
    throw std::out_of_range("mention span [" + std::to_string(span.begin) + "," +
                            std::to_string(span.end) + ") outside original text of length " +
                            std::to_string(tweet.original.size()));
  std::optional<TextSpan> out;
  for (std::size_t j = 0; j < tweet.text.size(); ++j) {
    const auto& src = tweet.offset_map[j];
    if (tweet.text[j] == ' ' || src.begin >= span.end || src.end <= span.begin) continue;
    if (!out) out = TextSpan{j, j + 1};
    out->end = j + 1;
  }
  return out;
}

MentionSpan project_span_to_original(const TextSpan& span, const NormalizedTweet& tweet) {
  if (span.begin >= span.end || span.end > tweet.text.size())
    throw std::out_of_range("normalized span [" + std::to_string(span.begin) + "," +
                            std::to_string(span.end) + ") outside normalized text of length " +
                            std::to_string(tweet.text.size()));
  MentionSpan m;
  m.begin = tweet.offset_map[span.begin].begin;
  m.end = tweet.offset_map[span.begin].end;
  for (std::size_t j = span.begin; j < span.end; ++j) {
    m.begin = std::min(m.begin, tweet.offset_map[j].begin);
    m.end = std::max(m.end, tweet.offset_map[j].end);
  }
  m.surface = text::utf8_encode(std::u32string_view(tweet.original).substr(m.begin, m.end - m.begin));
  return m;
}

}  // namespace adr
