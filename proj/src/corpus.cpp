#include "adr/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "adr/errors.hpp"
#include "adr/rng.hpp"
#include "adr/text.hpp"

namespace adr {
namespace {

std::string where(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no) + ": ";
}

bool parse_size(const std::string& s, std::size_t& out) {
  if (s.empty()) return false;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void expect_header(const std::vector<std::string>& lines, const std::string& path,
                   const char* header) {
  if (lines.empty() || lines.front() != header)
    throw DataError(where(path, 1) + "expected header '" + text::escape_field(header) + "'");
}

}  // namespace

ClassificationDataset load_task2(const std::string& path) {
  const auto lines = text::read_lines(path);
  expect_header(lines, path, kTask2Header);
  ClassificationDataset d;
  d.split = path;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    const auto fields = text::split(lines[i], '\t');
    if (fields.size() != 3) throw DataError(where(path, i + 1) + "expected 3 tab-separated fields");
    if (fields[0].empty()) throw DataError(where(path, i + 1) + "empty tweet id");
    if (fields[1] != "0" && fields[1] != "1")
      throw DataError(where(path, i + 1) + "label must be 0 or 1, got '" + fields[1] + "'");
    auto tweet_text = text::unescape_field(fields[2]);
    if (tweet_text.empty()) throw DataError(where(path, i + 1) + "empty tweet text");
    if (!seen.insert(fields[0]).second)
      throw DataError(where(path, i + 1) + "duplicate tweet id '" + fields[0] + "'");
    d.records.push_back({{fields[0], std::move(tweet_text)},
                         fields[1] == "1" ? Label::kAdr : Label::kNonAdr});
  }
  return d;
}

std::string format_task2(const ClassificationDataset& d) {
  std::string out = std::string(kTask2Header) + "\n";
  for (const auto& r : d.records) {
    out += r.tweet.id;
    out += r.label == Label::kAdr ? "\t1\t" : "\t0\t";
    out += text::escape_field(r.tweet.text);
    out += '\n';
  }
  return out;
}

std::vector<RawTweet> load_tweets(const std::string& path) {
  const auto lines = text::read_lines(path);
  if (lines.empty()) throw DataError(where(path, 1) + "missing header");
  const bool task2 = lines.front() == kTask2Header;
  if (!task2) expect_header(lines, path, kTweetHeader);
  const std::size_t n_fields = task2 ? 3 : 2;
  std::vector<RawTweet> tweets;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    const auto fields = text::split(lines[i], '\t');
    if (fields.size() != n_fields)
      throw DataError(where(path, i + 1) + "expected " + std::to_string(n_fields) +
                      " tab-separated fields");
    if (fields[0].empty()) throw DataError(where(path, i + 1) + "empty tweet id");
    auto tweet_text = text::unescape_field(fields.back());
    if (tweet_text.empty()) throw DataError(where(path, i + 1) + "empty tweet text");
    if (!seen.insert(fields[0]).second)
      throw DataError(where(path, i + 1) + "duplicate tweet id '" + fields[0] + "'");
    tweets.push_back({fields[0], std::move(tweet_text)});
  }
  return tweets;
}

std::string format_tweets(const std::vector<RawTweet>& tweets) {
  std::string out = std::string(kTweetHeader) + "\n";
  for (const auto& t : tweets) out += t.id + "\t" + text::escape_field(t.text) + "\n";
  return out;
}

void validate_mentions(const RawTweet& tweet, std::vector<MentionSpan>& mentions) {
  const auto cps = text::utf8_decode(tweet.text);
  for (const auto& m : mentions) {
    if (m.begin >= m.end)
      throw DataError("tweet " + tweet.id + ": span begin " + std::to_string(m.begin) +
                      " >= end " + std::to_string(m.end));
    if (m.end > cps.size())
      throw DataError("tweet " + tweet.id + ": span [" + std::to_string(m.begin) + "," +
                      std::to_string(m.end) + ") exceeds text length " +
                      std::to_string(cps.size()));
    const auto actual = text::utf8_encode(std::u32string_view(cps).substr(m.begin, m.end - m.begin));
    if (actual != m.surface)
      throw DataError("tweet " + tweet.id + ": surface '" + m.surface + "' does not match text '" +
                      actual + "' at [" + std::to_string(m.begin) + "," +
                      std::to_string(m.end) + ")");
  }
  std::stable_sort(mentions.begin(), mentions.end(),
                   [](const MentionSpan& a, const MentionSpan& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < mentions.size(); ++i) {
    if (mentions[i].begin < mentions[i - 1].end)
      throw DataError("tweet " + tweet.id + ": overlapping mentions [" +
                      std::to_string(mentions[i - 1].begin) + "," +
                      std::to_string(mentions[i - 1].end) + ") and [" +
                      std::to_string(mentions[i].begin) + "," + std::to_string(mentions[i].end) +
                      ")");
  }
}

namespace {

MentionSpan parse_span_line(const std::vector<std::string>& f, const std::string& path,
                            std::size_t line_no) {
  MentionSpan m;
  if (!parse_size(f[1], m.begin) || !parse_size(f[2], m.end))
    throw DataError(where(path, line_no) + "begin/end must be non-negative integers");
  if (f[3] != "ADR") throw DataError(where(path, line_no) + "type must be ADR, got '" + f[3] + "'");
  if (m.begin >= m.end)
    throw DataError(where(path, line_no) + "span begin " + f[1] + " >= end " + f[2]);
  m.surface = text::unescape_field(f[4]);
  if (!f[5].empty()) m.code = f[5];
  m.term = text::unescape_field(f[6]);
  return m;
}

template <typename Sink>
void read_span_file(const std::string& path, Sink&& sink) {
  const auto lines = text::read_lines(path);
  expect_header(lines, path, kSpanHeader);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 7) throw DataError(where(path, i + 1) + "expected 7 tab-separated fields");
    if (f[0].empty()) throw DataError(where(path, i + 1) + "empty tweet id");
    sink(f[0], parse_span_line(f, path, i + 1), i + 1);
  }
}

}  // namespace

std::map<std::string, std::vector<MentionSpan>> load_spans(const std::string& path) {
  std::map<std::string, std::vector<MentionSpan>> out;
  read_span_file(path, [&](const std::string& id, MentionSpan m, std::size_t) {
    out[id].push_back(std::move(m));
  });
  return out;
}

ExtractionDataset load_task3(const std::string& spans_path, const std::string& tweets_path) {
  const auto tweets = load_tweets(tweets_path);
  std::unordered_map<std::string, std::size_t> index;
  ExtractionDataset d;
  d.split = tweets_path;
  for (const auto& t : tweets) {
    index.emplace(t.id, d.records.size());
    d.records.push_back({t, {}});
  }

  read_span_file(spans_path, [&](const std::string& id, MentionSpan m, std::size_t line_no) {
    const auto it = index.find(id);
    if (it == index.end())
      throw DataError(where(spans_path, line_no) + "tweet id '" + id + "' not in " + tweets_path);
    d.records[it->second].mentions.push_back(std::move(m));
  });
  for (auto& r : d.records) validate_mentions(r.tweet, r.mentions);
  return d;
}

std::string format_task3_spans(const ExtractionDataset& d) {
  std::string out = std::string(kSpanHeader) + "\n";
  for (const auto& r : d.records) {
    for (const auto& m : r.mentions) {
      out += r.tweet.id + "\t" + std::to_string(m.begin) + "\t" + std::to_string(m.end) + "\tADR\t" +
             text::escape_field(m.surface) + "\t" + m.code.value_or("") + "\t" +
             text::escape_field(m.term) + "\n";
    }
  }
  return out;
}

std::vector<RawTweet> tweets_of(const ExtractionDataset& d) {
  std::vector<RawTweet> out;
  out.reserve(d.records.size());
  for (const auto& r : d.records) out.push_back(r.tweet);
  return out;
}

std::size_t kept_negative_count(std::size_t negatives, double fraction) {
  // The small slack absorbs products such as 0.29 * 100 = 28.999999999999996.
  const double kept = std::floor(fraction * static_cast<double>(negatives) + 1e-9);
  return std::min(negatives, static_cast<std::size_t>(std::max(0.0, kept)));
}

ClassificationDataset augment_task2(const ClassificationDataset& base,
                                    const ClassificationDataset& extra_positives,
                                    double neg_keep_fraction, std::uint64_t seed) {
  if (!(neg_keep_fraction >= 0.0 && neg_keep_fraction <= 1.0))
    throw DataError("negative keep fraction must be in [0,1]");
  for (const auto& r : extra_positives.records)
    if (r.label != Label::kAdr)
      throw DataError("augmentation tweet '" + r.tweet.id + "' is not labeled ADR");

  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < base.records.size(); ++i)
    if (base.records[i].label == Label::kNonAdr) negatives.push_back(i);

  const std::size_t keep = kept_negative_count(negatives.size(), neg_keep_fraction);
  // Partial Fisher-Yates: the first `keep` slots become a uniform sample.
  Rng rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + rng.below(negatives.size() - i);
    std::swap(negatives[i], negatives[j]);
  }
  std::vector<bool> selected(base.records.size(), false);
  for (std::size_t i = 0; i < keep; ++i) selected[negatives[i]] = true;

  ClassificationDataset out;
  out.split = base.split + "+augmented";
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < base.records.size(); ++i) {
    ids.insert(base.records[i].tweet.id);
    if (base.records[i].label == Label::kAdr || selected[i]) out.records.push_back(base.records[i]);
  }
  for (const auto& r : extra_positives.records)
    if (ids.insert(r.tweet.id).second) out.records.push_back(r);
  return out;
}

std::map<int, std::size_t> class_counts(const ClassificationDataset& d) {
  std::map<int, std::size_t> counts;
  for (const auto& r : d.records) ++counts[static_cast<int>(r.label)];
  return counts;
}

}  // namespace adr
