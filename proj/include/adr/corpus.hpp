#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adr {

struct RawTweet {
  std::string id;
  std::string text;  // UTF-8
};

enum class Label : int { kNonAdr = 0, kAdr = 1 };

// Half-open span in Unicode code points on the original tweet text.
struct MentionSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string surface;
  std::optional<std::string> code;  // MedDRA code
  std::string term;                 // MedDRA term, empty when unknown

  friend bool operator==(const MentionSpan&, const MentionSpan&) = default;
};

struct LabeledTweet {
  RawTweet tweet;
  Label label = Label::kNonAdr;
};

struct AnnotatedTweet {
  RawTweet tweet;
  std::vector<MentionSpan> mentions;  // sorted by begin, pairwise disjoint
};

struct ClassificationDataset {
  std::string split;
  std::vector<LabeledTweet> records;

  std::size_t size() const { return records.size(); }
};

struct ExtractionDataset {
  std::string split;
  std::vector<AnnotatedTweet> records;

  std::size_t size() const { return records.size(); }
};

inline constexpr const char* kTask2Header = "tweet_id\tlabel\ttext";
inline constexpr const char* kTweetHeader = "tweet_id\ttext";
inline constexpr const char* kSpanHeader =
    "tweet_id\tbegin\tend\ttype\textraction\tmeddra_code\tmeddra_term";

// Task-2 TSV: header `tweet_id\tlabel\ttext`, one tweet per line.
ClassificationDataset load_task2(const std::string& path);
std::string format_task2(const ClassificationDataset& d);

// Tweet TSV (`tweet_id\ttext`). Task-2 files are accepted too; the label
// column is ignored.
std::vector<RawTweet> load_tweets(const std::string& path);
std::string format_tweets(const std::vector<RawTweet>& tweets);

// Task-3: span TSV plus the companion tweet TSV holding the text of every
// tweet, with or without mentions.
ExtractionDataset load_task3(const std::string& spans_path, const std::string& tweets_path);
std::string format_task3_spans(const ExtractionDataset& d);
std::vector<RawTweet> tweets_of(const ExtractionDataset& d);

// Span TSV on its own, grouped by tweet id in file order. Without the tweet
// text only field syntax and begin < end are checked.
std::map<std::string, std::vector<MentionSpan>> load_spans(const std::string& path);

// Validates span bounds, surface agreement and disjointness for one tweet and
// sorts the spans. Throws DataError.
void validate_mentions(const RawTweet& tweet, std::vector<MentionSpan>& mentions);

// All positives of `base`, the positives of `extra_positives` whose ids are
// not in `base`, and floor(neg_keep_fraction * |negatives|) negatives of
// `base` sampled without replacement. Base records keep their order.
ClassificationDataset augment_task2(const ClassificationDataset& base,
                                    const ClassificationDataset& extra_positives,
                                    double neg_keep_fraction, std::uint64_t seed);

std::size_t kept_negative_count(std::size_t negatives, double fraction);

std::map<int, std::size_t> class_counts(const ClassificationDataset& d);

}  // namespace adr
