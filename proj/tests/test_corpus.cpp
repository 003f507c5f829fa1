#include "doctest.h"

#include <cmath>

#include "adr/corpus.hpp"
#include "adr/errors.hpp"
#include "adr/text.hpp"
#include "support/synthetic.hpp"

using namespace adr;
using adr::testing::TempDir;

namespace {

const std::string kCiproTweet =
    "@coolpharmgreg i don't care if they are toxic haha putting the cipro drops in is "
    "essentially equivalent to torture #oww";

std::string span_line(const std::string& id, std::size_t b, std::size_t e, const std::string& s,
                      const std::string& code, const std::string& term) {
  return id + "\t" + std::to_string(b) + "\t" + std::to_string(e) + "\tADR\t" + s + "\t" + code +
         "\t" + term + "\n";
}

}  // namespace

TEST_CASE("load_task2 reads records and class counts") {
  TempDir dir;
  text::write_file(dir.file("t2.tsv"),
                   "tweet_id\tlabel\ttext\nt1\t1\tthank god for vyvanse #addicted\n"
                   "t2\t0\tnever take paxil #js\n");
  const auto d = load_task2(dir.file("t2.tsv"));
  REQUIRE(d.size() == 2);
  CHECK(d.records[0].tweet.text == "thank god for vyvanse #addicted");
  CHECK(d.records[0].label == Label::kAdr);
  CHECK(class_counts(d) == std::map<int, std::size_t>{{0, 1}, {1, 1}});
}

TEST_CASE("load_task2 edge cases") {
  TempDir dir;
  text::write_file(dir.file("empty.tsv"), "tweet_id\tlabel\ttext\n");
  CHECK(load_task2(dir.file("empty.tsv")).size() == 0);

  text::write_file(dir.file("bad.tsv"), "tweet_id\tlabel\ttext\nt1\t0\tok\nt2\t2\tbad label\n");
  try {
    load_task2(dir.file("bad.tsv"));
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }

  text::write_file(dir.file("dup.tsv"), "tweet_id\tlabel\ttext\nt1\t0\ta\nt1\t1\tb\n");
  CHECK_THROWS_AS(load_task2(dir.file("dup.tsv")), DataError);
  text::write_file(dir.file("fields.tsv"), "tweet_id\tlabel\ttext\nt1\t0\n");
  CHECK_THROWS_AS(load_task2(dir.file("fields.tsv")), DataError);
  text::write_file(dir.file("header.tsv"), "id\tlabel\ttext\n");
  CHECK_THROWS_AS(load_task2(dir.file("header.tsv")), DataError);
}

TEST_CASE("task-2 format round trip is byte exact") {
  TempDir dir;
  ClassificationDataset d;
  d.records.push_back({{"a", "tab\there\nnewline \\ slash \xF0\x9F\x98\x80"}, Label::kAdr});
  d.records.push_back({{"b", "plain"}, Label::kNonAdr});
  const auto bytes = format_task2(d);
  text::write_file(dir.file("x.tsv"), bytes);
  const auto back = load_task2(dir.file("x.tsv"));
  REQUIRE(back.size() == 2);
  CHECK(back.records[0].tweet.text == d.records[0].tweet.text);
  CHECK(format_task2(back) == bytes);
}

TEST_CASE("load_task3 groups mentions and keeps mention-free tweets") {
  TempDir dir;
  text::write_file(dir.file("tweets.tsv"),
                   "tweet_id\ttext\nt9\t" + kCiproTweet + "\nt10\tcipro worked fine\n");
  text::write_file(dir.file("spans.tsv"),
                   std::string(kSpanHeader) + "\n" +
                       span_line("t9", 93, 114, "equivalent to torture", "10016370", "feeling unwell") +
                       span_line("t9", 40, 45, "toxic", "10013746", "drug toxicity") +
                       span_line("t9", 116, 119, "oww", "10033371", "pain"));
  const auto d = load_task3(dir.file("spans.tsv"), dir.file("tweets.tsv"));
  REQUIRE(d.size() == 2);
  const auto& m = d.records[0].mentions;
  REQUIRE(m.size() == 3);
  CHECK(m[0].surface == "toxic");
  CHECK(m[0].code == std::optional<std::string>("10013746"));
  CHECK(m[0].term == "drug toxicity");
  CHECK(m[1].begin == 93);
  CHECK(d.records[1].mentions.empty());

  const auto bytes = format_task3_spans(d);
  text::write_file(dir.file("spans2.tsv"), bytes);
  const auto back = load_task3(dir.file("spans2.tsv"), dir.file("tweets.tsv"));
  CHECK(format_task3_spans(back) == bytes);
  CHECK(back.records[0].mentions == m);
}

TEST_CASE("load_task3 rejects invalid spans") {
  TempDir dir;
  text::write_file(dir.file("tweets.tsv"), "tweet_id\ttext\nt9\t" + kCiproTweet + "\n");
  auto load_with = [&](const std::string& lines) {
    text::write_file(dir.file("spans.tsv"), std::string(kSpanHeader) + "\n" + lines);
    return load_task3(dir.file("spans.tsv"), dir.file("tweets.tsv"));
  };
  CHECK_NOTHROW(load_with(span_line("t9", 40, 45, "toxic", "10013746", "drug toxicity")));
  CHECK_THROWS_AS(load_with(span_line("t9", 45, 45, "", "1", "x")), DataError);
  CHECK_THROWS_AS(load_with(span_line("t9", 45, 40, "toxic", "1", "x")), DataError);
  CHECK_THROWS_AS(load_with(span_line("t9", 61, 66, "toxic", "1", "x")), DataError);
  CHECK_THROWS_AS(load_with(span_line("t9", 117, 125, "ww", "1", "x")), DataError);
  CHECK_THROWS_AS(load_with(span_line("t9", 40, 45, "toxic", "1", "x") +
                            span_line("t9", 43, 50, "ic haha", "1", "x")),
                  DataError);
  CHECK_THROWS_AS(load_with(span_line("zz", 0, 1, "a", "1", "x")), DataError);
}

TEST_CASE("kept negative count uses floor") {
  CHECK(kept_negative_count(18641, 0.9) == 16776);
  CHECK(kept_negative_count(10, 0.9) == 9);
  CHECK(kept_negative_count(3, 0.5) == 1);
  CHECK(kept_negative_count(18641, 1.0) == 18641);
  CHECK(kept_negative_count(18641, 0.0) == 0);
}

TEST_CASE("augment_task2 arithmetic, determinism and dedup") {
  const auto base = adr::testing::shaped_task2(18641, 1903, "b");
  const auto extra = adr::testing::shaped_task2(0, 40, "x");
  const auto out = augment_task2(base, extra, 0.9, 7);
  CHECK(class_counts(out) == std::map<int, std::size_t>{{0, 16776}, {1, 1943}});
  CHECK(out.size() == 1903 + 40 + 16776);
  CHECK(format_task2(out) == format_task2(augment_task2(base, extra, 0.9, 7)));
  CHECK(format_task2(out) != format_task2(augment_task2(base, extra, 0.9, 8)));

  CHECK(class_counts(augment_task2(base, extra, 0.0, 1)).count(0) == 0);
  const auto all = augment_task2(base, extra, 1.0, 99);
  CHECK(class_counts(all).at(0) == 18641);
  CHECK(format_task2(all) == format_task2(augment_task2(base, extra, 1.0, 5)));

  ClassificationDataset overlap = adr::testing::shaped_task2(0, 3, "b");
  overlap.records[0].tweet.text = "different text";
  const auto dedup = augment_task2(base, overlap, 1.0, 1);
  CHECK(dedup.size() == base.size());
  std::size_t kept_base_text = 0;
  for (const auto& r : dedup.records)
    if (r.tweet.id == "bp0" && r.tweet.text != "different text") ++kept_base_text;
  CHECK(kept_base_text == 1);

  ClassificationDataset bad = adr::testing::shaped_task2(1, 0, "x");
  CHECK_THROWS_AS(augment_task2(base, bad, 0.9, 1), DataError);
}

TEST_CASE("class_counts") {
  CHECK(class_counts(adr::testing::shaped_task2(18641, 1903, "s")) ==
        std::map<int, std::size_t>{{0, 18641}, {1, 1903}});
  CHECK(class_counts(ClassificationDataset{}).empty());
  CHECK(class_counts(adr::testing::shaped_task2(0, 3, "p")) == std::map<int, std::size_t>{{1, 3}});
}
