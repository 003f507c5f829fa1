#include "doctest.h"

#include <iostream>
#include <sstream>

#include "adr/cli.hpp"
#include "adr/config.hpp"
#include "adr/corpus.hpp"
#include "adr/errors.hpp"
#include "adr/text.hpp"
#include "support/synthetic.hpp"

using namespace adr;
using adr::testing::TempDir;
using adr::testing::read_file;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

// Writes planted classification data, a vocabulary and a small config.
struct ClassifySetup {
  TempDir dir;
  std::string cfg = dir.file("run.cfg");

  explicit ClassifySetup(std::size_t epochs = 2) {
    text::write_file(dir.file("train.tsv"), format_task2(adr::testing::planted_classification(50, 1)));
    REQUIRE(run_cli({"build-vocab", "--input", dir.file("train.tsv"), "--output", dir.file("vocab"),
                     "--vocab_size", "350"})
                .code == 0);
    text::write_file(cfg, "# planted classification\ntask = classify\ntrain_data = " +
                              dir.file("train.tsv") + "\nvocab = " + dir.file("vocab") +
                              "\ncheckpoint = " + dir.file("model.ckpt") +
                              "\nseed = 1\nlearning_rate = 0.001\nbatch_size = 8\nepochs = " +
                              std::to_string(epochs) +
                              "\nd_model = 32\nn_layers = 2\nn_heads = 4\nffn_dim = 64\n"
                              "max_len = 64\ndropout = 0.1\n");
  }
};

}  // namespace

TEST_CASE("RunConfig parsing") {
  TempDir dir;
  text::write_file(dir.file("a.cfg"), "# comment\n task = extract \nlambda=0.5\n\nmtl = false\nepochs = 3\n");
  const auto cfg = RunConfig::from_file(dir.file("a.cfg"));
  CHECK(cfg.task() == Task::kExtract);
  CHECK_FALSE(cfg.multi_task());
  const auto hp = cfg.hyperparams();
  CHECK(hp.lambda == 0.5);
  CHECK(hp.epochs == 3);
  CHECK(hp.batch_size == 64);
  CHECK(hp.learning_rate == 3e-5);
  const auto enc = cfg.encoder(500, 1);
  CHECK(enc.d_model == 128);
  CHECK(enc.vocab_size == 500);

  RunConfig c;
  CHECK_THROWS_AS(c.set("colour", "red"), ConfigError);
  c.set("task", "classify");
  c.set("epochs", "-1");
  CHECK_THROWS_AS(c.hyperparams(), ConfigError);
  c.set("epochs", "2");
  c.set("lambda", "2");
  CHECK_THROWS_AS(c.hyperparams(), ConfigError);
  c.set("task", "bogus");
  CHECK_THROWS_AS(c.task(), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file(dir.file("none.cfg")), ConfigError);
  text::write_file(dir.file("b.cfg"), "task classify\n");
  CHECK_THROWS_AS(RunConfig::from_file(dir.file("b.cfg")), ConfigError);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run_cli({"evaluate", "--pred", "x"}).code == cli::kExitUsage);
  const auto missing = run_cli({"augment", "--base", "/nope/base.tsv", "--extra", "/nope/extra.tsv",
                                "--output", "/tmp/x.tsv"});
  CHECK(missing.code == cli::kExitUsage);
  CHECK(missing.err.find("/nope/base.tsv") != std::string::npos);
  TempDir dir;
  text::write_file(dir.file("bad.cfg"), "colour = red\n");
  CHECK(run_cli({"--config", dir.file("bad.cfg"), "train"}).code == cli::kExitUsage);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
}

TEST_CASE("malformed data exits with 3") {
  TempDir dir;
  text::write_file(dir.file("bad.tsv"), "tweet_id\tlabel\ttext\nt1\t7\tx\n");
  text::write_file(dir.file("ok.tsv"), format_task2(adr::testing::shaped_task2(2, 2, "o")));
  CHECK(run_cli({"augment", "--base", dir.file("bad.tsv"), "--extra", dir.file("ok.tsv"), "--output",
                 dir.file("out.tsv")})
            .code == cli::kExitMismatch);
}

TEST_CASE("preprocess command") {
  TempDir dir;
  text::write_file(dir.file("in.tsv"), "tweet_id\ttext\nt1\tI can\xE2\x80\x99t feeeeel my legs :)\n");
  REQUIRE(run_cli({"preprocess", "--input", dir.file("in.tsv"), "--output", dir.file("out.tsv")}).code == 0);
  CHECK(read_file(dir.file("out.tsv")) == "tweet_id\ttext\nt1\ti cannot feel my legs happy\n");
}

TEST_CASE("augment command") {
  TempDir dir;
  text::write_file(dir.file("base.tsv"), format_task2(adr::testing::shaped_task2(10, 3, "b")));
  auto extra = adr::testing::shaped_task2(0, 4, "x");
  extra.records[0].tweet.id = "bp1";
  text::write_file(dir.file("extra.tsv"), format_task2(extra));
  REQUIRE(run_cli({"--seed", "3", "augment", "--base", dir.file("base.tsv"), "--extra",
                   dir.file("extra.tsv"), "--fraction", "1.0", "--output", dir.file("all.tsv")})
              .code == 0);
  CHECK(load_task2(dir.file("all.tsv")).size() == 13 + 3);
  REQUIRE(run_cli({"augment", "--base", dir.file("base.tsv"), "--extra", dir.file("extra.tsv"),
                   "--output", dir.file("ninety.tsv")})
              .code == 0);
  CHECK(class_counts(load_task2(dir.file("ninety.tsv"))).at(0) == 9);
  CHECK(run_cli({"augment", "--base", dir.file("base.tsv"), "--extra", dir.file("extra.tsv"),
                 "--fraction", "1.5", "--output", dir.file("x.tsv")})
            .code == cli::kExitUsage);
}

TEST_CASE("train, predict and evaluate a planted classifier") {
  ClassifySetup s(150);
  const auto trained = run_cli({"--config", s.cfg, "train"});
  REQUIRE(trained.code == 0);
  CHECK(trained.out.find("lambda=0.8") != std::string::npos);
  const auto log = read_file(s.dir.file("model.ckpt.log.csv"));
  CHECK(log.find("# lambda=0.8\n") != std::string::npos);
  CHECK(log.find("# metric=train_f1\n") != std::string::npos);
  CHECK(log.find("\n150,train,") != std::string::npos);
  CHECK(log.substr(log.size() - 3) == ",1\n");

  REQUIRE(run_cli({"--config", s.cfg, "predict", "--data", s.dir.file("train.tsv"), "--output",
                   s.dir.file("pred.tsv")})
              .code == 0);
  const auto ev = run_cli({"evaluate", "--pred", s.dir.file("pred.tsv"), "--gold", s.dir.file("train.tsv"),
                           "--mode", "classification", "--output", s.dir.file("report.tsv")});
  REQUIRE(ev.code == 0);
  CHECK(read_file(s.dir.file("report.tsv")) ==
        "mode\tmatch\ttp\tfp\tfn\tP\tR\tF1\nclassification\tn/a\t25\t0\t0\t1.000000\t1.000000\t1.000000\n");
}

TEST_CASE("predict: empty input, flag overrides and mismatches") {
  ClassifySetup s(1);
  REQUIRE(run_cli({"--config", s.cfg, "train", "--epochs", "2"}).code == 0);
  CHECK(read_file(s.dir.file("model.ckpt.log.csv")).find("\n2,train,") != std::string::npos);

  text::write_file(s.dir.file("empty.tsv"), "tweet_id\ttext\n");
  REQUIRE(run_cli({"--config", s.cfg, "predict", "--data", s.dir.file("empty.tsv"), "--output",
                   s.dir.file("empty.pred.tsv")})
              .code == 0);
  CHECK(read_file(s.dir.file("empty.pred.tsv")) == "tweet_id\tlabel\n");

  const auto wrong_task = run_cli({"--config", s.cfg, "predict", "--task", "extract", "--data",
                                   s.dir.file("empty.tsv"), "--output", s.dir.file("x.tsv")});
  CHECK(wrong_task.code == cli::kExitMismatch);
  CHECK(run_cli({"--config", s.cfg, "predict", "--d_model", "64", "--data", s.dir.file("empty.tsv"),
                 "--output", s.dir.file("x.tsv")})
            .code == cli::kExitMismatch);
  REQUIRE(run_cli({"build-vocab", "--input", s.dir.file("train.tsv"), "--output", s.dir.file("v2"),
                   "--vocab_size", "300"})
              .code == 0);
  CHECK(run_cli({"--config", s.cfg, "predict", "--vocab", s.dir.file("v2"), "--data",
                 s.dir.file("empty.tsv"), "--output", s.dir.file("x.tsv")})
            .code == cli::kExitMismatch);
  CHECK(run_cli({"--config", s.cfg, "predict", "--data", s.dir.file("absent.tsv"), "--output",
                 s.dir.file("x.tsv")})
            .code == cli::kExitUsage);
}

TEST_CASE("extraction with normalization through the CLI") {
  TempDir dir;
  const auto data = adr::testing::planted_extraction(12, 4);
  text::write_file(dir.file("tweets.tsv"), format_tweets(tweets_of(data)));
  text::write_file(dir.file("spans.tsv"), format_task3_spans(data));
  text::write_file(dir.file("empty.tsv"), "tweet_id\ttext\n");
  REQUIRE(run_cli({"build-vocab", "--input", dir.file("tweets.tsv"), "--output", dir.file("vocab"),
                   "--vocab_size", "300"})
              .code == 0);
  const std::string common = "vocab = " + dir.file("vocab") + "\ntrain_tweets = " + dir.file("tweets.tsv") +
                             "\ntrain_spans = " + dir.file("spans.tsv") +
                             "\nepochs = 2\nbatch_size = 4\nlearning_rate = 0.001\nd_model = 16\n"
                             "n_layers = 1\nn_heads = 2\nffn_dim = 32\n";
  text::write_file(dir.file("ext.cfg"), common + "task = extract\ncheckpoint = " + dir.file("ext.ckpt") +
                                            "\nnorm_checkpoint = " + dir.file("norm.ckpt") + "\n");
  text::write_file(dir.file("norm.cfg"), common + "task = normalize\ncheckpoint = " + dir.file("norm.ckpt") + "\n");
  REQUIRE(run_cli({"--config", dir.file("ext.cfg"), "train"}).code == 0);
  REQUIRE(run_cli({"--config", dir.file("norm.cfg"), "train"}).code == 0);
  CHECK(read_file(dir.file("ext.ckpt.log.csv")).find("# multi_task=true") != std::string::npos);

  REQUIRE(run_cli({"--config", dir.file("ext.cfg"), "predict", "--data", dir.file("empty.tsv"),
                   "--output", dir.file("empty.spans.tsv")})
              .code == 0);
  CHECK(read_file(dir.file("empty.spans.tsv")) == std::string(kSpanHeader) + "\n");

  REQUIRE(run_cli({"--config", dir.file("norm.cfg"), "predict", "--data", dir.file("tweets.tsv"),
                   "--spans", dir.file("spans.tsv"), "--output", dir.file("norm.pred.tsv")})
              .code == 0);
  const auto normalized = load_task3(dir.file("norm.pred.tsv"), dir.file("tweets.tsv"));
  REQUIRE(normalized.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    REQUIRE(normalized.records[i].mentions.size() == data.records[i].mentions.size());
    for (std::size_t k = 0; k < data.records[i].mentions.size(); ++k) {
      CHECK(normalized.records[i].mentions[k].begin == data.records[i].mentions[k].begin);
      CHECK(normalized.records[i].mentions[k].code.has_value());
    }
  }

  // Normalizer checkpoints cannot be used for extraction.
  CHECK(run_cli({"--config", dir.file("ext.cfg"), "predict", "--checkpoint", dir.file("norm.ckpt"),
                 "--data", dir.file("tweets.tsv"), "--output", dir.file("x.tsv")})
            .code == cli::kExitMismatch);

  REQUIRE(run_cli({"--config", dir.file("ext.cfg"), "predict", "--data", dir.file("tweets.tsv"),
                   "--output", dir.file("ext.pred.tsv")})
              .code == 0);
  const auto ev = run_cli({"evaluate", "--pred", dir.file("ext.pred.tsv"), "--gold", dir.file("spans.tsv"),
                           "--mode", "ner", "--output", dir.file("report.tsv")});
  REQUIRE(ev.code == 0);
  const auto lines = text::split(read_file(dir.file("report.tsv")), '\n');
  REQUIRE(lines.size() >= 3);
  CHECK(lines[1].rfind("ner\tstrict\t", 0) == 0);
  CHECK(lines[2].rfind("ner\trelaxed\t", 0) == 0);
}

TEST_CASE("evaluate reproduces published F1 arithmetic") {
  TempDir dir;
  std::string pred = "tweet_id\tlabel\n", gold = "tweet_id\tlabel\ttext\n";
  int n = 0;
  auto add = [&](int count, int p, int g) {
    for (int i = 0; i < count; ++i, ++n) {
      pred += "t" + std::to_string(n) + "\t" + std::to_string(p) + "\n";
      gold += "t" + std::to_string(n) + "\t" + std::to_string(g) + "\tx\n";
    }
  };
  add(52, 1, 1);
  add(48, 1, 0);
  add(28, 0, 1);
  add(10, 0, 0);
  text::write_file(dir.file("pred.tsv"), pred);
  text::write_file(dir.file("gold.tsv"), gold);
  const auto r = run_cli({"evaluate", "--pred", dir.file("pred.tsv"), "--gold", dir.file("gold.tsv"),
                          "--mode", "classification", "--decimals", "2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("52.00") != std::string::npos);
  CHECK(r.out.find("65.00") != std::string::npos);
  CHECK(r.out.find("57.78") != std::string::npos);
  const auto rounded = run_cli({"evaluate", "--pred", dir.file("pred.tsv"), "--gold", dir.file("gold.tsv"),
                                "--mode", "classification"});
  CHECK(rounded.out.find(" 58") != std::string::npos);
  CHECK(run_cli({"evaluate", "--pred", dir.file("pred.tsv"), "--gold", dir.file("gold.tsv"), "--mode",
                 "summary"})
            .code == cli::kExitUsage);
}
