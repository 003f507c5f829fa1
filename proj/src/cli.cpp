#include "adr/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <iostream>

#include "adr/checkpoint.hpp"
#include "adr/config.hpp"
#include "adr/corpus.hpp"
#include "adr/errors.hpp"
#include "adr/eval.hpp"
#include "adr/pipeline.hpp"
#include "adr/text.hpp"

namespace adr::cli {
namespace {

namespace fs = std::filesystem;

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError("missing " + what);
  if (!fs::exists(path)) throw ConfigError(what + " does not exist: " + path);
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<RawTweet> records_to_tweets(const ClassificationDataset& d) {
  std::vector<RawTweet> out;
  for (const auto& r : d.records) out.push_back(r.tweet);
  return out;
}

// `tweet_id\tlabel` files, or task-2 TSVs.
LabelMap load_labels(const std::string& path) {
  const auto lines = text::read_lines(path);
  if (!lines.empty() && lines.front() == kTask2Header) return gold_labels(load_task2(path));
  if (lines.empty() || lines.front() != "tweet_id\tlabel")
    throw DataError(path + ":1: expected header 'tweet_id\\tlabel'");
  LabelMap out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 2 || (f[1] != "0" && f[1] != "1"))
      throw DataError(path + ":" + std::to_string(i + 1) + ": expected tweet_id\\tlabel with label 0 or 1");
    if (!out.emplace(f[0], f[1] == "1" ? 1 : 0).second)
      throw DataError(path + ":" + std::to_string(i + 1) + ": duplicate tweet id '" + f[0] + "'");
  }
  return out;
}

struct Context {
  RunConfig config;
  std::size_t threads = 1;

  std::string resources() const { return config.get_or("resources", default_resource_dir()); }
};

int cmd_preprocess(const Context& ctx, const std::string& input, const std::string& output) {
  require_file(input, "input file");
  const auto tables = ResourceTables::load(ctx.resources());
  const auto tweets = load_tweets(input);
  std::vector<RawTweet> normalized(tweets.size());
  parallel_for(tweets.size(), ctx.threads, [&](std::size_t i) {
    normalized[i] = {tweets[i].id, normalize(tweets[i], tables).text};
  });
  text::write_file(output, format_tweets(normalized));
  std::cout << "preprocessed " << tweets.size() << " tweets -> " << output << "\n";
  return kExitOk;
}

int cmd_build_vocab(const Context& ctx, const std::vector<std::string>& inputs,
                    const std::string& output, std::size_t vocab_size) {
  if (inputs.empty()) throw ConfigError("build-vocab needs at least one --input");
  for (const auto& p : inputs) require_file(p, "input file");
  const auto tables = ResourceTables::load(ctx.resources());
  std::vector<RawTweet> tweets;
  for (const auto& p : inputs) {
    auto part = load_tweets(p);
    tweets.insert(tweets.end(), part.begin(), part.end());
  }
  std::vector<std::string> corpus(tweets.size());
  parallel_for(tweets.size(), ctx.threads, [&](std::size_t i) { corpus[i] = normalize(tweets[i], tables).text; });
  Vocab vocab;
  try {
    vocab = train_vocab(corpus, vocab_size);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  fs::create_directories(output);
  vocab.save(output);
  std::cout << "vocabulary of " << vocab.size() << " tokens (" << vocab.merges().size()
            << " merges) -> " << output << "\n";
  return kExitOk;
}

int cmd_augment(const Context& ctx, const std::string& base, const std::string& extra,
                double fraction, const std::string& output) {
  require_file(base, "base dataset");
  require_file(extra, "extra dataset");
  if (output.empty()) throw ConfigError("missing --output");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("--fraction must be in [0,1]");
  const auto seed = ctx.config.get_size("seed", 0);
  const auto result = augment_task2(load_task2(base), load_task2(extra), fraction, seed);
  text::write_file(output, format_task2(result));
  const auto counts = class_counts(result);
  std::cout << "augmented dataset: " << result.size() << " tweets (ADR "
            << (counts.count(1) ? counts.at(1) : 0) << ", nonADR "
            << (counts.count(0) ? counts.at(0) : 0) << ") -> " << output << "\n";
  return kExitOk;
}

double mention_accuracy(const ModelParams& params, const std::vector<ConceptExample>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    const auto out = forward(ex.ids, params, Mode::kEval, 0);
    Eigen::Index best = 0;
    concept_probabilities(out.sequence_start(), params).maxCoeff(&best);
    correct += static_cast<std::size_t>(best) == ex.concept_index;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

int cmd_train(const Context& ctx) {
  const auto& cfg = ctx.config;
  const Task task = cfg.task();
  const auto vocab_dir = cfg.require("vocab");
  require_file(vocab_dir + "/vocab.tsv", "vocabulary");
  const auto checkpoint_path = cfg.require("checkpoint");
  if (task == Task::kClassify) {
    require_file(cfg.require("train_data"), "train_data");
  } else {
    require_file(cfg.require("train_tweets"), "train_tweets");
    require_file(cfg.require("train_spans"), "train_spans");
  }
  const Hyperparams hp = cfg.hyperparams();
  const auto tables = ResourceTables::load(ctx.resources());
  const auto vocab = Vocab::load(vocab_dir);

  Checkpoint ckpt;
  LossLog log;
  std::string metric_name;
  double metric = 0.0;
  const bool multi_task = task == Task::kExtract && cfg.multi_task();
  if (task == Task::kClassify) {
    const auto enc = cfg.encoder(vocab.size(), 1);
    const TextPipeline pipe{tables, vocab, enc.max_len, ctx.threads};
    const auto data = load_task2(cfg.require("train_data"));
    auto result = train_classifier(make_classifier_examples(data, pipe), hp, enc);
    metric_name = "train_f1";
    metric = score_classification(predict_labels(result.params, records_to_tweets(data), pipe),
                                  gold_labels(data)).f1;
    ckpt.params = std::move(result.params);
    log = std::move(result.log);
  } else if (task == Task::kExtract) {
    const auto enc = cfg.encoder(vocab.size(), 1);
    const TextPipeline pipe{tables, vocab, enc.max_len, ctx.threads};
    const auto data = load_task3(cfg.require("train_spans"), cfg.require("train_tweets"));
    const auto examples = make_tagging_examples(data, pipe);
    auto result = multi_task ? train_extractor_mtl(examples, hp, enc) : train_extractor(examples, hp, enc);
    metric_name = "train_strict_f1";
    metric = score_ner(predict_mentions(result.params, tweets_of(data), pipe), gold_mentions(data),
                       MatchType::kStrict, false).f1;
    ckpt.params = std::move(result.params);
    log = std::move(result.log);
  } else {
    const auto data = load_task3(cfg.require("train_spans"), cfg.require("train_tweets"));
    const auto lexicon = Lexicon::from_mentions(data);
    if (lexicon.concepts.empty()) throw DataError("no coded mentions to train a normalizer on");
    const auto enc = cfg.encoder(vocab.size(), lexicon.concepts.size());
    const TextPipeline pipe{tables, vocab, enc.max_len, ctx.threads};
    const auto examples = make_concept_examples(data, lexicon, pipe);
    auto result = train_normalizer(examples, hp, enc);
    metric_name = "train_accuracy";
    metric = mention_accuracy(result.params, examples);
    ckpt.params = std::move(result.params);
    ckpt.concepts = lexicon.concepts;
    log = std::move(result.log);
  }
  log.header.emplace_back("metric", metric_name);
  if (!log.entries.empty()) log.entries.back().metric = metric;

  ckpt.metadata = {{"task", to_string(task)},
                   {"multi_task", multi_task ? "true" : "false"},
                   {"lambda", format_number(hp.lambda)},
                   {"seed", std::to_string(hp.seed)}};
  save_checkpoint(checkpoint_path, ckpt);
  const auto log_path = cfg.get_or("log", checkpoint_path + ".log.csv");
  text::write_file(log_path, log.to_csv());

  std::cout << "task=" << to_string(task) << " lambda=" << format_number(hp.lambda)
            << " epochs=" << hp.epochs << " seed=" << hp.seed << "\n";
  if (!log.entries.empty())
    std::cout << "final loss " << format_number(log.entries.back().loss) << ", " << metric_name
              << " " << format_number(metric) << "\n";
  std::cout << "checkpoint -> " << checkpoint_path << "\nloss log -> " << log_path << "\n";
  return kExitOk;
}

Checkpoint load_compatible(const RunConfig& cfg, const std::string& path, Task expected,
                           const Vocab& vocab) {
  require_file(path, "checkpoint");
  auto ckpt = load_checkpoint(path);
  const auto* task = ckpt.find_metadata("task");
  if (!task || *task != to_string(expected))
    throw MismatchError(path + ": checkpoint was trained for task '" + (task ? *task : "?") +
                        "', expected '" + to_string(expected) + "'");
  const auto& c = ckpt.params.config;
  const EncoderConfig runtime = cfg.encoder(c.vocab_size, c.n_concepts);
  for (const auto& key : RunConfig::architecture_keys()) {
    if (!cfg.has(key)) continue;
    const bool same = key == "d_model"    ? runtime.d_model == c.d_model
                      : key == "n_layers" ? runtime.n_layers == c.n_layers
                      : key == "n_heads"  ? runtime.n_heads == c.n_heads
                      : key == "ffn_dim"  ? runtime.ffn_dim == c.ffn_dim
                      : key == "max_len"  ? runtime.max_len == c.max_len
                                          : runtime.dropout == c.dropout;
    if (!same) throw MismatchError(path + ": config setting '" + key + "' differs from the checkpoint");
  }
  if (c.vocab_size != vocab.size())
    throw MismatchError(path + ": checkpoint expects a vocabulary of " + std::to_string(c.vocab_size) +
                        " tokens, loaded vocabulary has " + std::to_string(vocab.size()));
  return ckpt;
}

int cmd_predict(const Context& ctx) {
  const auto& cfg = ctx.config;
  const Task task = cfg.task();
  const auto vocab_dir = cfg.require("vocab");
  require_file(vocab_dir + "/vocab.tsv", "vocabulary");
  const auto data_path = cfg.require("data");
  require_file(data_path, "data");
  const auto output = cfg.require("output");
  const auto tables = ResourceTables::load(ctx.resources());
  const auto vocab = Vocab::load(vocab_dir);
  const auto ckpt = load_compatible(cfg, cfg.require("checkpoint"), task, vocab);
  const TextPipeline pipe{tables, vocab, ckpt.params.config.max_len, ctx.threads};

  if (task == Task::kClassify) {
    const auto tweets = load_tweets(data_path);
    const auto labels = predict_labels(ckpt.params, tweets, pipe);
    std::string out = "tweet_id\tlabel\n";
    for (const auto& t : tweets) out += t.id + "\t" + std::to_string(labels.at(t.id)) + "\n";
    text::write_file(output, out);
    std::cout << "predicted " << tweets.size() << " labels -> " << output << "\n";
    return kExitOk;
  }

  ExtractionDataset result;
  std::optional<Checkpoint> normalizer;
  SpanMap mentions;
  if (task == Task::kExtract) {
    const auto tweets = load_tweets(data_path);
    mentions = predict_mentions(ckpt.params, tweets, pipe);
    for (const auto& t : tweets) result.records.push_back({t, {}});
    if (const auto norm_path = cfg.get("norm_checkpoint"); norm_path && !norm_path->empty())
      normalizer = load_compatible(cfg, *norm_path, Task::kNormalize, vocab);
  } else {
    const auto given = load_task3(cfg.require("spans"), data_path);
    mentions = gold_mentions(given);
    for (const auto& r : given.records) result.records.push_back({r.tweet, {}});
    normalizer = ckpt;
  }
  if (normalizer) {
    const TextPipeline norm_pipe{tables, vocab, normalizer->params.config.max_len, ctx.threads};
    assign_concepts(mentions, normalizer->params, normalizer->concepts, norm_pipe);
  }
  std::size_t count = 0;
  for (auto& r : result.records) {
    r.mentions = mentions[r.tweet.id];
    count += r.mentions.size();
  }
  text::write_file(output, format_task3_spans(result));
  std::cout << "predicted " << count << " mentions in " << result.size() << " tweets -> " << output
            << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& pred, const std::string& gold, const std::string& mode,
                 const std::string& match, const std::string& output, int decimals) {
  require_file(pred, "prediction file");
  require_file(gold, "gold file");
  std::vector<EvalReport> reports;
  if (mode == "classification") {
    reports.push_back(score_classification(load_labels(pred), load_labels(gold)));
    if (decimals < 0) decimals = 0;
  } else if (mode == "ner" || mode == "ner+norm") {
    const bool with_norm = mode == "ner+norm";
    const auto p = load_spans(pred);
    const auto g = load_spans(gold);
    if (match == "strict" || match == "both")
      reports.push_back(score_ner(p, g, MatchType::kStrict, with_norm));
    if (match == "relaxed" || match == "both")
      reports.push_back(score_ner(p, g, MatchType::kRelaxed, with_norm));
    if (reports.empty()) throw ConfigError("--match must be strict, relaxed or both");
    if (decimals < 0) decimals = 1;
  } else {
    throw ConfigError("--mode must be classification, ner or ner+norm");
  }
  if (!output.empty()) text::write_file(output, reports_to_tsv(reports));
  std::cout << reports_to_table(reports, decimals);
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"adrkit: ADR tweet classification, mention extraction and normalization"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads for preprocessing and inference")
      ->check(CLI::PositiveNumber);
  std::string resources;
  app.add_option("--resources", resources, "directory with the normalization tables");

  std::string input, output;
  auto* pre = app.add_subcommand("preprocess", "normalize tweet text");
  pre->add_option("--input", input, "tweet or task-2 TSV")->required();
  pre->add_option("--output", output, "normalized tweet TSV")->required();

  std::vector<std::string> vocab_inputs;
  std::size_t vocab_size = 8000;
  auto* bv = app.add_subcommand("build-vocab", "train the subword vocabulary");
  bv->add_option("--input", vocab_inputs, "tweet or task-2 TSV files")->required();
  bv->add_option("--output", output, "output directory for vocab.tsv and merges.tsv")->required();
  bv->add_option("--vocab_size", vocab_size, "target vocabulary size")->capture_default_str();

  std::string base, extra;
  double fraction = 0.9;
  auto* aug = app.add_subcommand("augment", "add extra ADR tweets and downsample nonADR tweets");
  aug->add_option("--base", base, "task-2 TSV")->required();
  aug->add_option("--extra", extra, "task-2 TSV of ADR tweets")->required();
  aug->add_option("--fraction", fraction, "fraction of nonADR tweets to keep")->capture_default_str();
  aug->add_option("--output", output, "output task-2 TSV")->required();

  std::map<std::string, std::string> overrides;
  auto* train = app.add_subcommand("train", "train a model");
  auto* predict = app.add_subcommand("predict", "run a trained model");
  for (auto* sub : {train, predict}) {
    for (const auto& key : RunConfig::known_keys()) {
      if (key == "seed" || key == "threads" || key == "resources") continue;
      sub->add_option_function<std::string>(
          "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
          "overrides config key '" + key + "'");
    }
  }

  std::string pred, gold, mode, match = "both", report;
  int decimals = -1;
  auto* ev = app.add_subcommand("evaluate", "score predictions against gold annotations");
  ev->add_option("--pred", pred, "predictions")->required();
  ev->add_option("--gold", gold, "gold annotations")->required();
  ev->add_option("--mode", mode, "classification | ner | ner+norm")->required();
  ev->add_option("--match", match, "strict | relaxed | both")->capture_default_str();
  ev->add_option("--output", report, "write the report as TSV");
  ev->add_option("--decimals", decimals, "percent decimals (default 0 for classification, 1 for ner)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Context ctx;
    if (!config_path.empty()) ctx.config = RunConfig::from_file(config_path);
    for (const auto& [k, v] : overrides) ctx.config.set(k, v);
    if (seed) ctx.config.set("seed", std::to_string(*seed));
    if (!resources.empty()) ctx.config.set("resources", resources);
    ctx.threads = threads;
    if (ctx.config.has("threads") && threads == 1) ctx.threads = ctx.config.get_size("threads", 1);

    if (*pre) return cmd_preprocess(ctx, input, output);
    if (*bv) return cmd_build_vocab(ctx, vocab_inputs, output, vocab_size);
    if (*aug) return cmd_augment(ctx, base, extra, fraction, output);
    if (*train) return cmd_train(ctx);
    if (*predict) return cmd_predict(ctx);
    if (*ev) return cmd_evaluate(pred, gold, mode, match, report, decimals);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace adr::cli
