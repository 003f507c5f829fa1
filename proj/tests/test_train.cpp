#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "adr/pipeline.hpp"
#include "adr/rng.hpp"
#include "adr/train.hpp"
#include "support/synthetic.hpp"

using namespace adr;

namespace {

struct Fixture {
  ExtractionDataset data = adr::testing::planted_extraction(5, 3);
  Vocab vocab = adr::testing::vocab_for(tweets_of(data), 300);
  TextPipeline pipe{adr::testing::resources(), vocab, 64, 1};
  Lexicon lexicon = Lexicon::from_mentions(data);
  std::vector<TaggingExample> tagging = make_tagging_examples(data, pipe);
  std::vector<ConceptExample> concepts = make_concept_examples(data, lexicon, pipe);
  ModelParams params;

  Fixture() {
    EncoderConfig c = adr::testing::tiny_config(vocab.size(), lexicon.concepts.size());
    c.d_model = 16;
    c.n_heads = 2;
    c.ffn_dim = 32;
    params = init_params(c, 17);
  }

  std::vector<ClassifierExample> classifier() const {
    std::vector<ClassifierExample> out;
    for (const auto& t : tagging) out.push_back({t.ids, t.detection_label});
    return out;
  }
};

template <typename Examples, typename Objective>
GradCheckReport check(ModelParams& params, const Examples& examples, Objective objective) {
  auto run = [&](Gradients* grads) {
    return batch_objective(
        examples,
        [&](const auto& ex, std::size_t i, Gradients* g, double scale) {
          return objective(ex, 50 + i, g, scale);
        },
        grads);
  };
  Gradients analytic = zero_gradients(params);
  run(&analytic);
  GradCheckOptions opts;
  opts.probes = 128;
  opts.seed = 3;
  return grad_check([&] { return run(nullptr); }, params.tensors, analytic, opts);
}

}  // namespace

TEST_CASE("bce_loss") {
  CHECK(bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_loss(1.0 - 1e-12, 1) == doctest::Approx(-std::log(1.0 - 1e-7)));
  CHECK(bce_loss(1.0, 1) < 1e-6);
  CHECK(std::isfinite(bce_loss(0.0, 1)));
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const double p = 0.001 + 0.998 * rng.uniform();
    const int y = static_cast<int>(rng.below(2));
    const double expected = y == 1 ? -std::log(p) : -std::log(1.0 - p);
    CHECK(std::abs(bce_loss(p, y) - expected) < 1e-12);
  }
}

TEST_CASE("mtl_loss") {
  CHECK(mtl_loss(0.5, 1.5, 0.8) == 0.7);
  CHECK(mtl_loss(0.5, 1.5, 1.0) == 0.5);
  CHECK(mtl_loss(0.5, 1.5, 0.0) == 1.5);
  for (double lambda : {0.0, 0.3, 0.8, 1.0}) CHECK(mtl_loss(0.9, 0.9, lambda) == doctest::Approx(0.9));
  CHECK(mtl_loss(2.0, 0.0, 0.8) == doctest::Approx(2 * mtl_loss(1.0, 0.0, 0.8)));
  CHECK_THROWS_AS(mtl_loss(1.0, 1.0, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(mtl_loss(1.0, 1.0, -0.1), std::invalid_argument);
}

TEST_CASE("adamw_step closed forms") {
  Hyperparams hp;
  hp.learning_rate = 1e-3;
  hp.weight_decay = 0.0;
  std::vector<Tensor> params = {{"w", Eigen::MatrixXd::Constant(1, 1, 1.0), true}};
  Gradients g = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  OptimizerState state{{Eigen::MatrixXd::Zero(1, 1)}, {Eigen::MatrixXd::Zero(1, 1)}, 0};
  adamw_step(params, g, state, hp);
  CHECK(state.step == 1);
  CHECK(params[0].value(0, 0) == doctest::Approx(1.0 - 1e-3 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(params[0].value(0, 0) == doctest::Approx(0.999));

  std::vector<Tensor> still = {{"w", Eigen::MatrixXd::Constant(2, 2, 0.7), true},
                               {"b", Eigen::MatrixXd::Constant(1, 2, -0.3), false}};
  Gradients zero = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(1, 2)};
  OptimizerState s2{{zero[0], zero[1]}, {zero[0], zero[1]}, 0};
  adamw_step(still, zero, s2, hp);
  CHECK(still[0].value.isConstant(0.7));
  CHECK(still[1].value.isConstant(-0.3));

  hp.weight_decay = 0.01;
  adamw_step(still, zero, s2, hp);
  CHECK(still[0].value(0, 0) == doctest::Approx(0.7 * (1.0 - 1e-3 * 0.01)).epsilon(1e-14));
  CHECK(still[1].value.isConstant(-0.3));

  Gradients bad = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Constant(1, 2, NAN)};
  try {
    adamw_step(still, bad, s2, hp);
    FAIL("expected domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  CHECK(still[0].value(0, 0) == doctest::Approx(0.7 * (1.0 - 1e-3 * 0.01)).epsilon(1e-14));
}

TEST_CASE("adamw descends a 1-D quadratic monotonically") {
  Hyperparams hp;
  hp.learning_rate = 0.01;
  hp.weight_decay = 0.0;
  std::vector<Tensor> params = {{"x", Eigen::MatrixXd::Constant(1, 1, 1.0), true}};
  OptimizerState state{{Eigen::MatrixXd::Zero(1, 1)}, {Eigen::MatrixXd::Zero(1, 1)}, 0};
  double prev = 0.5;
  for (int i = 0; i < 50; ++i) {
    Gradients g = {params[0].value};
    adamw_step(params, g, state, hp);
    const double loss = 0.5 * params[0].value(0, 0) * params[0].value(0, 0);
    CHECK(loss < prev);
    prev = loss;
  }
}

TEST_CASE("grad_check harness") {
  std::vector<Tensor> params = {{"a", Eigen::MatrixXd::Random(3, 4), true},
                                {"b", Eigen::MatrixXd::Random(1, 5), false}};
  auto loss = [&] {
    double s = 0.0;
    for (const auto& t : params) s += 0.5 * t.value.squaredNorm();
    return s;
  };
  Gradients exact = {params[0].value, params[1].value};
  GradCheckOptions opts;
  const auto good = grad_check(loss, params, exact, opts);
  CHECK(good.passed);
  CHECK(good.max_relative_error < 1e-9);
  CHECK(good.probes == 64);

  Gradients corrupted = {params[0].value, 2.0 * params[1].value};
  const auto bad = grad_check(loss, params, corrupted, opts);
  CHECK_FALSE(bad.passed);
  CHECK(bad.worst_tensor == "b");
}

TEST_CASE("grad_check passes on every head and on the MTL objective") {
  Fixture f;
  auto& p = f.params;
  const auto cls = check(p, f.classifier(), [&](const ClassifierExample& ex, std::uint64_t seed,
                                                Gradients* g, double scale) {
    return classifier_objective(p, ex, Mode::kTrain, seed, g, scale);
  });
  CHECK_MESSAGE(cls.passed, cls.max_relative_error);
  const auto tag = check(p, f.tagging, [&](const TaggingExample& ex, std::uint64_t seed, Gradients* g,
                                           double scale) {
    return tagging_objective(p, ex, 0.8, false, Mode::kTrain, seed, g, scale);
  });
  CHECK_MESSAGE(tag.passed, tag.max_relative_error);
  const auto con = check(p, f.concepts, [&](const ConceptExample& ex, std::uint64_t seed, Gradients* g,
                                            double scale) {
    return concept_objective(p, ex, Mode::kTrain, seed, g, scale);
  });
  CHECK_MESSAGE(con.passed, con.max_relative_error);
  const auto mtl = check(p, f.tagging, [&](const TaggingExample& ex, std::uint64_t seed, Gradients* g,
                                           double scale) {
    return tagging_objective(p, ex, 0.8, true, Mode::kTrain, seed, g, scale);
  });
  CHECK_MESSAGE(mtl.passed, mtl.max_relative_error);
  CHECK(mtl.max_relative_error < 1e-3);
}

TEST_CASE("every tensor receives gradient") {
  Fixture f;
  Gradients g = zero_gradients(f.params);
  for (std::size_t i = 0; i < f.tagging.size(); ++i)
    tagging_objective(f.params, f.tagging[i], 0.8, true, Mode::kTrain, i, &g, 1.0);
  for (std::size_t i = 0; i < f.concepts.size(); ++i)
    concept_objective(f.params, f.concepts[i], Mode::kTrain, i, &g, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK_MESSAGE(g[i].norm() > 0.0, f.params.tensors[i].name);
}

TEST_CASE("objectives without gradients match objectives with gradients") {
  Fixture f;
  Gradients g = zero_gradients(f.params);
  const auto& ex = f.tagging[0];
  CHECK(tagging_objective(f.params, ex, 0.8, true, Mode::kTrain, 4, &g, 1.0) ==
        tagging_objective(f.params, ex, 0.8, true, Mode::kTrain, 4, nullptr, 1.0));
  const double ext = tagging_objective(f.params, ex, 0.8, false, Mode::kEval, 0, nullptr, 1.0);
  const double det = classifier_objective(f.params, {ex.ids, ex.detection_label}, Mode::kEval, 0, nullptr, 1.0);
  CHECK(tagging_objective(f.params, ex, 0.8, true, Mode::kEval, 0, nullptr, 1.0) ==
        doctest::Approx(mtl_loss(ext, det, 0.8)).epsilon(1e-14));
}

TEST_CASE("hyperparameter defaults and validation") {
  const auto c = Hyperparams::defaults_for(Task::kClassify);
  CHECK(c.learning_rate == 3e-5);
  CHECK(c.batch_size == 128);
  CHECK(c.epochs == 10);
  CHECK(c.lambda == 0.8);
  CHECK(Hyperparams::defaults_for(Task::kExtract, true).epochs == 30);
  CHECK(Hyperparams::defaults_for(Task::kExtract, false).epochs == 20);
  CHECK(Hyperparams::defaults_for(Task::kExtract).batch_size == 64);
  CHECK(Hyperparams::defaults_for(Task::kNormalize).batch_size == 128);
  Hyperparams bad;
  bad.lambda = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = Hyperparams{};
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(parse_task("extract") == Task::kExtract);
  CHECK_THROWS(parse_task("summarize"));
}

TEST_CASE("training loops: initial loss, determinism, progress") {
  const auto cls_data = adr::testing::planted_classification(50, 1);
  std::vector<RawTweet> tweets;
  for (const auto& r : cls_data.records) tweets.push_back(r.tweet);
  const auto vocab = adr::testing::vocab_for(tweets, 350);
  const TextPipeline pipe{adr::testing::resources(), vocab, 64, 1};
  const auto examples = make_classifier_examples(cls_data, pipe);
  const auto config = adr::testing::tiny_config(vocab.size());

  Hyperparams published = Hyperparams::defaults_for(Task::kClassify);
  published.epochs = 1;
  published.batch_size = 16;
  const auto first = train_classifier(examples, published, config);
  REQUIRE(first.log.entries.size() == 1);
  CHECK(first.log.entries[0].epoch == 1);
  CHECK(std::abs(first.log.entries[0].loss - std::log(2.0)) < 0.1);

  const auto hp = adr::testing::desk_hyperparams(3, 8, 5);
  const auto a = train_classifier(examples, hp, config);
  const auto b = train_classifier(examples, hp, config);
  CHECK(a.log.to_csv() == b.log.to_csv());
  for (std::size_t i = 0; i < a.params.tensors.size(); ++i) CHECK(a.params.at(i) == b.params.at(i));
  auto other = hp;
  other.seed = 6;
  CHECK(train_classifier(examples, other, config).log.to_csv() != a.log.to_csv());
  CHECK(a.log.to_csv().find("# lambda=0.8") != std::string::npos);
  CHECK_THROWS(train_classifier({}, hp, config));

  const auto norm_data = adr::testing::toy_lexicon_mentions();
  const auto lex = Lexicon::from_mentions(norm_data);
  REQUIRE(lex.concepts.size() == 3);
  const auto nvocab = adr::testing::vocab_for(tweets_of(norm_data), 300);
  const TextPipeline npipe{adr::testing::resources(), nvocab, 64, 1};
  Hyperparams nhp = Hyperparams::defaults_for(Task::kNormalize);
  nhp.epochs = 1;
  const auto n = train_normalizer(make_concept_examples(norm_data, lex, npipe), nhp,
                                  adr::testing::tiny_config(nvocab.size(), 3));
  CHECK(std::abs(n.log.entries[0].loss - std::log(3.0)) < 0.1 * std::log(3.0));
  CHECK(n.log.to_csv() == train_normalizer(make_concept_examples(norm_data, lex, npipe), nhp,
                                           adr::testing::tiny_config(nvocab.size(), 3))
                              .log.to_csv());

  const auto ext_data = adr::testing::planted_extraction(30, 8);
  const auto evocab = adr::testing::vocab_for(tweets_of(ext_data), 350);
  const TextPipeline epipe{adr::testing::resources(), evocab, 64, 1};
  const auto ext = train_extractor_mtl(make_tagging_examples(ext_data, epipe),
                                       adr::testing::desk_hyperparams(15, 8, 2),
                                       adr::testing::tiny_config(evocab.size()));
  const double start = ext.log.entries.front().loss;
  const double end = ext.log.entries.back().loss;
  CHECK(std::isfinite(end));
  CHECK(end <= 0.8 * start);
}

TEST_CASE("loss log csv layout") {
  LossLog log;
  log.header = {{"task", "classify"}, {"lambda", "0.8"}};
  log.entries.push_back({1, "train", 0.5, std::nullopt});
  log.entries.push_back({2, "train", 0.25, 1.0});
  CHECK(log.to_csv() ==
        "# task=classify\n# lambda=0.8\nepoch,split,loss,metric\n1,train,0.5,\n2,train,0.25,1\n");
}
