#include "adr/train.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "adr/rng.hpp"

namespace adr {
namespace {

constexpr std::uint64_t kInitStream = 0x1A17;
constexpr std::uint64_t kShuffleStream = 0x5F0F;
constexpr std::uint64_t kDropoutStream = 0xD809;

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Shared mini-batch loop. `objective(params, example, seed, grads, scale)`.
template <typename Example, typename Objective>
TrainResult run_training(const std::vector<Example>& data, const Hyperparams& hp,
                         const EncoderConfig& config, Task task, bool multi_task,
                         Objective&& objective) {
  if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  hp.validate();
  config.validate();

  TrainResult result{init_params(config, mix_seed(hp.seed, kInitStream)), {}};
  auto& params = result.params;
  auto& log = result.log;
  log.header = {{"task", to_string(task)},
                {"multi_task", multi_task ? "true" : "false"},
                {"lambda", format_number(hp.lambda)},
                {"learning_rate", format_number(hp.learning_rate)},
                {"batch_size", std::to_string(hp.batch_size)},
                {"epochs", std::to_string(hp.epochs)},
                {"seed", std::to_string(hp.seed)}};

  OptimizerState state = OptimizerState::for_params(params);
  Gradients grads = zero_gradients(params);
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng(mix_seed(hp.seed, kShuffleStream, epoch)).shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t stop = std::min(order.size(), start + hp.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads) g.setZero();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        const std::uint64_t seed = mix_seed(mix_seed(hp.seed, kDropoutStream), epoch, idx);
        epoch_total += objective(params, data[idx], seed, &grads, scale);
      }
      adamw_step(params.tensors, grads, state, hp);
    }
    log.entries.push_back({epoch + 1, "train", epoch_total / static_cast<double>(data.size()), {}});
  }
  return result;
}

}  // namespace

const char* to_string(Task task) {
  switch (task) {
    case Task::kClassify: return "classify";
    case Task::kExtract: return "extract";
    case Task::kNormalize: return "normalize";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  if (name == "classify") return Task::kClassify;
  if (name == "extract") return Task::kExtract;
  if (name == "normalize") return Task::kNormalize;
  throw std::invalid_argument("unknown task '" + name + "' (classify|extract|normalize)");
}

Hyperparams Hyperparams::defaults_for(Task task, bool multi_task) {
  Hyperparams hp;
  switch (task) {
    case Task::kClassify:
      hp.batch_size = 128;
      hp.epochs = 10;
      break;
    case Task::kExtract:
      hp.batch_size = 64;
      hp.epochs = multi_task ? 30 : 20;
      break;
    case Task::kNormalize:
      // Epoch count is not published for normalization; reuse classification's.
      hp.batch_size = 128;
      hp.epochs = 10;
      break;
  }
  return hp;
}

void Hyperparams::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("adam betas must be in [0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

OptimizerState OptimizerState::for_params(const ModelParams& params) {
  OptimizerState s;
  s.first_moment = zero_gradients(params);
  s.second_moment = zero_gradients(params);
  return s;
}

void adamw_step(std::vector<Tensor>& params, const Gradients& grads, OptimizerState& state,
                const Hyperparams& hp) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size())
    throw std::invalid_argument("gradient/optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!grads[i].allFinite()) throw std::domain_error("non-finite gradient in " + params[i].name);

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = hp.beta1 * m + (1.0 - hp.beta1) * grads[i];
    v = hp.beta2 * v + (1.0 - hp.beta2) * grads[i].cwiseProduct(grads[i]);
    auto& theta = params[i].value;
    const double decay = params[i].decayed ? hp.weight_decay : 0.0;
    theta.array() -= hp.learning_rate *
                     ((m.array() / c1) / ((v.array() / c2).sqrt() + hp.epsilon) + decay * theta.array());
  }
}

std::string LossLog::to_csv() const {
  std::string out;
  for (const auto& [k, v] : header) out += "# " + k + "=" + v + "\n";
  out += "epoch,split,loss,metric\n";
  for (const auto& e : entries) {
    out += std::to_string(e.epoch) + "," + e.split + "," + format_number(e.loss) + ",";
    if (e.metric) out += format_number(*e.metric);
    out += "\n";
  }
  return out;
}

TrainResult train_classifier(const std::vector<ClassifierExample>& data, const Hyperparams& hp,
                             const EncoderConfig& config) {
  return run_training(data, hp, config, Task::kClassify, false,
                      [](const ModelParams& p, const ClassifierExample& ex, std::uint64_t seed,
                         Gradients* g, double scale) {
                        return classifier_objective(p, ex, Mode::kTrain, seed, g, scale);
                      });
}

TrainResult train_extractor_mtl(const std::vector<TaggingExample>& data, const Hyperparams& hp,
                                const EncoderConfig& config) {
  const double lambda = hp.lambda;
  return run_training(data, hp, config, Task::kExtract, true,
                      [lambda](const ModelParams& p, const TaggingExample& ex, std::uint64_t seed,
                               Gradients* g, double scale) {
                        return tagging_objective(p, ex, lambda, true, Mode::kTrain, seed, g, scale);
                      });
}

TrainResult train_extractor(const std::vector<TaggingExample>& data, const Hyperparams& hp,
                            const EncoderConfig& config) {
  return run_training(data, hp, config, Task::kExtract, false,
                      [](const ModelParams& p, const TaggingExample& ex, std::uint64_t seed,
                         Gradients* g, double scale) {
                        return tagging_objective(p, ex, 1.0, false, Mode::kTrain, seed, g, scale);
                      });
}

TrainResult train_normalizer(const std::vector<ConceptExample>& data, const Hyperparams& hp,
                             const EncoderConfig& config) {
  for (const auto& ex : data)
    if (ex.concept_index >= config.n_concepts)
      throw std::invalid_argument("concept index " + std::to_string(ex.concept_index) +
                                  " outside lexicon of size " + std::to_string(config.n_concepts));
  return run_training(data, hp, config, Task::kNormalize, false,
                      [](const ModelParams& p, const ConceptExample& ex, std::uint64_t seed,
                         Gradients* g, double scale) {
                        return concept_objective(p, ex, Mode::kTrain, seed, g, scale);
                      });
}

GradCheckReport grad_check(const std::function<double()>& loss, std::vector<Tensor>& params,
                           const Gradients& analytic, const GradCheckOptions& options) {
  GradCheckReport report;
  if (params.empty()) {
    report.passed = true;
    return report;
  }
  Rng rng(options.seed);
  for (std::size_t k = 0; k < options.probes; ++k) {
    const std::size_t ti = k % params.size();
    auto& value = params[ti].value;
    if (value.size() == 0) continue;
    const auto flat = static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(value.size())));
    const Eigen::Index r = flat / value.cols(), c = flat % value.cols();
    const double saved = value(r, c);
    value(r, c) = saved + options.step;
    const double plus = loss();
    value(r, c) = saved - options.step;
    const double minus = loss();
    value(r, c) = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[ti](r, c);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    const double rel = std::abs(a - numeric) / denom;
    ++report.probes;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_tensor = params[ti].name;
    }
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace adr
