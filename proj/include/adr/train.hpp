#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adr/encoder.hpp"
#include "adr/spans.hpp"

namespace adr {

enum class Task { kClassify, kExtract, kNormalize };

const char* to_string(Task task);
Task parse_task(const std::string& name);

struct Hyperparams {
  double learning_rate = 3e-5;
  std::size_t batch_size = 128;
  std::size_t epochs = 10;
  double lambda = 0.8;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  // Published settings: classification 128/10 epochs, extraction 64 with 20
  // epochs (single task) or 30 (multi-task), normalization batch 128.
  static Hyperparams defaults_for(Task task, bool multi_task = true);
  void validate() const;  // throws std::invalid_argument
};

struct OptimizerState {
  std::vector<Eigen::MatrixXd> first_moment;
  std::vector<Eigen::MatrixXd> second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ModelParams& params);
};

// Binary cross-entropy with the probability clamped to [1e-7, 1 - 1e-7].
double bce_loss(double probability, int label);

// lambda * extraction_loss + (1 - lambda) * detection_loss.
double mtl_loss(double extraction_loss, double detection_loss, double lambda);

// One decoupled-weight-decay Adam update. Decay applies to tensors flagged
// `decayed` (matrices). Throws std::domain_error naming the first tensor with
// a non-finite gradient; parameters are left untouched in that case.
void adamw_step(std::vector<Tensor>& params, const Gradients& grads, OptimizerState& state,
                const Hyperparams& hp);

struct ClassifierExample {
  std::vector<int> ids;
  int label = 0;
};

struct TaggingExample {
  std::vector<int> ids;
  std::vector<BioTag> tags;  // one per non-special token
  int detection_label = 0;   // 1 iff the tweet has a gold mention
};

struct ConceptExample {
  std::vector<int> ids;
  std::size_t concept_index = 0;
};

// Per-example objectives. When `grads` is non-null, `scale` * dLoss/dparams is
// accumulated into it.
double classifier_objective(const ModelParams& params, const ClassifierExample& ex, Mode mode,
                            std::uint64_t seed, Gradients* grads, double scale);
// Multi-task when `with_detection` is set: mtl_loss(L_extraction, L_detection,
// lambda); otherwise the extraction loss alone. The extraction loss is the mean
// token cross-entropy over real tokens.
double tagging_objective(const ModelParams& params, const TaggingExample& ex, double lambda,
                         bool with_detection, Mode mode, std::uint64_t seed, Gradients* grads,
                         double scale);
double concept_objective(const ModelParams& params, const ConceptExample& ex, Mode mode,
                         std::uint64_t seed, Gradients* grads, double scale);

// Mean objective over a batch of examples.
template <typename Example, typename Objective>
double batch_objective(const std::vector<Example>& batch, Objective&& objective, Gradients* grads) {
  double total = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) total += objective(batch[i], i, grads, scale);
  return total * scale;
}

struct LossLog {
  struct Entry {
    std::size_t epoch = 0;
    std::string split;
    double loss = 0.0;
    std::optional<double> metric;
  };
  std::vector<std::pair<std::string, std::string>> header;  // written as `# key=value`
  std::vector<Entry> entries;

  std::string to_csv() const;
};

struct TrainResult {
  ModelParams params;
  LossLog log;
};

TrainResult train_classifier(const std::vector<ClassifierExample>& data, const Hyperparams& hp,
                             const EncoderConfig& config);
// Shared encoder with the BIO head (main task) and the tweet head (auxiliary),
// combined with hp.lambda.
TrainResult train_extractor_mtl(const std::vector<TaggingExample>& data, const Hyperparams& hp,
                                const EncoderConfig& config);
// BIO head only.
TrainResult train_extractor(const std::vector<TaggingExample>& data, const Hyperparams& hp,
                            const EncoderConfig& config);
TrainResult train_normalizer(const std::vector<ConceptExample>& data, const Hyperparams& hp,
                             const EncoderConfig& config);

struct GradCheckOptions {
  std::size_t probes = 64;
  double tolerance = 1e-3;
  double step = 1e-4;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t probes = 0;
  std::string worst_tensor;
  bool passed = false;
};

// Compares `analytic` against central differences of `loss` for randomly
// chosen scalars, spread round-robin over the tensors. `loss` must read
// `params`, which is perturbed in place and restored. Relative error is
// |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport grad_check(const std::function<double()>& loss, std::vector<Tensor>& params,
                           const Gradients& analytic, const GradCheckOptions& options);

}  // namespace adr
