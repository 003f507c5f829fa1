#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adr/preprocess.hpp"
#include "adr/tokenize.hpp"

namespace adr {

struct EncoderConfig {
  std::size_t vocab_size = kBaseVocabSize;
  std::size_t d_model = 128;  // 768 in the full-size model
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t ffn_dim = 512;
  std::size_t max_len = kDefaultMaxLen;
  double dropout = 0.2;
  std::size_t n_bio_labels = 3;
  std::size_t n_concepts = 1;

  // Throws std::invalid_argument.
  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  bool decayed = false;  // receives decoupled weight decay
};

// Position of every tensor inside ModelParams::tensors.
struct ParamLayout {
  static constexpr std::size_t kPerLayer = 16;
  enum LayerSlot : std::size_t {
    kLn1Gain, kLn1Bias, kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo,
    kLn2Gain, kLn2Bias, kW1, kB1, kW2, kB2,
  };

  std::size_t n_layers = 0;

  static constexpr std::size_t token_embedding() { return 0; }
  static constexpr std::size_t position_embedding() { return 1; }
  std::size_t layer(std::size_t l, LayerSlot slot) const { return 2 + l * kPerLayer + slot; }
  std::size_t final_gain() const { return 2 + n_layers * kPerLayer; }
  std::size_t final_bias() const { return final_gain() + 1; }
  std::size_t classifier_weight() const { return final_gain() + 2; }  // h x 1
  std::size_t classifier_bias() const { return final_gain() + 3; }    // 1 x 1
  std::size_t bio_weight() const { return final_gain() + 4; }         // h x 3
  std::size_t bio_bias() const { return final_gain() + 5; }           // 1 x 3
  std::size_t concept_weight() const { return final_gain() + 6; }     // h x K
  std::size_t concept_bias() const { return final_gain() + 7; }       // 1 x K
  std::size_t count() const { return final_gain() + 8; }
};

struct ModelParams {
  EncoderConfig config;
  std::vector<Tensor> tensors;

  ParamLayout layout() const { return {config.n_layers}; }
  const Eigen::MatrixXd& at(std::size_t i) const { return tensors[i].value; }
  Eigen::MatrixXd& at(std::size_t i) { return tensors[i].value; }
};

using Gradients = std::vector<Eigen::MatrixXd>;

// normal(0, 0.02) matrices, zero biases and layer-norm shifts, unit
// layer-norm scales.
ModelParams init_params(const EncoderConfig& config, std::uint64_t seed);
Gradients zero_gradients(const ModelParams& params);

enum class Mode { kTrain, kEval };

struct EncoderOutput {
  Eigen::MatrixXd hidden;  // tokens x d_model, after the final layer norm (and dropout)
  Eigen::VectorXd sequence_start() const { return hidden.row(0).transpose(); }
};

// Intermediates retained by forward() for backward().
struct ForwardTrace {
  struct Layer {
    Eigen::MatrixXd input, ln1_hat, ln1_out, q, k, v, context, mid, ln2_hat, ln2_out, pre_act, act;
    Eigen::VectorXd ln1_rstd, ln2_rstd;
    std::vector<Eigen::MatrixXd> attention;  // per head, tokens x tokens
  };
  std::vector<int> ids;
  std::vector<Layer> layers;
  Eigen::MatrixXd final_in, final_hat;
  Eigen::VectorXd final_rstd;
  Eigen::MatrixXd dropout_scale;  // empty in eval mode
};

// Pre-layer-norm transformer encoder. In train mode, dropout with rate
// config.dropout is applied to the final hidden states (so to t_<s> before
// the classifier head); the mask is a pure function of `seed`.
// Throws std::out_of_range for token ids outside the vocabulary or inputs
// longer than max_len.
EncoderOutput forward(std::span<const int> ids, const ModelParams& params, Mode mode,
                      std::uint64_t seed, ForwardTrace* trace = nullptr);
EncoderOutput forward(const TokenizedTweet& tokens, const ModelParams& params, Mode mode,
                      std::uint64_t seed, ForwardTrace* trace = nullptr);

// Accumulates dLoss/dparams given dLoss/dhidden.
void backward(const ForwardTrace& trace, const ModelParams& params,
              const Eigen::MatrixXd& d_hidden, Gradients& grads);

double sigmoid(double z);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Tweet-level ADR probability sigmoid(W . t_s + b).
double classify_tweet(const Eigen::VectorXd& t_s, const ModelParams& params);
inline int decide(double probability) { return probability >= 0.5 ? 1 : 0; }

using TagDistribution = std::array<double, 3>;  // O, B-ADR, I-ADR

// Softmax over the BIO head for every non-special position.
std::vector<TagDistribution> tag_tokens(const EncoderOutput& out, const ModelParams& params);

Eigen::VectorXd concept_probabilities(const Eigen::VectorXd& t_s, const ModelParams& params);

// Normalizes and encodes the mention on its own, runs the encoder in eval
// mode and returns the distribution over the K concepts.
Eigen::VectorXd normalize_mention(const std::string& mention_text, const ModelParams& params,
                                  const Vocab& vocab, const ResourceTables& tables);

}  // namespace adr
