#include "adr/encoder.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adr/rng.hpp"

namespace adr {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;

const char* const kLayerNames[] = {"ln1.gain", "ln1.bias", "attn.wq", "attn.bq", "attn.wk",
                                   "attn.bk",  "attn.wv",  "attn.bv", "attn.wo", "attn.bo",
                                   "ln2.gain", "ln2.bias", "ffn.w1",  "ffn.b1",  "ffn.w2",
                                   "ffn.b2"};

void layer_norm(const MatrixXd& x, const MatrixXd& gain, const MatrixXd& bias, MatrixXd& y,
                MatrixXd& x_hat, VectorXd& rstd) {
  const auto n = x.cols();
  x_hat.resize(x.rows(), n);
  rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    rstd(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    x_hat.row(r) = (x.row(r).array() - mean) * rstd(r);
  }
  y = x_hat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
}

MatrixXd layer_norm_backward(const MatrixXd& dy, const MatrixXd& x_hat, const VectorXd& rstd,
                             const MatrixXd& gain, MatrixXd& d_gain, MatrixXd& d_bias) {
  d_gain.row(0) += (dy.array() * x_hat.array()).colwise().sum().matrix();
  d_bias.row(0) += dy.colwise().sum();
  const MatrixXd d_hat = dy.array().rowwise() * gain.row(0).array();
  MatrixXd dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = d_hat.row(r).mean();
    const double mean_dx = (d_hat.row(r).array() * x_hat.row(r).array()).mean();
    dx.row(r) = rstd(r) * (d_hat.row(r).array() - mean_d - x_hat.row(r).array() * mean_dx);
  }
  return dx;
}

MatrixXd affine(const MatrixXd& x, const MatrixXd& w, const MatrixXd& b) {
  MatrixXd y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

// dY -> accumulates dW, db and returns dX.
MatrixXd affine_backward(const MatrixXd& x, const MatrixXd& w, const MatrixXd& dy, MatrixXd& dw,
                         MatrixXd& db) {
  dw.noalias() += x.transpose() * dy;
  db.row(0) += dy.colwise().sum();
  return dy * w.transpose();
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) + x * pdf;
}

void softmax_rows(MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
    throw std::invalid_argument("d_model must be a positive multiple of n_heads");
  if (n_layers == 0) throw std::invalid_argument("n_layers must be positive");
  if (ffn_dim == 0) throw std::invalid_argument("ffn_dim must be positive");
  if (max_len < 2) throw std::invalid_argument("max_len must be at least 2");
  if (vocab_size < kBaseVocabSize) throw std::invalid_argument("vocab_size must be at least 260");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0,1)");
  if (n_bio_labels != 3) throw std::invalid_argument("n_bio_labels must be 3");
  if (n_concepts == 0) throw std::invalid_argument("n_concepts must be at least 1");
}

ModelParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  const auto h = static_cast<Eigen::Index>(config.d_model);
  const auto f = static_cast<Eigen::Index>(config.ffn_dim);
  Rng rng(seed);
  auto normal = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
    MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, kInitStd);
    p.tensors.push_back({std::move(name), std::move(m), true});
  };
  auto constant = [&](std::string name, Eigen::Index cols, double value) {
    p.tensors.push_back({std::move(name), MatrixXd::Constant(1, cols, value), false});
  };

  normal("embed.token", static_cast<Eigen::Index>(config.vocab_size), h);
  normal("embed.position", static_cast<Eigen::Index>(config.max_len), h);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    constant(prefix + kLayerNames[0], h, 1.0);
    constant(prefix + kLayerNames[1], h, 0.0);
    for (int proj = 0; proj < 4; ++proj) {
      normal(prefix + kLayerNames[2 + 2 * proj], h, h);
      constant(prefix + kLayerNames[3 + 2 * proj], h, 0.0);
    }
    constant(prefix + kLayerNames[10], h, 1.0);
    constant(prefix + kLayerNames[11], h, 0.0);
    normal(prefix + kLayerNames[12], h, f);
    constant(prefix + kLayerNames[13], f, 0.0);
    normal(prefix + kLayerNames[14], f, h);
    constant(prefix + kLayerNames[15], h, 0.0);
  }
  constant("final_ln.gain", h, 1.0);
  constant("final_ln.bias", h, 0.0);
  normal("head.classifier.w", h, 1);
  constant("head.classifier.b", 1, 0.0);
  normal("head.bio.w", h, static_cast<Eigen::Index>(config.n_bio_labels));
  constant("head.bio.b", static_cast<Eigen::Index>(config.n_bio_labels), 0.0);
  normal("head.concept.w", h, static_cast<Eigen::Index>(config.n_concepts));
  constant("head.concept.b", static_cast<Eigen::Index>(config.n_concepts), 0.0);
  return p;
}

Gradients zero_gradients(const ModelParams& params) {
  Gradients g;
  g.reserve(params.tensors.size());
  for (const auto& t : params.tensors) g.push_back(MatrixXd::Zero(t.value.rows(), t.value.cols()));
  return g;
}

EncoderOutput forward(const TokenizedTweet& tokens, const ModelParams& params, Mode mode,
                      std::uint64_t seed, ForwardTrace* trace) {
  return forward(std::span<const int>(tokens.ids), params, mode, seed, trace);
}

EncoderOutput forward(std::span<const int> ids, const ModelParams& params, Mode mode,
                      std::uint64_t seed, ForwardTrace* trace) {
  const auto& cfg = params.config;
  const auto layout = params.layout();
  if (ids.empty()) throw std::out_of_range("empty token sequence");
  if (ids.size() > cfg.max_len)
    throw std::out_of_range("sequence of " + std::to_string(ids.size()) +
                            " tokens exceeds max_len " + std::to_string(cfg.max_len));
  const auto T = static_cast<Eigen::Index>(ids.size());
  const auto h = static_cast<Eigen::Index>(cfg.d_model);
  const auto heads = static_cast<Eigen::Index>(cfg.n_heads);
  const Eigen::Index dh = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr.ids.assign(ids.begin(), ids.end());
  tr.layers.assign(cfg.n_layers, {});

  MatrixXd x(T, h);
  const auto& tok = params.at(ParamLayout::token_embedding());
  const auto& pos = params.at(ParamLayout::position_embedding());
  for (Eigen::Index t = 0; t < T; ++t) {
    const int id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size)
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(cfg.vocab_size));
    x.row(t) = tok.row(id) + pos.row(t);
  }

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    auto& L = tr.layers[l];
    auto P = [&](ParamLayout::LayerSlot s) -> const MatrixXd& { return params.at(layout.layer(l, s)); };
    L.input = x;
    layer_norm(x, P(ParamLayout::kLn1Gain), P(ParamLayout::kLn1Bias), L.ln1_out, L.ln1_hat,
               L.ln1_rstd);
    L.q = affine(L.ln1_out, P(ParamLayout::kWq), P(ParamLayout::kBq));
    L.k = affine(L.ln1_out, P(ParamLayout::kWk), P(ParamLayout::kBk));
    L.v = affine(L.ln1_out, P(ParamLayout::kWv), P(ParamLayout::kBv));
    L.context.resize(T, h);
    L.attention.resize(static_cast<std::size_t>(heads));
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      MatrixXd s = L.q.middleCols(hd * dh, dh) * L.k.middleCols(hd * dh, dh).transpose() * scale;
      softmax_rows(s);
      L.context.middleCols(hd * dh, dh) = s * L.v.middleCols(hd * dh, dh);
      L.attention[static_cast<std::size_t>(hd)] = std::move(s);
    }
    L.mid = x + affine(L.context, P(ParamLayout::kWo), P(ParamLayout::kBo));
    layer_norm(L.mid, P(ParamLayout::kLn2Gain), P(ParamLayout::kLn2Bias), L.ln2_out, L.ln2_hat,
               L.ln2_rstd);
    L.pre_act = affine(L.ln2_out, P(ParamLayout::kW1), P(ParamLayout::kB1));
    L.act = L.pre_act.unaryExpr([](double v) { return gelu(v); });
    x = L.mid + affine(L.act, P(ParamLayout::kW2), P(ParamLayout::kB2));
  }

  tr.final_in = x;
  EncoderOutput out;
  layer_norm(x, params.at(layout.final_gain()), params.at(layout.final_bias()), out.hidden,
             tr.final_hat, tr.final_rstd);

  tr.dropout_scale.resize(0, 0);
  if (mode == Mode::kTrain && cfg.dropout > 0.0) {
    Rng rng(seed);
    const double keep = 1.0 - cfg.dropout;
    tr.dropout_scale.resize(T, h);
    for (Eigen::Index t = 0; t < T; ++t)
      for (Eigen::Index c = 0; c < h; ++c)
        tr.dropout_scale(t, c) = rng.uniform() < cfg.dropout ? 0.0 : 1.0 / keep;
    out.hidden.array() *= tr.dropout_scale.array();
  }
  return out;
}

void backward(const ForwardTrace& tr, const ModelParams& params, const MatrixXd& d_hidden,
              Gradients& grads) {
  const auto& cfg = params.config;
  const auto layout = params.layout();
  const auto h = static_cast<Eigen::Index>(cfg.d_model);
  const auto heads = static_cast<Eigen::Index>(cfg.n_heads);
  const Eigen::Index dh = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  MatrixXd d_normed = d_hidden;
  if (tr.dropout_scale.size() > 0) d_normed.array() *= tr.dropout_scale.array();
  MatrixXd dx = layer_norm_backward(d_normed, tr.final_hat, tr.final_rstd,
                                    params.at(layout.final_gain()), grads[layout.final_gain()],
                                    grads[layout.final_bias()]);

  for (std::size_t li = cfg.n_layers; li-- > 0;) {
    const auto& L = tr.layers[li];
    auto P = [&](ParamLayout::LayerSlot s) -> const MatrixXd& { return params.at(layout.layer(li, s)); };
    auto G = [&](ParamLayout::LayerSlot s) -> MatrixXd& { return grads[layout.layer(li, s)]; };

    // feed-forward block
    MatrixXd d_act = affine_backward(L.act, P(ParamLayout::kW2), dx, G(ParamLayout::kW2), G(ParamLayout::kB2));
    const MatrixXd d_pre = d_act.array() * L.pre_act.unaryExpr([](double v) { return gelu_grad(v); }).array();
    const MatrixXd d_ln2 = affine_backward(L.ln2_out, P(ParamLayout::kW1), d_pre, G(ParamLayout::kW1), G(ParamLayout::kB1));
    MatrixXd d_mid = dx + layer_norm_backward(d_ln2, L.ln2_hat, L.ln2_rstd, P(ParamLayout::kLn2Gain),
                                              G(ParamLayout::kLn2Gain), G(ParamLayout::kLn2Bias));

    // attention block
    const MatrixXd d_ctx = affine_backward(L.context, P(ParamLayout::kWo), d_mid, G(ParamLayout::kWo), G(ParamLayout::kBo));
    MatrixXd dq(L.q.rows(), h), dk(L.k.rows(), h), dv(L.v.rows(), h);
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      const MatrixXd& a = L.attention[static_cast<std::size_t>(hd)];
      const auto dc = d_ctx.middleCols(hd * dh, dh);
      const MatrixXd da = dc * L.v.middleCols(hd * dh, dh).transpose();
      dv.middleCols(hd * dh, dh) = a.transpose() * dc;
      const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      const MatrixXd ds = a.array() * (da.colwise() - row_dot).array();
      dq.middleCols(hd * dh, dh) = ds * L.k.middleCols(hd * dh, dh) * scale;
      dk.middleCols(hd * dh, dh) = ds.transpose() * L.q.middleCols(hd * dh, dh) * scale;
    }
    MatrixXd d_ln1 = affine_backward(L.ln1_out, P(ParamLayout::kWq), dq, G(ParamLayout::kWq), G(ParamLayout::kBq));
    d_ln1 += affine_backward(L.ln1_out, P(ParamLayout::kWk), dk, G(ParamLayout::kWk), G(ParamLayout::kBk));
    d_ln1 += affine_backward(L.ln1_out, P(ParamLayout::kWv), dv, G(ParamLayout::kWv), G(ParamLayout::kBv));
    dx = d_mid + layer_norm_backward(d_ln1, L.ln1_hat, L.ln1_rstd, P(ParamLayout::kLn1Gain),
                                     G(ParamLayout::kLn1Gain), G(ParamLayout::kLn1Bias));
  }

  auto& d_tok = grads[ParamLayout::token_embedding()];
  auto& d_pos = grads[ParamLayout::position_embedding()];
  for (Eigen::Index t = 0; t < dx.rows(); ++t) {
    d_tok.row(tr.ids[static_cast<std::size_t>(t)]) += dx.row(t);
    d_pos.row(t) += dx.row(t);
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

VectorXd softmax(const VectorXd& logits) {
  VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

double classify_tweet(const VectorXd& t_s, const ModelParams& params) {
  const auto layout = params.layout();
  const double z = params.at(layout.classifier_weight()).col(0).dot(t_s) +
                   params.at(layout.classifier_bias())(0, 0);
  return sigmoid(z);
}

std::vector<TagDistribution> tag_tokens(const EncoderOutput& out, const ModelParams& params) {
  const auto layout = params.layout();
  std::vector<TagDistribution> tags;
  const Eigen::Index n = out.hidden.rows() - 2;
  if (n <= 0) return tags;
  const MatrixXd logits = affine(out.hidden.middleRows(1, n), params.at(layout.bio_weight()),
                                 params.at(layout.bio_bias()));
  for (Eigen::Index t = 0; t < n; ++t) {
    const VectorXd p = softmax(logits.row(t).transpose());
    tags.push_back({p(0), p(1), p(2)});
  }
  return tags;
}

VectorXd concept_probabilities(const VectorXd& t_s, const ModelParams& params) {
  const auto layout = params.layout();
  const VectorXd logits = params.at(layout.concept_weight()).transpose() * t_s +
                          params.at(layout.concept_bias()).row(0).transpose();
  return softmax(logits);
}

VectorXd normalize_mention(const std::string& mention_text, const ModelParams& params,
                           const Vocab& vocab, const ResourceTables& tables) {
  if (params.config.n_concepts == 0) throw std::invalid_argument("no concepts to normalize to");
  if (mention_text.empty()) throw std::invalid_argument("empty mention text");
  const auto normalized = normalize({"mention", mention_text}, tables);
  const auto tokens = encode(normalized.text, vocab, params.config.max_len);
  const auto out = forward(tokens, params, Mode::kEval, 0);
  return concept_probabilities(out.sequence_start(), params);
}

}  // namespace adr
