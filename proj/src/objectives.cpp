#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adr/train.hpp"

namespace adr {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kProbClamp = 1e-7;

// Loss and dLoss/dz for the sigmoid head at logit z.
std::pair<double, double> bce_with_grad(double z, int label) {
  const double p = sigmoid(z);
  const double loss = bce_loss(p, label);
  const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
  return {loss, clamped ? 0.0 : p - static_cast<double>(label)};
}

}  // namespace

double bce_loss(double probability, int label) {
  const double p = std::clamp(probability, kProbClamp, 1.0 - kProbClamp);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double mtl_loss(double extraction_loss, double detection_loss, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  return lambda * extraction_loss + (1.0 - lambda) * detection_loss;
}

double classifier_objective(const ModelParams& params, const ClassifierExample& ex, Mode mode,
                            std::uint64_t seed, Gradients* grads, double scale) {
  const auto layout = params.layout();
  ForwardTrace trace;
  const auto out = forward(ex.ids, params, mode, seed, grads ? &trace : nullptr);
  const auto& w = params.at(layout.classifier_weight());
  const double z = w.col(0).dot(out.hidden.row(0)) + params.at(layout.classifier_bias())(0, 0);
  const auto [loss, dz] = bce_with_grad(z, ex.label);
  if (grads) {
    const double g = dz * scale;
    (*grads)[layout.classifier_weight()].col(0) += g * out.hidden.row(0).transpose();
    (*grads)[layout.classifier_bias()](0, 0) += g;
    MatrixXd d_hidden = MatrixXd::Zero(out.hidden.rows(), out.hidden.cols());
    d_hidden.row(0) = g * w.col(0).transpose();
    backward(trace, params, d_hidden, *grads);
  }
  return loss;
}

double tagging_objective(const ModelParams& params, const TaggingExample& ex, double lambda,
                         bool with_detection, Mode mode, std::uint64_t seed, Gradients* grads,
                         double scale) {
  const auto layout = params.layout();
  ForwardTrace trace;
  const auto out = forward(ex.ids, params, mode, seed, grads ? &trace : nullptr);
  const Eigen::Index n = out.hidden.rows() - 2;
  if (static_cast<std::size_t>(std::max<Eigen::Index>(n, 0)) != ex.tags.size())
    throw std::invalid_argument("tag count differs from token count");

  MatrixXd d_hidden;
  if (grads) d_hidden = MatrixXd::Zero(out.hidden.rows(), out.hidden.cols());

  const double extraction_weight = with_detection ? lambda : 1.0;
  double extraction = 0.0;
  if (n > 0) {
    const auto& w = params.at(layout.bio_weight());
    MatrixXd logits = out.hidden.middleRows(1, n) * w;
    logits.rowwise() += params.at(layout.bio_bias()).row(0);
    MatrixXd d_logits(n, logits.cols());
    for (Eigen::Index t = 0; t < n; ++t) {
      const VectorXd p = softmax(logits.row(t).transpose());
      const auto gold = static_cast<Eigen::Index>(ex.tags[static_cast<std::size_t>(t)]);
      extraction -= std::log(std::max(p(gold), 1e-300));
      d_logits.row(t) = p.transpose();
      d_logits(t, gold) -= 1.0;
    }
    extraction /= static_cast<double>(n);
    if (grads) {
      d_logits *= extraction_weight * scale / static_cast<double>(n);
      (*grads)[layout.bio_weight()].noalias() += out.hidden.middleRows(1, n).transpose() * d_logits;
      (*grads)[layout.bio_bias()].row(0) += d_logits.colwise().sum();
      d_hidden.middleRows(1, n) += d_logits * w.transpose();
    }
  }

  double loss = extraction;
  if (with_detection) {
    const auto& w = params.at(layout.classifier_weight());
    const double z = w.col(0).dot(out.hidden.row(0)) + params.at(layout.classifier_bias())(0, 0);
    const auto [detection, dz] = bce_with_grad(z, ex.detection_label);
    loss = mtl_loss(extraction, detection, lambda);
    if (grads) {
      const double g = (1.0 - lambda) * dz * scale;
      (*grads)[layout.classifier_weight()].col(0) += g * out.hidden.row(0).transpose();
      (*grads)[layout.classifier_bias()](0, 0) += g;
      d_hidden.row(0) += g * w.col(0).transpose();
    }
  }
  if (grads) backward(trace, params, d_hidden, *grads);
  return loss;
}

double concept_objective(const ModelParams& params, const ConceptExample& ex, Mode mode,
                         std::uint64_t seed, Gradients* grads, double scale) {
  const auto layout = params.layout();
  if (ex.concept_index >= params.config.n_concepts)
    throw std::invalid_argument("concept index outside the lexicon");
  ForwardTrace trace;
  const auto out = forward(ex.ids, params, mode, seed, grads ? &trace : nullptr);
  const VectorXd t_s = out.sequence_start();
  const VectorXd p = concept_probabilities(t_s, params);
  const auto gold = static_cast<Eigen::Index>(ex.concept_index);
  const double loss = -std::log(std::max(p(gold), 1e-300));
  if (grads) {
    VectorXd d_logits = p;
    d_logits(gold) -= 1.0;
    d_logits *= scale;
    const auto& w = params.at(layout.concept_weight());
    (*grads)[layout.concept_weight()].noalias() += t_s * d_logits.transpose();
    (*grads)[layout.concept_bias()].row(0) += d_logits.transpose();
    MatrixXd d_hidden = MatrixXd::Zero(out.hidden.rows(), out.hidden.cols());
    d_hidden.row(0) = (w * d_logits).transpose();
    backward(trace, params, d_hidden, *grads);
  }
  return loss;
}

}  // namespace adr
