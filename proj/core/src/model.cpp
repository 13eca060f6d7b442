#include "dcre/model.hpp"

#include <algorithm>
#include <cmath>

#include "dcre/error.hpp"

namespace dcre {

ModelParams init_model(const EncoderShape& shape, std::size_t num_relations, Rng& rng) {
  if (num_relations < 2) throw ContractViolation("init_model: need at least two relations");
  ModelParams p;
  Rng enc = rng.split("encoder");
  p.encoder = init_encoder(shape, enc);
  Rng rel = rng.split("relation");
  const auto ds = static_cast<std::size_t>(shape.rep_dim());
  const double bound = std::sqrt(6.0 / static_cast<double>(ds + num_relations));
  p.relation = Matrix(num_relations, ds);
  for (double& v : p.relation.values()) v = rel.uniform(-bound, bound);
  p.relation_bias = Matrix(1, num_relations);
  return p;
}

std::vector<double> logits(const ModelParams& p, std::span<const double> h) {
  if (h.size() != p.relation.cols()) {
    throw ContractViolation("logits: representation width " + std::to_string(h.size()) +
                            " does not match relation matrix " + shape_string(p.relation));
  }
  std::vector<double> out(p.relation.rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = dot(p.relation.row(r), h) + p.relation_bias(0, r);
  return out;
}

ModelGradients ModelGradients::zeros_like(const ModelParams& p) {
  ModelGradients g;
  g.encoder = EncoderGradients::zeros_like(p.encoder);
  g.relation = Matrix(p.relation.rows(), p.relation.cols());
  g.relation_bias = Matrix(p.relation_bias.rows(), p.relation_bias.cols());
  return g;
}

void ModelGradients::merge(const ModelGradients& other, double scale) {
  encoder.merge(other.encoder, scale);
  axpy(scale, other.relation.values(), relation.values());
  axpy(scale, other.relation_bias.values(), relation_bias.values());
}

void apply_sgd(ModelParams& p, const ModelGradients& g, double lr) {
  apply_sgd(p.encoder, g.encoder, lr);
  sgd_update(p.relation, g.relation, lr);
  sgd_update(p.relation_bias, g.relation_bias, lr);
}

double softmax_cross_entropy(const ModelParams& p, std::span<const double> h, int label,
                             double weight, ModelGradients& grads, std::vector<double>& grad_h) {
  if (label < 0 || static_cast<std::size_t>(label) >= p.relation.rows()) {
    throw ContractViolation("softmax_cross_entropy: label " + std::to_string(label) + " out of range");
  }
  const auto probs = softmax(logits(p, h));
  const auto y = static_cast<std::size_t>(label);
  const double loss = -weight * std::log(std::max(probs[y], kLogClamp));
  grad_h.assign(h.size(), 0.0);
  for (std::size_t r = 0; r < probs.size(); ++r) {
    const double g = weight * (probs[r] - (r == y ? 1.0 : 0.0));
    if (g == 0.0) continue;
    grads.relation_bias(0, r) += g;
    axpy(g, h, grads.relation.row(r));
    axpy(g, p.relation.row(r), grad_h);
  }
  return loss;
}

}  // namespace dcre
