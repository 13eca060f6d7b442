#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dcre/encoder.hpp"

namespace dcre {

/// Encoder plus the relation matrix L (k × d_s) and output bias (1 × k).
/// L is shared by the noise detector, the relation-space projection and the
/// classifier: logits(h) = L·h + bias.
struct ModelParams {
  EncoderParams encoder;
  Matrix relation;
  Matrix relation_bias;

  std::size_t num_relations() const { return relation.rows(); }
};

ModelParams init_model(const EncoderShape& shape, std::size_t num_relations, Rng& rng);

std::vector<double> logits(const ModelParams& params, std::span<const double> h);

struct ModelGradients {
  EncoderGradients encoder;
  Matrix relation;
  Matrix relation_bias;

  static ModelGradients zeros_like(const ModelParams& params);
  void merge(const ModelGradients& other, double scale = 1.0);
};

void apply_sgd(ModelParams& params, const ModelGradients& grads, double lr);

/// Probabilities below this are clamped before taking the log.
inline constexpr double kLogClamp = 1e-12;

/// weight · (−log p(label | h)). Adds the classifier gradient into `grads`
/// and returns d loss / d h in `grad_h`.
double softmax_cross_entropy(const ModelParams& params, std::span<const double> h, int label,
                             double weight, ModelGradients& grads, std::vector<double>& grad_h);

}  // namespace dcre
