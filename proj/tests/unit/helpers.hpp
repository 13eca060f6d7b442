#pragma once

#include <string>
#include <vector>

#include "dcre/corpus.hpp"
#include "dcre/model.hpp"
#include "dcre/numerics.hpp"
#include "dcre/rng.hpp"

namespace dcre::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

/// Row-stochastic matrix with strictly positive entries.
inline Matrix random_stochastic(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += m(i, j) = 0.05 + rng.uniform();
    for (std::size_t j = 0; j < cols; ++j) m(i, j) /= s;
  }
  return m;
}

inline EncoderShape tiny_shape(int vocab = 12) {
  EncoderShape s;
  s.vocab_size = vocab;
  s.word_dim = 6;
  s.position_dim = 2;
  s.window = 3;
  s.filters = 8;
  s.max_dist = 10;
  return s;
}

/// A sentence of `len` random tokens with entities at e1/e2.
inline TokenizedSentence random_sentence(const std::string& id, int len, int e1, int e2, int relation,
                                         const EncoderShape& shape, Rng& rng) {
  TokenizedSentence ts;
  ts.id = id;
  ts.head_id = "h";
  ts.tail_id = "t";
  ts.relation = relation;
  ts.e1_pos = e1;
  ts.e2_pos = e2;
  for (int i = 0; i < len; ++i) {
    ts.word_ids.push_back(2 + static_cast<int>(rng.below(static_cast<std::size_t>(shape.vocab_size - 2))));
    ts.pf1.push_back(position_feature(i, e1, shape.max_dist));
    ts.pf2.push_back(position_feature(i, e2, shape.max_dist));
  }
  return ts;
}

/// Train-mode bags of 1..max_size random sentences with labels in [0, k).
inline std::vector<Bag> random_bags(std::size_t count, std::size_t k, const EncoderShape& shape, Rng& rng,
                                    std::size_t max_size = 4) {
  std::vector<Bag> bags(count);
  int next_id = 0;
  for (std::size_t b = 0; b < count; ++b) {
    Bag& bag = bags[b];
    bag.label = static_cast<int>(rng.below(k));
    bag.key = {"h" + std::to_string(b), "t" + std::to_string(b), bag.label};
    const std::size_t size = 1 + rng.below(max_size);
    for (std::size_t s = 0; s < size; ++s) {
      const int len = 5 + static_cast<int>(rng.below(6));
      const int e1 = static_cast<int>(rng.below(static_cast<std::size_t>(len)));
      const int e2 = static_cast<int>(rng.below(static_cast<std::size_t>(len)));
      auto ts = random_sentence("s" + std::to_string(next_id++), len, e1, e2, bag.label, shape, rng);
      ts.head_id = bag.key.head_id;
      ts.tail_id = bag.key.tail_id;
      bag.sentences.push_back(std::move(ts));
    }
  }
  return bags;
}

inline std::vector<Matrix> model_tensors_of(const ModelParams& p) {
  return {p.encoder.word_emb, p.encoder.pos_emb1, p.encoder.pos_emb2, p.encoder.conv_filter,
          p.encoder.conv_bias, p.relation,         p.relation_bias};
}

inline ModelParams with_tensors(ModelParams p, const std::vector<Matrix>& t) {
  p.encoder.word_emb = t[0];
  p.encoder.pos_emb1 = t[1];
  p.encoder.pos_emb2 = t[2];
  p.encoder.conv_filter = t[3];
  p.encoder.conv_bias = t[4];
  p.relation = t[5];
  p.relation_bias = t[6];
  return p;
}

inline std::vector<Matrix> gradient_tensors_of(const ModelGradients& g, const ModelParams& p) {
  return {g.encoder.word_emb.dense(p.encoder.word_emb.rows(), p.encoder.word_emb.cols()),
          g.encoder.pos_emb1.dense(p.encoder.pos_emb1.rows(), p.encoder.pos_emb1.cols()),
          g.encoder.pos_emb2.dense(p.encoder.pos_emb2.rows(), p.encoder.pos_emb2.cols()),
          g.encoder.conv_filter,
          g.encoder.conv_bias,
          g.relation,
          g.relation_bias};
}

}  // namespace dcre::testing
