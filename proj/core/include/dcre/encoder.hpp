#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "dcre/corpus.hpp"
#include "dcre/numerics.hpp"
#include "dcre/rng.hpp"

namespace dcre {

struct EncoderShape {
  int vocab_size = 0;
  int word_dim = 50;
  int position_dim = 5;
  int window = 3;
  int filters = 230;
  int max_dist = 30;

  int input_dim() const { return word_dim + 2 * position_dim; }
  int rep_dim() const { return 3 * filters; }
  int position_rows() const { return 2 * max_dist + 1; }
};

/// Word/position embedding tables and the convolution filter.
///
/// conv_filter is (window · input_dim) × filters: row t·input_dim + d holds
/// the weight of input feature d at offset t inside the w-gram.
struct EncoderParams {
  Matrix word_emb;
  Matrix pos_emb1;
  Matrix pos_emb2;
  Matrix conv_filter;
  Matrix conv_bias;  // 1 × filters
  int window = 3;

  int word_dim() const { return static_cast<int>(word_emb.cols()); }
  int position_dim() const { return static_cast<int>(pos_emb1.cols()); }
  int input_dim() const { return word_dim() + 2 * position_dim(); }
  int filters() const { return static_cast<int>(conv_filter.cols()); }
  int rep_dim() const { return 3 * filters(); }
};

/// Embeddings ~ U(-0.25, 0.25); filter Glorot-uniform; bias zero.
EncoderParams init_encoder(const EncoderShape& shape, Rng& rng);

/// Loads "count dim" + "word v1 .. vd" text vectors into matching vocab rows.
/// Returns the number of rows replaced.
std::size_t load_pretrained_embeddings(const std::filesystem::path& path, const WordVocab& vocab,
                                       EncoderParams& params);

/// Row i = [word_emb[w_i]; pos_emb1[pf1_i]; pos_emb2[pf2_i]].
Matrix embed(const TokenizedSentence& ts, const EncoderParams& params);

/// Everything the backward pass needs from one forward call.
struct EncoderCache {
  Matrix input;       // n_l × input_dim
  Matrix activation;  // n_l × filters, tanh(conv + bias)
  /// argmax[s][f] = row of the pooled maximum in segment s, or -1 if empty.
  std::array<std::vector<int>, 3> argmax;
  std::vector<double> mask;  // empty at inference
  int e1_pos = -1;
  int e2_pos = -1;
};

struct SentenceRep {
  std::vector<double> h;  // 3·filters: [segment 1 | segment 2 | segment 3]
  EncoderCache cache;
};

/// Half-open row ranges of the three pooling segments for a sentence of
/// length n: [0, lo], (lo, hi], (hi, n-1] with lo/hi the sorted entity positions.
std::array<std::pair<int, int>, 3> pooling_segments(int n, int e1_pos, int e2_pos);

/// Convolution (left zero padding of window-1 rows), tanh, piecewise max
/// pooling, then multiplication by `dropout_mask` when one is given.
SentenceRep pcnn_forward(const Matrix& x, const EncoderParams& params, int e1_pos, int e2_pos,
                         std::span<const double> dropout_mask = {});

/// Inverted dropout mask: each entry is 0 with probability `drop`, else 1/(1-drop).
std::vector<double> dropout_mask(std::size_t size, double drop, Rng& rng);

/// Gradients w.r.t. one forward call.
struct PcnnGrads {
  Matrix conv_filter;
  Matrix conv_bias;
  Matrix input;  // d loss / d X
};

PcnnGrads pcnn_backward(std::span<const double> grad_h, const EncoderCache& cache,
                        const EncoderParams& params);

/// Row-sparse gradient for an embedding table, kept in row order.
struct SparseRows {
  std::map<int, std::vector<double>> rows;

  void add(int row, std::span<const double> g, double scale = 1.0);
  void merge(const SparseRows& other, double scale = 1.0);
  /// Densifies into a matrix of the given shape.
  Matrix dense(std::size_t nrows, std::size_t ncols) const;
};

struct EncoderGradients {
  Matrix conv_filter;
  Matrix conv_bias;
  SparseRows word_emb;
  SparseRows pos_emb1;
  SparseRows pos_emb2;

  static EncoderGradients zeros_like(const EncoderParams& params);
  void merge(const EncoderGradients& other, double scale = 1.0);
};

/// embed + pcnn_forward.
SentenceRep encode(const TokenizedSentence& ts, const EncoderParams& params,
                   std::span<const double> dropout_mask = {});

/// pcnn_backward + scatter of d/dX into the embedding rows of `ts`.
void encode_backward(std::span<const double> grad_h, const SentenceRep& rep,
                     const TokenizedSentence& ts, const EncoderParams& params,
                     EncoderGradients& accum, double scale = 1.0);

void apply_sgd(EncoderParams& params, const EncoderGradients& grads, double lr);

}  // namespace dcre
