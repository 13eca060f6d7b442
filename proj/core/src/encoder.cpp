#include "dcre/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dcre/error.hpp"

namespace dcre {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

void check_index(int idx, std::size_t rows, const char* table) {
  if (idx < 0 || static_cast<std::size_t>(idx) >= rows) {
    throw ContractViolation(std::string("embed: index ") + std::to_string(idx) + " out of bounds for " +
                            table + " with " + std::to_string(rows) + " rows");
  }
}

}  // namespace

EncoderParams init_encoder(const EncoderShape& s, Rng& rng) {
  if (s.vocab_size < 2) throw ContractViolation("init_encoder: vocabulary must hold PAD and UNK");
  EncoderParams p;
  p.window = s.window;
  Rng emb = rng.split("word_emb");
  Rng pos1 = rng.split("pos_emb1");
  Rng pos2 = rng.split("pos_emb2");
  Rng conv = rng.split("conv");
  const auto rows_pos = static_cast<std::size_t>(s.position_rows());
  p.word_emb = uniform_matrix(static_cast<std::size_t>(s.vocab_size), static_cast<std::size_t>(s.word_dim), 0.25, emb);
  p.pos_emb1 = uniform_matrix(rows_pos, static_cast<std::size_t>(s.position_dim), 0.25, pos1);
  p.pos_emb2 = uniform_matrix(rows_pos, static_cast<std::size_t>(s.position_dim), 0.25, pos2);
  const auto fan_in = static_cast<std::size_t>(s.window * s.input_dim());
  const auto fan_out = static_cast<std::size_t>(s.filters);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  p.conv_filter = uniform_matrix(fan_in, fan_out, bound, conv);
  p.conv_bias = Matrix(1, fan_out);
  return p;
}

std::size_t load_pretrained_embeddings(const std::filesystem::path& path, const WordVocab& vocab,
                                       EncoderParams& params) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  std::size_t count = 0;
  std::size_t dim = 0;
  std::string header;
  std::getline(in, header);
  {
    std::istringstream hs(header);
    if (!(hs >> count >> dim)) throw DataError(path.string() + ":1: expected 'count dim' header");
  }
  if (dim != params.word_emb.cols()) {
    throw DataError(path.string() + ": vector dimension " + std::to_string(dim) +
                    " does not match word_dim " + std::to_string(params.word_emb.cols()));
  }
  std::size_t replaced = 0;
  std::string line;
  std::size_t lineno = 1;
  std::vector<double> v(dim);
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    for (auto& x : v) {
      if (!(ls >> x)) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(dim) + " values");
      }
    }
    const int id = vocab.id(word);
    if (id == WordVocab::kUnk && word != vocab.word(WordVocab::kUnk)) continue;
    std::copy(v.begin(), v.end(), params.word_emb.row(static_cast<std::size_t>(id)).begin());
    ++replaced;
  }
  return replaced;
}

Matrix embed(const TokenizedSentence& ts, const EncoderParams& p) {
  const std::size_t n = ts.word_ids.size();
  if (ts.pf1.size() != n || ts.pf2.size() != n) {
    throw ContractViolation("embed: word and position feature lengths differ");
  }
  const std::size_t dw = p.word_emb.cols();
  const std::size_t dp = p.pos_emb1.cols();
  Matrix x(n, dw + 2 * dp);
  for (std::size_t i = 0; i < n; ++i) {
    check_index(ts.word_ids[i], p.word_emb.rows(), "word_emb");
    check_index(ts.pf1[i], p.pos_emb1.rows(), "pos_emb1");
    check_index(ts.pf2[i], p.pos_emb2.rows(), "pos_emb2");
    auto row = x.row(i);
    auto w = p.word_emb.row(static_cast<std::size_t>(ts.word_ids[i]));
    auto a = p.pos_emb1.row(static_cast<std::size_t>(ts.pf1[i]));
    auto b = p.pos_emb2.row(static_cast<std::size_t>(ts.pf2[i]));
    std::copy(w.begin(), w.end(), row.begin());
    std::copy(a.begin(), a.end(), row.begin() + static_cast<long>(dw));
    std::copy(b.begin(), b.end(), row.begin() + static_cast<long>(dw + dp));
  }
  return x;
}

std::array<std::pair<int, int>, 3> pooling_segments(int n, int e1_pos, int e2_pos) {
  const int lo = std::min(e1_pos, e2_pos);
  const int hi = std::max(e1_pos, e2_pos);
  return {{{0, lo + 1}, {lo + 1, hi + 1}, {hi + 1, n}}};
}

SentenceRep pcnn_forward(const Matrix& x, const EncoderParams& p, int e1_pos, int e2_pos,
                         std::span<const double> dropout_mask) {
  const int n = static_cast<int>(x.rows());
  const int d = p.input_dim();
  const int nf = p.filters();
  const int w = p.window;
  if (n < 3) throw ContractViolation("pcnn_forward: sentence length must be >= 3");
  if (static_cast<int>(x.cols()) != d) {
    throw ContractViolation("pcnn_forward: input width " + std::to_string(x.cols()) +
                            " does not match embedding width " + std::to_string(d));
  }
  if (e1_pos < 0 || e1_pos >= n || e2_pos < 0 || e2_pos >= n) {
    throw ContractViolation("pcnn_forward: entity position outside sentence");
  }
  if (static_cast<int>(p.conv_filter.rows()) != w * d) {
    throw ContractViolation("pcnn_forward: filter shape " + shape_string(p.conv_filter) +
                            " does not match window*input_dim");
  }
  if (!dropout_mask.empty() && static_cast<int>(dropout_mask.size()) != 3 * nf) {
    throw ContractViolation("pcnn_forward: dropout mask length mismatch");
  }

  SentenceRep rep;
  EncoderCache& c = rep.cache;
  c.input = x;
  c.e1_pos = e1_pos;
  c.e2_pos = e2_pos;
  c.activation = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(nf));

  // m_i = W^T x_{i-w+1 : i}; rows before the sentence start are zero padding.
  const double* bias = p.conv_bias.values().data();
  for (int i = 0; i < n; ++i) {
    double* out = c.activation.row(static_cast<std::size_t>(i)).data();
    std::copy(bias, bias + nf, out);
    for (int t = 0; t < w; ++t) {
      const int src = i - w + 1 + t;
      if (src < 0) continue;
      const double* xr = x.row(static_cast<std::size_t>(src)).data();
      for (int k = 0; k < d; ++k) {
        const double xv = xr[k];
        if (xv == 0.0) continue;
        const double* wr = p.conv_filter.row(static_cast<std::size_t>(t * d + k)).data();
        for (int f = 0; f < nf; ++f) out[f] += xv * wr[f];
      }
    }
    for (int f = 0; f < nf; ++f) out[f] = std::tanh(out[f]);
  }

  rep.h.assign(static_cast<std::size_t>(3 * nf), 0.0);
  const auto segments = pooling_segments(n, e1_pos, e2_pos);
  for (int s = 0; s < 3; ++s) {
    auto& arg = c.argmax[static_cast<std::size_t>(s)];
    arg.assign(static_cast<std::size_t>(nf), -1);
    const auto [begin, end] = segments[static_cast<std::size_t>(s)];
    for (int f = 0; f < nf; ++f) {
      if (begin >= end) continue;  // empty segment pools to 0
      int best = begin;
      for (int i = begin + 1; i < end; ++i) {
        if (c.activation(static_cast<std::size_t>(i), static_cast<std::size_t>(f)) >
            c.activation(static_cast<std::size_t>(best), static_cast<std::size_t>(f))) {
          best = i;
        }
      }
      arg[static_cast<std::size_t>(f)] = best;
      rep.h[static_cast<std::size_t>(s * nf + f)] =
          c.activation(static_cast<std::size_t>(best), static_cast<std::size_t>(f));
    }
  }
  if (!dropout_mask.empty()) {
    c.mask.assign(dropout_mask.begin(), dropout_mask.end());
    for (std::size_t j = 0; j < rep.h.size(); ++j) rep.h[j] *= c.mask[j];
  }
  return rep;
}

std::vector<double> dropout_mask(std::size_t size, double drop, Rng& rng) {
  if (drop < 0.0 || drop >= 1.0) throw ContractViolation("dropout probability must lie in [0, 1)");
  const double keep_scale = 1.0 / (1.0 - drop);
  std::vector<double> mask(size);
  for (double& m : mask) m = rng.bernoulli(drop) ? 0.0 : keep_scale;
  return mask;
}

PcnnGrads pcnn_backward(std::span<const double> grad_h, const EncoderCache& c,
                        const EncoderParams& p) {
  const int n = static_cast<int>(c.input.rows());
  const int d = p.input_dim();
  const int nf = p.filters();
  const int w = p.window;
  if (static_cast<int>(grad_h.size()) != 3 * nf || static_cast<int>(c.activation.cols()) != nf ||
      static_cast<int>(c.input.cols()) != d || c.activation.rows() != c.input.rows()) {
    throw ContractViolation("pcnn_backward: cache does not match parameters (stale cache)");
  }
  PcnnGrads g;
  g.conv_filter = Matrix(p.conv_filter.rows(), p.conv_filter.cols());
  g.conv_bias = Matrix(1, static_cast<std::size_t>(nf));
  g.input = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));

  for (int s = 0; s < 3; ++s) {
    const auto& arg = c.argmax[static_cast<std::size_t>(s)];
    for (int f = 0; f < nf; ++f) {
      const int i = arg[static_cast<std::size_t>(f)];
      if (i < 0) continue;
      const auto j = static_cast<std::size_t>(s * nf + f);
      double gh = grad_h[j];
      if (!c.mask.empty()) gh *= c.mask[j];
      if (gh == 0.0) continue;
      const double a = c.activation(static_cast<std::size_t>(i), static_cast<std::size_t>(f));
      const double gpre = gh * (1.0 - a * a);
      g.conv_bias(0, static_cast<std::size_t>(f)) += gpre;
      for (int t = 0; t < w; ++t) {
        const int src = i - w + 1 + t;
        if (src < 0) continue;
        const double* xr = c.input.row(static_cast<std::size_t>(src)).data();
        double* gx = g.input.row(static_cast<std::size_t>(src)).data();
        for (int k = 0; k < d; ++k) {
          const auto wrow = static_cast<std::size_t>(t * d + k);
          g.conv_filter(wrow, static_cast<std::size_t>(f)) += xr[k] * gpre;
          gx[k] += p.conv_filter(wrow, static_cast<std::size_t>(f)) * gpre;
        }
      }
    }
  }
  return g;
}

void SparseRows::add(int row, std::span<const double> g, double scale) {
  auto [it, inserted] = rows.try_emplace(row, g.size(), 0.0);
  axpy(scale, g, it->second);
}

void SparseRows::merge(const SparseRows& other, double scale) {
  for (const auto& [row, g] : other.rows) add(row, g, scale);
}

Matrix SparseRows::dense(std::size_t nrows, std::size_t ncols) const {
  Matrix m(nrows, ncols);
  for (const auto& [row, g] : rows) {
    std::copy(g.begin(), g.end(), m.row(static_cast<std::size_t>(row)).begin());
  }
  return m;
}

EncoderGradients EncoderGradients::zeros_like(const EncoderParams& p) {
  EncoderGradients g;
  g.conv_filter = Matrix(p.conv_filter.rows(), p.conv_filter.cols());
  g.conv_bias = Matrix(p.conv_bias.rows(), p.conv_bias.cols());
  return g;
}

void EncoderGradients::merge(const EncoderGradients& other, double scale) {
  axpy(scale, other.conv_filter.values(), conv_filter.values());
  axpy(scale, other.conv_bias.values(), conv_bias.values());
  word_emb.merge(other.word_emb, scale);
  pos_emb1.merge(other.pos_emb1, scale);
  pos_emb2.merge(other.pos_emb2, scale);
}

SentenceRep encode(const TokenizedSentence& ts, const EncoderParams& params,
                   std::span<const double> mask) {
  return pcnn_forward(embed(ts, params), params, ts.e1_pos, ts.e2_pos, mask);
}

void encode_backward(std::span<const double> grad_h, const SentenceRep& rep,
                     const TokenizedSentence& ts, const EncoderParams& params,
                     EncoderGradients& accum, double scale) {
  const PcnnGrads g = pcnn_backward(grad_h, rep.cache, params);
  axpy(scale, g.conv_filter.values(), accum.conv_filter.values());
  axpy(scale, g.conv_bias.values(), accum.conv_bias.values());
  const std::size_t dw = params.word_emb.cols();
  const std::size_t dp = params.pos_emb1.cols();
  for (std::size_t i = 0; i < g.input.rows(); ++i) {
    auto row = g.input.row(i);
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) continue;
    accum.word_emb.add(ts.word_ids[i], row.subspan(0, dw), scale);
    accum.pos_emb1.add(ts.pf1[i], row.subspan(dw, dp), scale);
    accum.pos_emb2.add(ts.pf2[i], row.subspan(dw + dp, dp), scale);
  }
}

void apply_sgd(EncoderParams& p, const EncoderGradients& g, double lr) {
  sgd_update(p.conv_filter, g.conv_filter, lr);
  sgd_update(p.conv_bias, g.conv_bias, lr);
  auto sparse = [lr](Matrix& table, const SparseRows& rows) {
    for (const auto& [r, grad] : rows.rows) axpy(-lr, grad, table.row(static_cast<std::size_t>(r)));
  };
  sparse(p.word_emb, g.word_emb);
  sparse(p.pos_emb1, g.pos_emb1);
  sparse(p.pos_emb2, g.pos_emb2);
}

}  // namespace dcre
