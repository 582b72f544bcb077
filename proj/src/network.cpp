// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace xrlat {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

using Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

// ---------------------------------------------------------------------------
// Primitive layers
// ---------------------------------------------------------------------------

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache& cache) {
  const Index n = x.rows();
  const double h = static_cast<double>(x.cols());
  cache.xhat.resize(n, x.cols());
  cache.inv_std.resize(n);
  for (Index r = 0; r < n; ++r) {
    const double mean = x.row(r).sum() / h;
    const double var = (x.row(r).array() - mean).square().sum() / h;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std(r) = inv;
    cache.xhat.row(r) = (x.row(r).array() - mean) * inv;
  }
  Matrix y = cache.xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain, const LayerNormCache& cache, Matrix& dgain,
                           Matrix& dbias) {
  dbias += dy.colwise().sum();
  dgain += (dy.array() * cache.xhat.array()).matrix().colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const double h = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / h;
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / h;
    dx.row(r) = cache.inv_std(r) * (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

double gelu(double u) { return 0.5 * u * (1.0 + std::tanh(kGeluScale * (u + kGeluCubic * u * u * u))); }

double gelu_grad(double u) {
  const double t = std::tanh(kGeluScale * (u + kGeluCubic * u * u * u));
  return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * u * u);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix dropout_mask(Index rows, Index cols, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? scale : 0.0;
  return m;
}

// Row-wise softmax over the columns with allowed[c] != 0; other columns get 0.
void masked_softmax_rows(Matrix& scores, const std::vector<std::uint8_t>& allowed) {
  for (Index r = 0; r < scores.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index c = 0; c < scores.cols(); ++c) {
      if (allowed[static_cast<std::size_t>(c)]) mx = std::max(mx, scores(r, c));
    }
    double z = 0.0;
    for (Index c = 0; c < scores.cols(); ++c) {
      const double e = allowed[static_cast<std::size_t>(c)] ? std::exp(scores(r, c) - mx) : 0.0;
      scores(r, c) = e;
      z += e;
    }
    scores.row(r) /= z;
  }
}

void softmax_rows(Matrix& scores) {
  for (Index r = 0; r < scores.rows(); ++r) {
    const double mx = scores.row(r).maxCoeff();
    scores.row(r) = (scores.row(r).array() - mx).exp();
    scores.row(r) /= scores.row(r).sum();
  }
}

// dS = P o (dP - rowsum(P o dP))
Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs) {
  Matrix ds = probs.array() * dprobs.array();
  const Eigen::VectorXd dot = ds.rowwise().sum();
  ds -= (probs.array().colwise() * dot.array()).matrix();
  return ds;
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

struct BlockCache {
  LayerNormCache ln1;
  Matrix a, q, k, v, probs, ctx, drop;
  LayerNormCache ln2;
  Matrix b, u, g;
};

struct ChunkCache {
  Matrix drop_emb;
  std::vector<BlockCache> blocks;
  std::vector<std::uint8_t> keys;
};

struct EncoderCache {
  std::vector<ChunkCache> chunks;
};

void validate_document(const ChunkedDocument& doc, const EncoderParams& params) {
  if (doc.chunk_len < 1 || static_cast<std::size_t>(doc.chunk_len) > params.max_chunk_len()) {
    throw ShapeError("chunk length " + std::to_string(doc.chunk_len) + " exceeds the positional table (" +
                     std::to_string(params.max_chunk_len()) + ")");
  }
  if (doc.ids.size() != static_cast<std::size_t>(doc.chunk_len) * static_cast<std::size_t>(doc.n_chunks) ||
      doc.flags.size() != doc.ids.size()) {
    throw ShapeError("chunked document has inconsistent length");
  }
  for (TokenId id : doc.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_size()) {
      throw ShapeError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                       std::to_string(params.vocab_size()));
    }
  }
}

Matrix forward_chunk(const ChunkedDocument& doc, int chunk_index, const EncoderParams& params,
                     const ForwardOptions& options, std::mt19937_64& rng, ChunkCache* cache) {
  const auto c = static_cast<Index>(doc.chunk_len);
  const Index h = static_cast<Index>(params.hidden());
  const std::size_t base = static_cast<std::size_t>(chunk_index) * static_cast<std::size_t>(doc.chunk_len);
  const bool drop = options.training && options.dropout > 0.0;

  Matrix x(c, h);
  for (Index i = 0; i < c; ++i) {
    x.row(i) = params.emb.row(doc.ids[base + static_cast<std::size_t>(i)]) + params.pos.row(i);
  }
  if (drop) {
    Matrix m = dropout_mask(c, h, options.dropout, rng);
    x.array() *= m.array();
    if (cache) cache->drop_emb = std::move(m);
  }
  if (params.blocks.empty()) return x;

  std::vector<std::uint8_t> keys(doc.flags.begin() + static_cast<std::ptrdiff_t>(base),
                                 doc.flags.begin() + static_cast<std::ptrdiff_t>(base) + c);
  if (std::none_of(keys.begin(), keys.end(), [](std::uint8_t f) { return f != 0; })) {
    std::fill(keys.begin(), keys.end(), std::uint8_t{1});  // all-padding chunk: outputs are never read
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(h));

  for (const BlockParams& blk : params.blocks) {
    BlockCache bc;
    bc.a = layer_norm(x, blk.ln1_gain, blk.ln1_bias, bc.ln1);
    bc.q = bc.a * blk.w_q;
    bc.k = bc.a * blk.w_k;
    bc.v = bc.a * blk.w_v;
    bc.probs = (bc.q * bc.k.transpose()) * scale;
    masked_softmax_rows(bc.probs, keys);
    bc.ctx = bc.probs * bc.v;
    Matrix o = bc.ctx * blk.w_o;
    if (drop) {
      bc.drop = dropout_mask(c, h, options.dropout, rng);
      o.array() *= bc.drop.array();
    }
    Matrix x1 = x + o;
    bc.b = layer_norm(x1, blk.ln2_gain, blk.ln2_bias, bc.ln2);
    bc.u = bc.b * blk.w_ff1;
    bc.g = bc.u.unaryExpr([](double u) { return gelu(u); });
    x = x1 + bc.g * blk.w_ff2;
    if (cache) cache->blocks.push_back(std::move(bc));
  }
  if (cache) cache->keys = std::move(keys);
  return x;
}

void backward_chunk(const ChunkedDocument& doc, int chunk_index, const EncoderParams& params, const ChunkCache& cache,
                    Matrix dx, EncoderParams& grads) {
  const Index h = static_cast<Index>(params.hidden());
  const double scale = 1.0 / std::sqrt(static_cast<double>(h));

  for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
    const BlockParams& blk = params.blocks[bi];
    BlockParams& gb = grads.blocks[bi];
    const BlockCache& bc = cache.blocks[bi];

    // x_out = x1 + gelu(LN2(x1) W1) W2
    gb.w_ff2.noalias() += bc.g.transpose() * dx;
    Matrix du = (dx * blk.w_ff2.transpose()).array() * bc.u.unaryExpr([](double u) { return gelu_grad(u); }).array();
    gb.w_ff1.noalias() += bc.b.transpose() * du;
    const Matrix db = du * blk.w_ff1.transpose();
    Matrix dx1 = dx + layer_norm_backward(db, blk.ln2_gain, bc.ln2, gb.ln2_gain, gb.ln2_bias);

    // x1 = x_in + drop o (softmax(q k^T s) v) W_o
    Matrix d_o = dx1;
    if (bc.drop.size() > 0) d_o.array() *= bc.drop.array();
    gb.w_o.noalias() += bc.ctx.transpose() * d_o;
    const Matrix dctx = d_o * blk.w_o.transpose();
    const Matrix dprobs = dctx * bc.v.transpose();
    const Matrix dv = bc.probs.transpose() * dctx;
    const Matrix ds = softmax_backward(bc.probs, dprobs) * scale;
    const Matrix dq = ds * bc.k;
    const Matrix dk = ds.transpose() * bc.q;
    gb.w_q.noalias() += bc.a.transpose() * dq;
    gb.w_k.noalias() += bc.a.transpose() * dk;
    gb.w_v.noalias() += bc.a.transpose() * dv;
    const Matrix da = dq * blk.w_q.transpose() + dk * blk.w_k.transpose() + dv * blk.w_v.transpose();
    dx = dx1 + layer_norm_backward(da, blk.ln1_gain, bc.ln1, gb.ln1_gain, gb.ln1_bias);
  }

  if (cache.drop_emb.size() > 0) dx.array() *= cache.drop_emb.array();
  const std::size_t base = static_cast<std::size_t>(chunk_index) * static_cast<std::size_t>(doc.chunk_len);
  for (Index i = 0; i < dx.rows(); ++i) {
    grads.emb.row(doc.ids[base + static_cast<std::size_t>(i)]) += dx.row(i);
    grads.pos.row(i) += dx.row(i);
  }
}

Matrix encoder_forward(const ChunkedDocument& doc, const EncoderParams& params, const ForwardOptions& options,
                       EncoderCache* cache) {
  validate_document(doc, params);
  std::mt19937_64 rng(options.dropout_seed);
  const Index c = doc.chunk_len;
  Matrix hidden(static_cast<Index>(doc.total_len()), static_cast<Index>(params.hidden()));
  if (cache) cache->chunks.assign(static_cast<std::size_t>(doc.n_chunks), {});
  for (int s = 0; s < doc.n_chunks; ++s) {
    ChunkCache* cc = cache ? &cache->chunks[static_cast<std::size_t>(s)] : nullptr;
    hidden.middleRows(s * c, c) = forward_chunk(doc, s, params, options, rng, cc);
  }
  return hidden;
}

// ---------------------------------------------------------------------------
// Head
// ---------------------------------------------------------------------------

std::vector<std::size_t> active_labels(std::span<const std::uint8_t> mask, std::size_t n_labels) {
  if (!mask.empty() && mask.size() != n_labels) {
    throw ShapeError("mask length " + std::to_string(mask.size()) + " != label count " + std::to_string(n_labels));
  }
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < n_labels; ++j) {
    if (mask.empty() || mask[j] != 0) active.push_back(j);
  }
  return active;
}

std::vector<std::size_t> real_rows(std::span<const std::uint8_t> flags) {
  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < flags.size(); ++t) {
    if (flags[t]) rows.push_back(t);
  }
  if (rows.empty()) throw DomainError("label attention: every token is padding");
  return rows;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(idx(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(idx(i)) = m.row(idx(rows[i]));
  return out;
}

Matrix active_queries(const ModelParams& params, const std::vector<std::size_t>& active) {
  Matrix q = gather_rows(params.head.w_la, active);
  if (params.correction) {
    const Matrix e = gather_rows(params.correction->embeddings, active);
    q.noalias() += e * params.correction->weight;
    q.rowwise() += params.correction->bias.row(0);
  }
  return q;
}

void check_finite(const ModelParams& params, const char* what) {
  params.for_each([&](const std::string& name, const Matrix& m) {
    if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite parameter", name);
  });
}

double run_document(const ChunkedDocument& doc, const ModelParams& params, std::span<const std::uint8_t> gold,
                    std::span<const std::uint8_t> mask, const LossConfig& loss, const ForwardOptions& options,
                    GradientSet* grads) {
  const std::size_t n_labels = params.n_labels();
  if (gold.size() != n_labels) throw ShapeError("gold vector length != label count");
  const auto active = active_labels(mask, n_labels);
  if (active.empty()) throw DomainError("loss: no unmasked labels");
  const auto rows = real_rows(doc.flags);

  EncoderCache cache;
  const Matrix hidden = encoder_forward(doc, params.encoder, options, grads ? &cache : nullptr);
  const Matrix hr = gather_rows(hidden, rows);
  const Matrix q = active_queries(params, active);

  Matrix attn = q * hr.transpose();
  softmax_rows(attn);
  const Matrix d = attn * hr;

  const std::size_t la = active.size();
  std::vector<double> dlogit(la);
  double sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(la);
  for (std::size_t i = 0; i < la; ++i) {
    const std::size_t j = active[i];
    const double logit = d.row(idx(i)).dot(params.head.w_cl.row(idx(j))) + params.head.b_cl(idx(j), 0);
    if (!std::isfinite(logit)) {
      check_finite(params, "forward");
      throw NumericError("forward: non-finite logit", "logits");
    }
    const double p = sigmoid(logit);
    const LabelLoss l = label_loss(loss, p, gold[j] != 0);
    sum += l.value;
    dlogit[i] = loss.weight * inv_n * l.d_prob * p * (1.0 - p);
  }
  const double value = loss.weight * (sum / static_cast<double>(la));
  if (!std::isfinite(value)) {
    check_finite(params, "forward");
    throw NumericError("forward: non-finite loss", "loss");
  }
  if (grads == nullptr) return value;

  Matrix dd(idx(la), d.cols());
  for (std::size_t i = 0; i < la; ++i) {
    const std::size_t j = active[i];
    grads->head.w_cl.row(idx(j)) += dlogit[i] * d.row(idx(i));
    grads->head.b_cl(idx(j), 0) += dlogit[i];
    dd.row(idx(i)) = dlogit[i] * params.head.w_cl.row(idx(j));
  }
  const Matrix dattn = dd * hr.transpose();
  const Matrix ds = softmax_backward(attn, dattn);
  const Matrix dq = ds * hr;
  const Matrix dhr = attn.transpose() * dd + ds.transpose() * q;

  for (std::size_t i = 0; i < la; ++i) grads->head.w_la.row(idx(active[i])) += dq.row(idx(i));
  if (params.correction) {
    const Matrix e = gather_rows(params.correction->embeddings, active);
    grads->correction->weight.noalias() += e.transpose() * dq;
    grads->correction->bias += dq.colwise().sum();
  }

  Matrix dhidden = Matrix::Zero(hidden.rows(), hidden.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) dhidden.row(idx(rows[i])) = dhr.row(idx(i));
  const Index c = doc.chunk_len;
  for (int s = 0; s < doc.n_chunks; ++s) {
    backward_chunk(doc, s, params.encoder, cache.chunks[static_cast<std::size_t>(s)], dhidden.middleRows(s * c, c),
                   grads->encoder);
  }
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

Matrix CorrectionLayer::apply() const {
  Matrix out = embeddings * weight;
  out.rowwise() += bias.row(0);
  return out;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams out = *this;
  out.for_each([](const std::string&, Matrix& m) { m.setZero(); });
  return out;
}

Matrix ModelParams::label_queries() const {
  if (!correction) return head.w_la;
  return head.w_la + correction->apply();
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  std::vector<const Matrix*> rhs;
  other.for_each([&](const std::string&, const Matrix& m) { rhs.push_back(&m); });
  std::size_t i = 0;
  for_each([&](const std::string& name, Matrix& m) {
    if (i >= rhs.size() || rhs[i]->rows() != m.rows() || rhs[i]->cols() != m.cols()) {
      throw ShapeError("parameter sets differ at " + name);
    }
    m += *rhs[i++];
  });
  return *this;
}

ModelParams& ModelParams::operator*=(double scale) {
  for_each([&](const std::string&, Matrix& m) { m *= scale; });
  return *this;
}

ModelParams init_model(const ModelShape& shape, double init_std, std::uint64_t seed) {
  if (shape.vocab_size < 2 || shape.hidden < 1 || shape.max_chunk_len < 1 || shape.n_labels < 1) {
    throw ConfigError("model shape must have vocab >= 2, hidden >= 1, chunk length >= 1, labels >= 1");
  }
  if (shape.n_layers < 0 || shape.n_layers > 2) throw ConfigError("n_layers must be 0, 1 or 2");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_std);
  auto randn = [&](std::size_t r, std::size_t c) {
    Matrix m(idx(r), idx(c));
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };
  const std::size_t h = shape.hidden;

  ModelParams p;
  p.encoder.emb = randn(shape.vocab_size, h);
  p.encoder.pos = randn(shape.max_chunk_len, h);
  for (int l = 0; l < shape.n_layers; ++l) {
    BlockParams b;
    b.ln1_gain = Matrix::Ones(1, idx(h));
    b.ln1_bias = Matrix::Zero(1, idx(h));
    b.w_q = randn(h, h);
    b.w_k = randn(h, h);
    b.w_v = randn(h, h);
    b.w_o = randn(h, h);
    b.ln2_gain = Matrix::Ones(1, idx(h));
    b.ln2_bias = Matrix::Zero(1, idx(h));
    b.w_ff1 = randn(h, 4 * h);
    b.w_ff2 = randn(4 * h, h);
    p.encoder.blocks.push_back(std::move(b));
  }
  p.head.w_la = randn(shape.n_labels, h);
  p.head.w_cl = randn(shape.n_labels, h);
  p.head.b_cl = Matrix::Zero(idx(shape.n_labels), 1);
  return p;
}

// ---------------------------------------------------------------------------
// Public passes
// ---------------------------------------------------------------------------

Matrix encode_document(const ChunkedDocument& doc, const EncoderParams& params, const ForwardOptions& options) {
  return encoder_forward(doc, params, options, nullptr);
}

LabelAttention label_attention(const Matrix& hidden, std::span<const std::uint8_t> flags, const Matrix& queries) {
  if (flags.size() != static_cast<std::size_t>(hidden.rows())) throw ShapeError("flags length != rows of H");
  if (queries.cols() != hidden.cols()) throw ShapeError("query width != hidden size");
  const auto rows = real_rows(flags);
  const Matrix hr = gather_rows(hidden, rows);
  Matrix attn = queries * hr.transpose();
  softmax_rows(attn);

  LabelAttention out;
  out.reps = attn * hr;
  out.weights = Matrix::Zero(queries.rows(), hidden.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) out.weights.col(idx(rows[i])) = attn.col(idx(i));
  return out;
}

std::vector<double> classify(const Matrix& reps, const Matrix& w_cl, const Matrix& b_cl,
                             std::span<const std::uint8_t> mask) {
  if (reps.rows() != w_cl.rows() || reps.cols() != w_cl.cols() || b_cl.rows() != w_cl.rows()) {
    throw ShapeError("classify: shapes of d, W_cl and b_cl disagree");
  }
  const auto n = static_cast<std::size_t>(reps.rows());
  const auto active = active_labels(mask, n);
  std::vector<double> p(n, 0.0);
  for (std::size_t j : active) p[j] = sigmoid(reps.row(idx(j)).dot(w_cl.row(idx(j))) + b_cl(idx(j), 0));
  return p;
}

std::vector<double> predict_probabilities(const ChunkedDocument& doc, const ModelParams& params,
                                          std::span<const std::uint8_t> mask) {
  const std::size_t n_labels = params.n_labels();
  const auto active = active_labels(mask, n_labels);
  std::vector<double> p(n_labels, 0.0);
  if (active.empty()) return p;
  const auto rows = real_rows(doc.flags);
  const Matrix hidden = encoder_forward(doc, params.encoder, {}, nullptr);
  const Matrix hr = gather_rows(hidden, rows);
  Matrix attn = active_queries(params, active) * hr.transpose();
  softmax_rows(attn);
  const Matrix d = attn * hr;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const std::size_t j = active[i];
    p[j] = sigmoid(d.row(idx(i)).dot(params.head.w_cl.row(idx(j))) + params.head.b_cl(idx(j), 0));
  }
  return p;
}

double forward_backward(const ChunkedDocument& doc, const ModelParams& params, std::span<const std::uint8_t> gold,
                        std::span<const std::uint8_t> mask, const LossConfig& loss, const ForwardOptions& options,
                        GradientSet& grads) {
  return run_document(doc, params, gold, mask, loss, options, &grads);
}

double document_loss(const ChunkedDocument& doc, const ModelParams& params, std::span<const std::uint8_t> gold,
                     std::span<const std::uint8_t> mask, const LossConfig& loss, const ForwardOptions& options) {
  return run_document(doc, params, gold, mask, loss, options, nullptr);
}

}  // namespace xrlat
