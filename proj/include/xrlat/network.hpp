// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xrlat/common.hpp"
#include "xrlat/loss.hpp"
#include "xrlat/text.hpp"

namespace xrlat {

/// Pre-layer-norm single-head transformer block.
struct BlockParams {
  Matrix ln1_gain, ln1_bias;   // 1 x h
  Matrix w_q, w_k, w_v, w_o;   // h x h
  Matrix ln2_gain, ln2_bias;   // 1 x h
  Matrix w_ff1;                // h x 4h
  Matrix w_ff2;                // 4h x h
};

struct EncoderParams {
  Matrix emb;  // |V| x h
  Matrix pos;  // c_max x h
  std::vector<BlockParams> blocks;

  std::size_t hidden() const noexcept { return static_cast<std::size_t>(emb.cols()); }
  std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(emb.rows()); }
  std::size_t max_chunk_len() const noexcept { return static_cast<std::size_t>(pos.rows()); }
};

struct HeadParams {
  Matrix w_la;  // L x h
  Matrix w_cl;  // L x h
  Matrix b_cl;  // L x 1

  std::size_t n_labels() const noexcept { return static_cast<std::size_t>(w_la.rows()); }
};

/// Affine map f(e) = e * weight + bias applied row-wise to frozen node
/// embeddings and added to the label-attention queries.
struct CorrectionLayer {
  Matrix weight;      // d_emb x h
  Matrix bias;        // 1 x h
  Matrix embeddings;  // L x d_emb, not trained

  Matrix apply() const;
};

struct ModelParams {
  EncoderParams encoder;
  HeadParams head;
  std::optional<CorrectionLayer> correction;

  /// Visits every trainable tensor with its checkpoint name, in a fixed order.
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  /// Same structure with every trainable tensor zeroed.
  ModelParams zeros_like() const;

  /// Effective label-attention queries: W_la, plus f(E) when corrected.
  Matrix label_queries() const;

  std::size_t n_labels() const noexcept { return head.n_labels(); }
  std::size_t parameter_count() const;

  ModelParams& operator+=(const ModelParams& other);
  ModelParams& operator*=(double scale);

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    f("emb", self.encoder.emb);
    f("pos", self.encoder.pos);
    for (std::size_t i = 0; i < self.encoder.blocks.size(); ++i) {
      auto& b = self.encoder.blocks[i];
      const std::string p = "blk" + std::to_string(i) + ".";
      f(p + "ln1_gain", b.ln1_gain);
      f(p + "ln1_bias", b.ln1_bias);
      f(p + "w_q", b.w_q);
      f(p + "w_k", b.w_k);
      f(p + "w_v", b.w_v);
      f(p + "w_o", b.w_o);
      f(p + "ln2_gain", b.ln2_gain);
      f(p + "ln2_bias", b.ln2_bias);
      f(p + "w_ff1", b.w_ff1);
      f(p + "w_ff2", b.w_ff2);
    }
    f("W_la", self.head.w_la);
    f("W_cl", self.head.w_cl);
    f("b_cl", self.head.b_cl);
    if (self.correction) {
      f("hyp.weight", self.correction->weight);
      f("hyp.bias", self.correction->bias);
    }
  }
};

using GradientSet = ModelParams;

struct ModelShape {
  std::size_t vocab_size = 0;
  std::size_t hidden = 32;
  std::size_t max_chunk_len = 16;
  int n_layers = 1;
  std::size_t n_labels = 0;
};

/// Weights and embeddings ~ N(0, init_std); layer-norm gains 1, offsets and
/// classifier bias 0. Deterministic per seed.
ModelParams init_model(const ModelShape& shape, double init_std, std::uint64_t seed);

struct ForwardOptions {
  bool training = false;
  double dropout = 0.0;
  std::uint64_t dropout_seed = 0;
};

/// z x h per-token hidden states; each chunk is encoded independently with
/// positions restarting at 0.
Matrix encode_document(const ChunkedDocument& doc, const EncoderParams& params, const ForwardOptions& options = {});

struct LabelAttention {
  Matrix weights;  // L x z, zero on padding
  Matrix reps;     // L x h
};

/// Per-label softmax attention over the real rows of H.
LabelAttention label_attention(const Matrix& hidden, std::span<const std::uint8_t> flags, const Matrix& queries);

/// sigmoid(d_j . W_cl[j] + b_cl[j]) for unmasked j, 0 for masked j.
/// An empty mask selects every label.
std::vector<double> classify(const Matrix& reps, const Matrix& w_cl, const Matrix& b_cl,
                             std::span<const std::uint8_t> mask);

/// Inference-mode probabilities; masked labels are skipped and scored 0.
std::vector<double> predict_probabilities(const ChunkedDocument& doc, const ModelParams& params,
                                          std::span<const std::uint8_t> mask);

/// Loss of one document and its exact gradient, accumulated into `grads`.
/// An empty mask selects every label.
double forward_backward(const ChunkedDocument& doc, const ModelParams& params, std::span<const std::uint8_t> gold,
                        std::span<const std::uint8_t> mask, const LossConfig& loss, const ForwardOptions& options,
                        GradientSet& grads);

/// Loss only, same arithmetic as forward_backward.
double document_loss(const ChunkedDocument& doc, const ModelParams& params, std::span<const std::uint8_t> gold,
                     std::span<const std::uint8_t> mask, const LossConfig& loss, const ForwardOptions& options = {});

}  // namespace xrlat
