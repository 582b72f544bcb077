// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xrlat/bootstrap.hpp"
#include "xrlat/code_tree.hpp"
#include "xrlat/dataset.hpp"
#include "xrlat/hyperbolic.hpp"
#include "xrlat/loss.hpp"

namespace xrlat {

enum class BootstrapMode { kNone, kEqual, kHyperC };

std::string to_string(BootstrapMode mode);
BootstrapMode parse_bootstrap_mode(const std::string& name);

struct TrainConfig {
  std::size_t batch_size = 8;
  double learning_rate = 5e-5;
  double weight_decay = 0.1;
  double dropout = 0.1;
  std::size_t warmup_steps = 0;
  std::size_t max_steps = 0;
  std::uint64_t seed = 2022;
  LossConfig loss{};
  BootstrapMode bootstrap = BootstrapMode::kEqual;
  bool negative_sampling = true;
  int chunk_len = 16;
  int n_chunks = 8;
  double binary_threshold = 0.5;
  double decision_threshold = 0.5;

  std::size_t hidden = 32;
  int n_layers = 1;
  double init_std = 0.03;
  double grad_clip = 1.0;
  std::size_t log_every = 50;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

struct StepLog {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct LevelResult {
  LevelModel model;
  std::vector<double> step_losses;  // one per optimizer step
  std::vector<StepLog> log;         // every log_every steps and the last step
};

/// Worker threads for per-document passes: XRLAT_THREADS when set, else the
/// hardware concurrency.
std::size_t worker_threads();

/// Trains one model on fixed labels. `masks`, when non-empty, holds one
/// SampleMask per document; otherwise every label participates.
LevelResult train_level(const std::vector<ChunkedDocument>& docs, const LabelMatrix& labels,
                        const std::vector<SampleMask>& masks, LevelModel init, const TrainConfig& cfg);

/// Seeded random model for `n_labels` labels at `level`.
LevelModel random_level_model(int level, std::size_t n_labels, std::size_t vocab_size, const TrainConfig& cfg);

/// Single Code-level model over all codes.
LevelResult train_flat(const EncodedDataset& data, const CodeTree& tree, const TrainConfig& cfg,
                       std::size_t vocab_size);

/// Called after each level of the chain finishes training.
using LevelCallback = std::function<void(const LevelResult&)>;

/// Four models trained Chapter -> Code. `embeddings` is required for
/// hyperbolic-corrected bootstrapping.
std::vector<LevelResult> train_xr_lat(const EncodedDataset& data, const CodeTree& tree, const TrainConfig& cfg,
                                      std::size_t vocab_size, const PoincareEmbeddings* embeddings = nullptr,
                                      const LevelCallback& on_level = {});

/// Per-document probabilities of one model; masked labels score 0.
std::vector<std::vector<double>> predict_level(const LevelModel& model, const std::vector<ChunkedDocument>& docs,
                                               const std::vector<SampleMask>& masks = {});

/// Code-level probabilities of a chain. With `cascade`, levels run 1 -> 4
/// and each level only scores children of parents predicted >= threshold;
/// without it the Code-level model scores every code.
std::vector<double> predict_chain(const std::vector<LevelModel>& chain, const CodeTree& tree,
                                  const ChunkedDocument& doc, bool cascade, double threshold);

}  // namespace xrlat
