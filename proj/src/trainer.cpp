// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "xrlat/optimizer.hpp"
#include "xrlat/sampling.hpp"

namespace xrlat {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// handled by exactly one worker; callers reduce results in index order.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string to_string(BootstrapMode mode) {
  switch (mode) {
    case BootstrapMode::kNone: return "none";
    case BootstrapMode::kEqual: return "equal";
    case BootstrapMode::kHyperC: return "hyperc";
  }
  return "none";
}

BootstrapMode parse_bootstrap_mode(const std::string& name) {
  if (name == "none") return BootstrapMode::kNone;
  if (name == "equal") return BootstrapMode::kEqual;
  if (name == "hyperc") return BootstrapMode::kHyperC;
  throw ConfigError("unknown bootstrap mode '" + name + "' (expected none, equal or hyperc)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (warmup_steps > max_steps) throw ConfigError("warmup_steps must not exceed max_steps");
  if (!(binary_threshold > 0.0 && binary_threshold < 1.0)) throw ConfigError("binary_threshold must be in (0, 1)");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw ConfigError("decision_threshold must be in (0, 1)");
  }
  if (chunk_len < 1 || chunk_len > kMaxChunkLength) throw ConfigError("chunk_len must be in [1, 512]");
  if (n_chunks < 1) throw ConfigError("n_chunks must be >= 1");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (n_layers < 0 || n_layers > 2) throw ConfigError("n_layers must be 0, 1 or 2");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be > 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (loss.kind == LossKind::kAsl) {
    if (loss.gamma_pos < 0.0 || loss.gamma_neg < 0.0) throw ConfigError("ASL exponents must be >= 0");
    if (loss.margin < 0.0 || loss.margin >= 1.0) throw ConfigError("ASL margin must be in [0, 1)");
  }
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("XRLAT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw ConfigError("XRLAT_THREADS must be an integer >= 1");
    return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

LevelModel random_level_model(int level, std::size_t n_labels, std::size_t vocab_size, const TrainConfig& cfg) {
  ModelShape shape;
  shape.vocab_size = vocab_size;
  shape.hidden = cfg.hidden;
  shape.max_chunk_len = static_cast<std::size_t>(cfg.chunk_len);
  shape.n_layers = cfg.n_layers;
  shape.n_labels = n_labels;
  LevelModel m;
  m.level = level;
  m.provenance = Provenance::kRandom;
  m.params = init_model(shape, cfg.init_std, mix(cfg.seed, 0x1417, 0));
  return m;
}

LevelResult train_level(const std::vector<ChunkedDocument>& docs, const LabelMatrix& labels,
                        const std::vector<SampleMask>& masks, LevelModel init, const TrainConfig& cfg) {
  cfg.validate();
  if (docs.empty()) throw InputError("training set is empty");
  if (labels.n_instances() != docs.size()) throw ShapeError("label rows != documents");
  if (labels.n_labels() != init.params.n_labels()) throw ShapeError("label count != model head size");
  if (!masks.empty() && masks.size() != docs.size()) throw ShapeError("one mask per document required");

  LevelResult result;
  result.model = std::move(init);
  ModelParams& params = result.model.params;
  if (cfg.max_steps == 0) return result;

  AdamWConfig opt_cfg;
  opt_cfg.weight_decay = cfg.weight_decay;
  AdamW optimizer(params, opt_cfg);

  const std::size_t n = docs.size();
  const std::size_t batch = std::min(cfg.batch_size, n);
  const std::size_t threads = worker_threads();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(mix(cfg.seed, 0x5EED, 1));
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  std::size_t cursor = 0;

  std::vector<std::vector<std::uint8_t>> gold(n);
  for (std::size_t i = 0; i < n; ++i) gold[i] = labels.dense_row(i);

  std::vector<GradientSet> doc_grads(batch, params.zeros_like());
  std::vector<double> doc_loss(batch, 0.0);
  std::vector<std::size_t> members(batch);

  result.step_losses.reserve(cfg.max_steps);
  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    if (cursor + batch > n) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    for (std::size_t b = 0; b < batch; ++b) members[b] = order[cursor + b];
    cursor += batch;

    try {
      parallel_for(batch, threads, [&](std::size_t b) {
        const std::size_t d = members[b];
        doc_grads[b].for_each([](const std::string&, Matrix& m) { m.setZero(); });
        ForwardOptions fo;
        fo.training = true;
        fo.dropout = cfg.dropout;
        fo.dropout_seed = mix(cfg.seed, step, d);
        const std::span<const std::uint8_t> mask = masks.empty() ? std::span<const std::uint8_t>() : masks[d];
        doc_loss[b] = forward_backward(docs[d], params, gold[d], mask, cfg.loss, fo, doc_grads[b]);
      });
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(step + 1) + ": " + e.what(), e.tensor());
    }

    GradientSet& total = doc_grads[0];
    double loss = doc_loss[0];
    for (std::size_t b = 1; b < batch; ++b) {
      total += doc_grads[b];
      loss += doc_loss[b];
    }
    const double inv = 1.0 / static_cast<double>(batch);
    total *= inv;
    loss *= inv;
    if (!std::isfinite(loss)) throw NumericError("step " + std::to_string(step + 1) + ": non-finite loss", "loss");
    total.for_each([&](const std::string& name, const Matrix& m) {
      if (!m.allFinite()) throw NumericError("step " + std::to_string(step + 1) + ": non-finite gradient", name);
    });

    clip_gradients(total, cfg.grad_clip);
    const double lr = learning_rate_at(step, cfg.learning_rate, cfg.warmup_steps, cfg.max_steps);
    optimizer.step(params, total, lr);

    result.step_losses.push_back(loss);
    if ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.max_steps) result.log.push_back({step + 1, lr, loss});
  }
  return result;
}

LevelResult train_flat(const EncodedDataset& data, const CodeTree& tree, const TrainConfig& cfg,
                       std::size_t vocab_size) {
  if (data.size() == 0) throw InputError("training set is empty");
  if (data.codes.n_labels() != tree.size(kTreeDepth)) throw ShapeError("dataset labels are not at Code level");
  LevelModel init = random_level_model(kTreeDepth, tree.size(kTreeDepth), vocab_size, cfg);
  return train_level(data.docs, data.codes, {}, std::move(init), cfg);
}

std::vector<std::vector<double>> predict_level(const LevelModel& model, const std::vector<ChunkedDocument>& docs,
                                               const std::vector<SampleMask>& masks) {
  if (!masks.empty() && masks.size() != docs.size()) throw ShapeError("one mask per document required");
  std::vector<std::vector<double>> out(docs.size());
  parallel_for(docs.size(), worker_threads(), [&](std::size_t i) {
    const std::span<const std::uint8_t> mask = masks.empty() ? std::span<const std::uint8_t>() : masks[i];
    out[i] = predict_probabilities(docs[i], model.params, mask);
  });
  return out;
}

std::vector<LevelResult> train_xr_lat(const EncodedDataset& data, const CodeTree& tree, const TrainConfig& cfg,
                                      std::size_t vocab_size, const PoincareEmbeddings* embeddings,
                                      const LevelCallback& on_level) {
  cfg.validate();
  if (data.size() == 0) throw InputError("training set is empty");
  if (data.codes.n_labels() != tree.size(kTreeDepth)) throw ShapeError("dataset labels are not at Code level");
  if (cfg.bootstrap == BootstrapMode::kHyperC && embeddings == nullptr) {
    throw ConfigError("bootstrap=hyperc requires Poincare embeddings");
  }

  std::vector<LabelMatrix> labels(kTreeDepth + 1);
  labels[kTreeDepth] = data.codes;
  for (int k = kTreeDepth; k > 1; --k) {
    labels[static_cast<std::size_t>(k - 1)] = propagate_labels(labels[static_cast<std::size_t>(k)], tree.indexing(k));
  }

  std::vector<LevelResult> chain;
  std::vector<SampleMask> masks;  // masks of the level about to be trained
  for (int k = 1; k <= kTreeDepth; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    LevelModel init;
    if (k == 1 || cfg.bootstrap == BootstrapMode::kNone) {
      init = random_level_model(k, tree.size(k), vocab_size, cfg);
    } else if (cfg.bootstrap == BootstrapMode::kEqual) {
      init = bootstrap_equal(chain.back().model, tree.indexing(k));
    } else {
      const Matrix e = extract_level(*embeddings, k);
      init = bootstrap_hyperc(chain.back().model, tree.indexing(k), e,
                              zero_correction(static_cast<std::size_t>(e.cols()), cfg.hidden));
    }

    chain.push_back(train_level(data.docs, labels[ku], masks, std::move(init), cfg));
    if (on_level) on_level(chain.back());

    if (cfg.negative_sampling && k < kTreeDepth) {
      // Parent scores under the parent's own training masks; masked parents score 0.
      const auto probs = predict_level(chain.back().model, data.docs, masks);
      std::vector<SampleMask> next(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        next[i] = training_mask(probs[i], labels[ku].dense_row(i), tree.indexing(k + 1), cfg.binary_threshold);
      }
      masks = std::move(next);
    }
  }
  return chain;
}

std::vector<double> predict_chain(const std::vector<LevelModel>& chain, const CodeTree& tree,
                                  const ChunkedDocument& doc, bool cascade, double threshold) {
  if (chain.size() != static_cast<std::size_t>(kTreeDepth)) throw ShapeError("a chain has exactly 4 levels");
  for (int k = 1; k <= kTreeDepth; ++k) {
    if (chain[static_cast<std::size_t>(k - 1)].params.n_labels() != tree.size(k)) {
      throw ShapeError("level " + std::to_string(k) + " model does not match the tree");
    }
  }
  if (!cascade) return predict_probabilities(doc, chain.back().params, {});

  std::vector<double> probs = predict_probabilities(doc, chain.front().params, {});
  for (int k = 2; k <= kTreeDepth; ++k) {
    const SampleMask mask = inference_mask(probs, tree.indexing(k), threshold);
    probs = predict_probabilities(doc, chain[static_cast<std::size_t>(k - 1)].params, mask);
  }
  return probs;
}

}  // namespace xrlat
