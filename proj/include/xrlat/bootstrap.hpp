// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "xrlat/code_tree.hpp"
#include "xrlat/network.hpp"

namespace xrlat {

enum class Provenance { kRandom, kBootstrapEqual, kBootstrapHyperC };

std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& name);

/// Trainable parameters of one level of the chain (or of the flat model,
/// which is level 4).
struct LevelModel {
  int level = kTreeDepth;
  Provenance provenance = Provenance::kRandom;
  ModelParams params;
};

/// Child initialization from a trained parent: the encoder is copied, and
/// W_la, W_cl, b_cl rows are copied from each child's parent row (T W).
LevelModel bootstrap_equal(const LevelModel& parent, const IndexingMatrix& indexing);

/// As bootstrap_equal, plus a trainable correction f applied row-wise to
/// the child embeddings, so the effective queries are T W_la + f(E).
/// `f.embeddings` is replaced by `child_embeddings`.
LevelModel bootstrap_hyperc(const LevelModel& parent, const IndexingMatrix& indexing, const Matrix& child_embeddings,
                            CorrectionLayer f);

/// f == 0 with the given input and output widths.
CorrectionLayer zero_correction(std::size_t embedding_dim, std::size_t hidden);

}  // namespace xrlat
