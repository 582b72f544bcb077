// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "xrlat/code_tree.hpp"

namespace xrlat {

/// m = T binary(p + y): child j is kept iff p[parent(j)] + y[parent(j)] >= threshold.
SampleMask training_mask(std::span<const double> parent_probs, std::span<const std::uint8_t> parent_gold,
                         const IndexingMatrix& indexing, double threshold);

/// m = T binary(p): only children of predicted-positive parents are kept.
SampleMask inference_mask(std::span<const double> parent_probs, const IndexingMatrix& indexing, double threshold);

}  // namespace xrlat
