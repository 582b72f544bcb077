// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/sampling.hpp"

#include <string>

namespace xrlat {

SampleMask training_mask(std::span<const double> parent_probs, std::span<const std::uint8_t> parent_gold,
                         const IndexingMatrix& indexing, double threshold) {
  if (parent_probs.size() != indexing.cols()) {
    throw ShapeError("sampling: " + std::to_string(parent_probs.size()) + " parent scores for " +
                     std::to_string(indexing.cols()) + " parents");
  }
  if (!parent_gold.empty() && parent_gold.size() != parent_probs.size()) {
    throw ShapeError("sampling: parent gold and score lengths differ");
  }
  std::vector<std::uint8_t> parent_on(parent_probs.size());
  for (std::size_t p = 0; p < parent_probs.size(); ++p) {
    const double y = parent_gold.empty() ? 0.0 : static_cast<double>(parent_gold[p] != 0);
    parent_on[p] = parent_probs[p] + y >= threshold ? 1 : 0;
  }
  SampleMask mask(indexing.rows());
  for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = parent_on[indexing.parent(j)];
  return mask;
}

SampleMask inference_mask(std::span<const double> parent_probs, const IndexingMatrix& indexing, double threshold) {
  return training_mask(parent_probs, {}, indexing, threshold);
}

}  // namespace xrlat
