// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "xrlat/network.hpp"

namespace xrlat {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Adaptive-moment optimizer with decoupled weight decay. Layer-norm
/// parameters and biases are not decayed.
class AdamW {
 public:
  AdamW(const ModelParams& like, AdamWConfig config);

  void step(ModelParams& params, const GradientSet& grads, double lr);
  std::size_t steps() const noexcept { return steps_; }

  static bool decays(const std::string& tensor_name);

 private:
  AdamWConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t steps_ = 0;
};

/// Linear warmup to `peak` over `warmup` steps, then linear decay reaching
/// 0 at `max_steps`. `step` is 0-based; step 0 already gets peak / warmup.
double learning_rate_at(std::size_t step, double peak, std::size_t warmup, std::size_t max_steps);

/// Rescales so the global L2 norm is at most `max_norm` (<= 0 disables).
/// Returns the norm before clipping.
double clip_gradients(GradientSet& grads, double max_norm);

}  // namespace xrlat
