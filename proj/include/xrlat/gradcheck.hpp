// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xrlat/loss.hpp"

namespace xrlat {

struct GradcheckConfig {
  int n_layers = 1;
  std::size_t hidden = 8;
  std::size_t vocab_size = 50;
  int chunk_len = 8;
  int n_chunks = 2;
  std::size_t n_labels = 20;
  /// Real tokens in the probe document; fewer than chunk_len * n_chunks
  /// exercises padding.
  std::size_t doc_tokens = 13;
  LossConfig loss{};
  bool hyperbolic_correction = false;
  std::size_t correction_dim = 5;
  double init_std = 0.3;
  double epsilon = 1e-4;
  /// 0 checks every coordinate, otherwise a seeded random subsample.
  std::size_t max_coords = 0;
  std::uint64_t seed = 1;
  /// Negative control: perturbs one analytic gradient coordinate.
  bool corrupt = false;
};

struct TensorCheck {
  std::string name;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  std::size_t coords = 0;
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::vector<TensorCheck> tensors;

  std::string format() const;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
/// gradient is zero from reporting round-off as relative error.
inline constexpr double kRelErrorFloor = 1e-6;
double relative_error(double analytic, double numeric);

/// Compares analytic gradients of a seeded random tiny model against
/// central finite differences. Dropout is disabled.
GradcheckReport gradcheck(const GradcheckConfig& config);

}  // namespace xrlat
