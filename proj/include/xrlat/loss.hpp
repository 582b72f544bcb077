// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "xrlat/common.hpp"

namespace xrlat {

enum class LossKind { kBce, kAsl };

struct LossConfig {
  LossKind kind = LossKind::kBce;
  double gamma_pos = 0.0;
  double gamma_neg = 4.0;
  double margin = 0.05;
  /// Multiplies the per-document loss (and therefore every gradient).
  double weight = 1.0;
};

inline constexpr double kProbClamp = 1e-12;

/// Mean over unmasked labels of -[y log p + (1-y) log(1-p)], p clamped to
/// [1e-12, 1 - 1e-12]. An empty mask means "all labels".
double bce_loss(std::span<const double> p, std::span<const std::uint8_t> y, std::span<const std::uint8_t> mask);

/// Asymmetric loss: positives weighted by (1-p)^gamma_pos, negatives use the
/// shifted probability p_m = max(p - margin, 0) weighted by p_m^gamma_neg.
double asl_loss(std::span<const double> p, std::span<const std::uint8_t> y, std::span<const std::uint8_t> mask,
                double gamma_pos, double gamma_neg, double margin);

double loss_value(const LossConfig& cfg, std::span<const double> p, std::span<const std::uint8_t> y,
                  std::span<const std::uint8_t> mask);

/// Loss of a single label and its derivative with respect to p.
struct LabelLoss {
  double value = 0.0;
  double d_prob = 0.0;
};
LabelLoss label_loss(const LossConfig& cfg, double p, bool positive);

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

}  // namespace xrlat
