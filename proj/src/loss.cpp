// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/loss.hpp"

#include <algorithm>
#include <cmath>

namespace xrlat {

namespace {

template <class PerLabel>
double masked_mean(std::span<const double> p, std::span<const std::uint8_t> y, std::span<const std::uint8_t> mask,
                   PerLabel&& per_label) {
  if (p.size() != y.size() || (!mask.empty() && mask.size() != p.size())) {
    throw ShapeError("loss: probability, label and mask lengths differ");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!mask.empty() && mask[j] == 0) continue;
    sum += per_label(p[j], y[j] != 0);
    ++n;
  }
  if (n == 0) throw DomainError("loss: no unmasked labels");
  return sum / static_cast<double>(n);
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

bool clamped(double p) { return p < kProbClamp || p > 1.0 - kProbClamp; }

LabelLoss bce_label(double p, bool positive) {
  const double pc = clamp_prob(p);
  const bool flat = clamped(p);
  if (positive) return {-std::log(pc), flat ? 0.0 : -1.0 / pc};
  return {-std::log(1.0 - pc), flat ? 0.0 : 1.0 / (1.0 - pc)};
}

LabelLoss asl_label(double p, bool positive, double gamma_pos, double gamma_neg, double margin) {
  const double pc = clamp_prob(p);
  const bool flat = clamped(p);
  if (positive) {
    const double q = 1.0 - pc;
    const double w = std::pow(q, gamma_pos);
    const double lp = std::log(pc);
    double d = -w / pc;
    if (gamma_pos != 0.0) d += gamma_pos * std::pow(q, gamma_pos - 1.0) * lp;
    return {-w * lp, flat ? 0.0 : d};
  }
  const double pm = std::max(pc - margin, 0.0);
  if (pm == 0.0) return {0.0, 0.0};  // 0^gamma * log(1) with 0^0 := 1
  const double w = std::pow(pm, gamma_neg);
  const double l1 = std::log(1.0 - pm);
  double d = w / (1.0 - pm);
  if (gamma_neg != 0.0) d -= gamma_neg * std::pow(pm, gamma_neg - 1.0) * l1;
  return {-w * l1, flat ? 0.0 : d};
}

}  // namespace

double bce_loss(std::span<const double> p, std::span<const std::uint8_t> y, std::span<const std::uint8_t> mask) {
  return masked_mean(p, y, mask, [](double pj, bool pos) { return bce_label(pj, pos).value; });
}

double asl_loss(std::span<const double> p, std::span<const std::uint8_t> y, std::span<const std::uint8_t> mask,
                double gamma_pos, double gamma_neg, double margin) {
  if (gamma_pos < 0.0 || gamma_neg < 0.0) throw ConfigError("ASL focusing exponents must be >= 0");
  if (margin < 0.0 || margin >= 1.0) throw ConfigError("ASL margin must be in [0, 1)");
  return masked_mean(p, y, mask, [&](double pj, bool pos) {
    return asl_label(pj, pos, gamma_pos, gamma_neg, margin).value;
  });
}

double loss_value(const LossConfig& cfg, std::span<const double> p, std::span<const std::uint8_t> y,
                  std::span<const std::uint8_t> mask) {
  const double base = cfg.kind == LossKind::kBce ? bce_loss(p, y, mask)
                                                 : asl_loss(p, y, mask, cfg.gamma_pos, cfg.gamma_neg, cfg.margin);
  return cfg.weight * base;
}

LabelLoss label_loss(const LossConfig& cfg, double p, bool positive) {
  if (cfg.kind == LossKind::kBce) return bce_label(p, positive);
  return asl_label(p, positive, cfg.gamma_pos, cfg.gamma_neg, cfg.margin);
}

std::string to_string(LossKind kind) { return kind == LossKind::kBce ? "bce" : "asl"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "bce") return LossKind::kBce;
  if (name == "asl") return LossKind::kAsl;
  throw ConfigError("unknown loss '" + name + "' (expected bce or asl)");
}

}  // namespace xrlat
