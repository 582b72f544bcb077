// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xrlat/common.hpp"

namespace xrlat {

/// N x L scores with binary gold labels.
struct PredictionSet {
  Matrix scores;
  std::vector<std::vector<std::uint8_t>> gold;
  double decision_threshold = 0.5;

  std::size_t n_instances() const noexcept { return static_cast<std::size_t>(scores.rows()); }
  std::size_t n_labels() const noexcept { return static_cast<std::size_t>(scores.cols()); }
  void validate() const;
};

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct MicroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;
};

/// 2PR / (P + R); 0 when undefined.
double f1_from_counts(const Counts& c);

/// Pools TP/FP/FN over every (instance, code) cell; score >= threshold is positive.
MicroScores micro_scores(const PredictionSet& pred);
double micro_f1(const PredictionSet& pred);

/// Unweighted mean of per-code F1 over all codes; a code with no
/// predictions and no positives contributes 0.
double macro_f1(const PredictionSet& pred);

/// Rank-based AUC with half credit for ties. nullopt when the labels hold a
/// single class.
std::optional<double> auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct AucScores {
  double macro = 0.0;
  double micro = 0.0;
  std::size_t skipped = 0;
};

/// Macro AUC over codes with both classes present (skips counted), micro
/// AUC over all flattened cells.
AucScores macro_micro_auc(const PredictionSet& pred);

/// Mean over instances of hits among the k highest-scoring codes, ties
/// broken by lower code index.
double precision_at_k(const PredictionSet& pred, std::size_t k);

struct MetricsReport {
  double macro_auc = 0.0;
  double micro_auc = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double p_at_5 = 0.0;
  double p_at_8 = 0.0;
  double p_at_15 = 0.0;
  std::size_t macro_auc_skipped = 0;

  /// `name<TAB>value` lines, four decimals.
  std::string format() const;
};

MetricsReport evaluate(const PredictionSet& pred);

}  // namespace xrlat
