// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace xrlat {

void PredictionSet::validate() const {
  if (gold.size() != n_instances()) throw ShapeError("prediction set: gold rows != score rows");
  for (const auto& row : gold) {
    if (row.size() != n_labels()) throw ShapeError("prediction set: gold columns != score columns");
  }
  if (!scores.allFinite()) throw NumericError("prediction set has non-finite scores", "scores");
}

double f1_from_counts(const Counts& c) {
  const double denom = 2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp) + static_cast<double>(c.fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / denom;
}

MicroScores micro_scores(const PredictionSet& pred) {
  pred.validate();
  MicroScores s;
  for (std::size_t i = 0; i < pred.n_instances(); ++i) {
    for (std::size_t j = 0; j < pred.n_labels(); ++j) {
      const bool yhat = pred.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= pred.decision_threshold;
      const bool y = pred.gold[i][j] != 0;
      if (yhat && y) ++s.counts.tp;
      else if (yhat) ++s.counts.fp;
      else if (y) ++s.counts.fn;
    }
  }
  const double tp = static_cast<double>(s.counts.tp);
  s.precision = s.counts.tp + s.counts.fp == 0 ? 0.0 : tp / static_cast<double>(s.counts.tp + s.counts.fp);
  s.recall = s.counts.tp + s.counts.fn == 0 ? 0.0 : tp / static_cast<double>(s.counts.tp + s.counts.fn);
  s.f1 = f1_from_counts(s.counts);
  return s;
}

double micro_f1(const PredictionSet& pred) { return micro_scores(pred).f1; }

double macro_f1(const PredictionSet& pred) {
  pred.validate();
  if (pred.n_labels() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < pred.n_labels(); ++j) {
    Counts c;
    for (std::size_t i = 0; i < pred.n_instances(); ++i) {
      const bool yhat = pred.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= pred.decision_threshold;
      const bool y = pred.gold[i][j] != 0;
      if (yhat && y) ++c.tp;
      else if (yhat) ++c.fp;
      else if (y) ++c.fn;
    }
    sum += f1_from_counts(c);
  }
  return sum / static_cast<double>(pred.n_labels());
}

std::optional<double> auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto l : labels) n_pos += l != 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average 1-based ranks over tie groups.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]]) pos_rank_sum += avg;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

AucScores macro_micro_auc(const PredictionSet& pred) {
  pred.validate();
  const std::size_t n = pred.n_instances();
  const std::size_t l = pred.n_labels();
  AucScores out;
  double sum = 0.0;
  std::size_t evaluated = 0;
  std::vector<double> col(n);
  std::vector<std::uint8_t> col_gold(n);
  for (std::size_t j = 0; j < l; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = pred.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      col_gold[i] = pred.gold[i][j];
    }
    if (auto a = auc(col, col_gold)) {
      sum += *a;
      ++evaluated;
    } else {
      ++out.skipped;
    }
  }
  if (evaluated == 0) throw DomainError("macro AUC: no code has both positive and negative instances");
  out.macro = sum / static_cast<double>(evaluated);

  std::vector<double> flat(n * l);
  std::vector<std::uint8_t> flat_gold(n * l);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      flat[i * l + j] = pred.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      flat_gold[i * l + j] = pred.gold[i][j];
    }
  }
  out.micro = *auc(flat, flat_gold);  // some code has both classes, so the pool does too
  return out;
}

double precision_at_k(const PredictionSet& pred, std::size_t k) {
  pred.validate();
  if (k < 1) throw DomainError("precision@k needs k >= 1");
  if (k > pred.n_labels()) {
    throw DomainError("precision@" + std::to_string(k) + " exceeds the label count " + std::to_string(pred.n_labels()));
  }
  if (pred.n_instances() == 0) return 0.0;
  std::vector<std::size_t> order(pred.n_labels());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.n_instances(); ++i) {
    const auto row = pred.scores.row(static_cast<Eigen::Index>(i));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double sa = row(static_cast<Eigen::Index>(a));
                        const double sb = row(static_cast<Eigen::Index>(b));
                        return sa != sb ? sa > sb : a < b;
                      });
    std::size_t hits = 0;
    for (std::size_t t = 0; t < k; ++t) hits += pred.gold[i][order[t]] != 0;
    sum += static_cast<double>(hits) / static_cast<double>(k);
  }
  return sum / static_cast<double>(pred.n_instances());
}

std::string MetricsReport::format() const {
  std::string out;
  char buf[64];
  auto line = [&](const char* name, double v) {
    std::snprintf(buf, sizeof(buf), "%s\t%.4f\n", name, v);
    out += buf;
  };
  line("macro_auc", macro_auc);
  line("micro_auc", micro_auc);
  line("macro_f1", macro_f1);
  line("micro_f1", micro_f1);
  line("p@5", p_at_5);
  line("p@8", p_at_8);
  line("p@15", p_at_15);
  std::snprintf(buf, sizeof(buf), "macro_auc_skipped\t%zu\n", macro_auc_skipped);
  out += buf;
  return out;
}

MetricsReport evaluate(const PredictionSet& pred) {
  MetricsReport r;
  const AucScores a = macro_micro_auc(pred);
  r.macro_auc = a.macro;
  r.micro_auc = a.micro;
  r.macro_auc_skipped = a.skipped;
  r.macro_f1 = macro_f1(pred);
  r.micro_f1 = micro_f1(pred);
  r.p_at_5 = precision_at_k(pred, 5);
  r.p_at_8 = precision_at_k(pred, 8);
  r.p_at_15 = precision_at_k(pred, 15);
  return r;
}

}  // namespace xrlat
