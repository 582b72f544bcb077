// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_util.hpp"
#include "xrlat/metrics.hpp"

using namespace xrlat;

namespace {

PredictionSet make(const std::vector<std::vector<double>>& s, const std::vector<std::vector<std::uint8_t>>& g) {
  PredictionSet p;
  p.scores = Matrix(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.empty() ? 0 : s[0].size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s[i].size(); ++j) p.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s[i][j];
  }
  p.gold = g;
  return p;
}

double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = 0; b < s.size(); ++b) {
      if (!y[a] || y[b]) continue;
      pairs += 1;
      wins += s[a] > s[b] ? 1.0 : s[a] == s[b] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

}  // namespace

TEST_CASE("F1 worked example") {
  const auto p = make({{1, 0, 1}, {0, 1, 0}}, {{1, 1, 0}, {0, 1, 0}});
  const MicroScores m = micro_scores(p);
  CHECK(m.counts.tp == 2);
  CHECK(m.counts.fp == 1);
  CHECK(m.counts.fn == 1);
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(macro_f1(p) == doctest::Approx(0.555556).epsilon(1e-6));
}

TEST_CASE("F1 degenerate cases") {
  const auto perfect = make({{0.9, 0.1}, {0.2, 0.8}}, {{1, 0}, {0, 1}});
  CHECK(micro_f1(perfect) == 1.0);
  CHECK(macro_f1(perfect) == 1.0);
  const auto none = make({{0.1, 0.1}}, {{1, 0}});
  CHECK(micro_f1(none) == 0.0);
  const auto single = make({{0.7}, {0.2}, {0.6}}, {{1}, {1}, {0}});
  CHECK(macro_f1(single) == micro_f1(single));
}

TEST_CASE("AUC basics") {
  CHECK(*auc(std::vector<double>{0.9, 0.1, 0.8}, std::vector<std::uint8_t>{1, 0, 1}) == 1.0);
  CHECK(*auc(std::vector<double>{0.5, 0.5}, std::vector<std::uint8_t>{1, 0}) == 0.5);
  CHECK_FALSE(auc(std::vector<double>{0.5, 0.2}, std::vector<std::uint8_t>{1, 1}).has_value());
  const auto flat = make({{0.3, 0.3}, {0.3, 0.3}}, {{1, 0}, {0, 0}});
  const AucScores a = macro_micro_auc(flat);
  CHECK(a.micro == 0.5);
  CHECK(a.macro == 0.5);
  CHECK(a.skipped == 1);
  CHECK_THROWS_AS(macro_micro_auc(make({{0.1}, {0.2}}, {{1}, {1}})), DomainError);
}

TEST_CASE("precision at k") {
  const auto p = make({{0.9, 0.8, 0.1}}, {{1, 0, 0}});
  CHECK(precision_at_k(p, 2) == 0.5);
  CHECK(precision_at_k(make({{0.2, 0.9, 0.8}}, {{0, 1, 1}}), 2) == 1.0);
  CHECK(precision_at_k(make({{0.5, 0.5, 0.5}}, {{1, 0, 1}}), 1) == 1.0);  // ties -> lower index
  CHECK(precision_at_k(make({{0.5, 0.5, 0.5}}, {{0, 1, 1}}), 1) == 0.0);
  CHECK_THROWS_AS(precision_at_k(p, 4), DomainError);
  CHECK_THROWS_AS(precision_at_k(p, 0), DomainError);
}

TEST_CASE("metrics equal naive references on random instances") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 49, l = 1 + rng() % 30;
    std::vector<std::vector<double>> s(n, std::vector<double>(l));
    std::vector<std::vector<std::uint8_t>> g(n, std::vector<std::uint8_t>(l));
    for (auto& row : s) {
      for (auto& x : row) x = std::round(u(rng) * 20) / 20;  // plenty of ties
    }
    for (auto& row : g) row = xrlat::testing::random_bits(rng, l, 0.3);
    const auto p = make(s, g);

    std::size_t tp = 0, fp = 0, fn = 0;
    double macro = 0;
    for (std::size_t j = 0; j < l; ++j) {
      std::size_t a = 0, b = 0, c = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool yh = s[i][j] >= 0.5, y = g[i][j];
        a += yh && y;
        b += yh && !y;
        c += !yh && y;
      }
      tp += a;
      fp += b;
      fn += c;
      macro += (2 * a + b + c) ? 2.0 * a / (2 * a + b + c) : 0.0;
    }
    const double micro = (2 * tp + fp + fn) ? 2.0 * tp / (2 * tp + fp + fn) : 0.0;
    CHECK(micro_f1(p) == micro);
    CHECK(macro_f1(p) == macro / l);

    for (std::size_t k = 1; k <= l; k += 3) {
      double sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> idx(l);
        for (std::size_t j = 0; j < l; ++j) idx[j] = j;
        std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return s[i][x] > s[i][y]; });
        std::size_t hits = 0;
        for (std::size_t t = 0; t < k; ++t) hits += g[i][idx[t]];
        sum += static_cast<double>(hits) / static_cast<double>(k);
      }
      CHECK(precision_at_k(p, k) == sum / static_cast<double>(n));
    }

    double macro_auc = 0;
    std::size_t used = 0;
    std::vector<double> fs;
    std::vector<std::uint8_t> fg;
    for (std::size_t j = 0; j < l; ++j) {
      std::vector<double> cs;
      std::vector<std::uint8_t> cg;
      for (std::size_t i = 0; i < n; ++i) {
        cs.push_back(s[i][j]);
        cg.push_back(g[i][j]);
      }
      const auto pos = std::count(cg.begin(), cg.end(), 1);
      if (pos > 0 && pos < static_cast<long>(n)) {
        macro_auc += pairwise_auc(cs, cg);
        ++used;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      fs.insert(fs.end(), s[i].begin(), s[i].end());
      fg.insert(fg.end(), g[i].begin(), g[i].end());
    }
    if (used == 0) {
      CHECK_THROWS_AS(macro_micro_auc(p), DomainError);
      continue;
    }
    const AucScores a = macro_micro_auc(p);
    CHECK(std::abs(a.macro - macro_auc / used) <= 1e-9);
    CHECK(std::abs(a.micro - pairwise_auc(fs, fg)) <= 1e-9);
    CHECK(a.skipped == l - used);
  }
}

TEST_CASE("metric invariances") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20, l = 16;
    PredictionSet p;
    p.scores = Matrix(n, l);
    for (Eigen::Index i = 0; i < p.scores.size(); ++i) p.scores.data()[i] = u(rng);
    p.gold.assign(n, {});
    for (auto& r : p.gold) r = xrlat::testing::random_bits(rng, l, 0.3);
    p.gold[0][0] = 1;
    p.gold[1][0] = 0;

    PredictionSet q = p;
    q.scores = p.scores.array().cube() * 3.0 + 1.0;  // strictly increasing
    for (std::size_t k : {1u, 5u, 15u}) CHECK(precision_at_k(q, k) == precision_at_k(p, k));
    CHECK(std::abs(macro_micro_auc(q).macro - macro_micro_auc(p).macro) < 1e-12);

    double last_recall = 2;
    for (double thr : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      p.decision_threshold = thr;
      const double r = micro_scores(p).recall;
      CHECK(r <= last_recall);
      last_recall = r;
    }
  }
}

TEST_CASE("report format") {
  MetricsReport r;
  r.macro_auc = 0.5;
  r.micro_auc = 0.25;
  r.macro_f1 = 1.0;
  r.micro_f1 = 0.123456;
  r.p_at_5 = 0.2;
  r.p_at_8 = 0.3;
  r.p_at_15 = 0.4;
  r.macro_auc_skipped = 3;
  CHECK(r.format() ==
        "macro_auc\t0.5000\nmicro_auc\t0.2500\nmacro_f1\t1.0000\nmicro_f1\t0.1235\n"
        "p@5\t0.2000\np@8\t0.3000\np@15\t0.4000\nmacro_auc_skipped\t3\n");
}

TEST_CASE("prediction set validation") {
  auto p = make({{0.1, 0.2}}, {{1, 0}});
  p.gold[0].push_back(1);
  CHECK_THROWS_AS(micro_f1(p), ShapeError);
  auto q = make({{0.1, std::nan("")}}, {{1, 0}});
  CHECK_THROWS_AS(micro_f1(q), NumericError);
}
