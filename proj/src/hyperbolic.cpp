// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace xrlat {

namespace {

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double squared_distance(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return s;
}

std::span<const double> row_span(const Matrix& m, std::size_t r) {
  return {m.data() + r * static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.cols())};
}

// arcosh argument; throws outside the ball.
double distance_argument(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("poincare_distance: dimension mismatch");
  const double a = 1.0 - squared_norm(u);
  const double b = 1.0 - squared_norm(v);
  if (a <= 0.0 || b <= 0.0) throw DomainError("poincare_distance: point on or outside the unit ball");
  return 1.0 + 2.0 * squared_distance(u, v) / (a * b);
}

}  // namespace

double poincare_distance(std::span<const double> u, std::span<const double> v) {
  return std::acosh(distance_argument(u, v));
}

void poincare_distance_grad(std::span<const double> u, std::span<const double> v, std::span<double> grad_u) {
  const double g = distance_argument(u, v);
  const double a = 1.0 - squared_norm(u);
  const double b = 1.0 - squared_norm(v);
  const double diff2 = squared_distance(u, v);
  const double g2m1 = g * g - 1.0;
  if (g2m1 <= 0.0) {
    std::fill(grad_u.begin(), grad_u.end(), 0.0);
    return;
  }
  const double outer = 1.0 / std::sqrt(g2m1);
  const double c_diff = 4.0 / (a * b);
  const double c_u = 4.0 * diff2 / (a * a * b);
  for (std::size_t i = 0; i < u.size(); ++i) {
    grad_u[i] = outer * (c_diff * (u[i] - v[i]) + c_u * u[i]);
  }
}

EdgeSet EdgeSet::from_tree(const CodeTree& tree) {
  EdgeSet set;
  std::size_t running = 0;
  for (int k = 0; k <= kTreeDepth; ++k) {
    set.offset[static_cast<std::size_t>(k)] = running;
    running += tree.size(k);
  }
  set.n_nodes = running;
  for (int k = 1; k <= kTreeDepth; ++k) {
    const auto& t = tree.indexing(k);
    for (std::size_t i = 0; i < t.rows(); ++i) {
      set.edges.emplace_back(set.flat_index(k - 1, t.parent(i)), set.flat_index(k, i));
    }
  }
  return set;
}

double edge_ranking_loss(const Matrix& table, std::size_t u, std::size_t v,
                         std::span<const std::size_t> negatives, Matrix* grad) {
  const std::size_t n = negatives.size() + 1;
  std::vector<std::size_t> targets;
  targets.reserve(n);
  targets.push_back(v);
  targets.insert(targets.end(), negatives.begin(), negatives.end());

  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = poincare_distance(row_span(table, u), row_span(table, targets[i]));

  // log-sum-exp of -d for stability
  const double min_d = *std::min_element(dist.begin(), dist.end());
  double z = 0.0;
  for (double d : dist) z += std::exp(-(d - min_d));
  const double loss = dist[0] - min_d + std::log(z);

  if (grad != nullptr) {
    const auto dim = static_cast<std::size_t>(table.cols());
    std::vector<double> gu(dim), gw(dim);
    for (std::size_t i = 0; i < n; ++i) {
      const double softmax = std::exp(-(dist[i] - min_d)) / z;
      const double coeff = (i == 0 ? 1.0 : 0.0) - softmax;
      if (coeff == 0.0) continue;
      const std::size_t w = targets[i];
      poincare_distance_grad(row_span(table, u), row_span(table, w), gu);
      poincare_distance_grad(row_span(table, w), row_span(table, u), gw);
      for (std::size_t c = 0; c < dim; ++c) {
        (*grad)(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(c)) += coeff * gu[c];
        (*grad)(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(c)) += coeff * gw[c];
      }
    }
  }
  return loss;
}

void project_to_ball(Matrix& table, double eps) {
  const double max_norm = 1.0 - eps;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    const double norm = table.row(r).norm();
    if (norm >= max_norm) table.row(r) *= max_norm / norm;
  }
}

PoincareEmbeddings train_poincare(const CodeTree& tree, const PoincareOptions& options,
                                  const EpochObserver& observer) {
  if (options.dim < 2) throw ConfigError("poincare dim must be >= 2");
  if (options.epochs < 0) throw ConfigError("poincare epochs must be >= 0");
  if (!(options.lr > 0.0)) throw ConfigError("poincare learning rate must be > 0");
  if (options.n_negatives < 0) throw ConfigError("poincare negatives must be >= 0");

  const EdgeSet edges = EdgeSet::from_tree(tree);
  const std::size_t n_nodes = edges.n_nodes;
  const auto dim = static_cast<std::size_t>(options.dim);

  PoincareEmbeddings out;
  out.ball_eps = options.ball_eps;
  out.offset = edges.offset;
  for (int k = 0; k <= kTreeDepth; ++k) out.count[static_cast<std::size_t>(k)] = tree.size(k);

  std::mt19937_64 rng(options.seed);

  // Uniform in the radius-`init_radius` ball: gaussian direction, radius r * U^(1/d).
  out.table = Matrix::Zero(static_cast<Eigen::Index>(n_nodes), static_cast<Eigen::Index>(dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < n_nodes; ++r) {
    auto row = out.table.row(static_cast<Eigen::Index>(r));
    for (std::size_t c = 0; c < dim; ++c) row(static_cast<Eigen::Index>(c)) = normal(rng);
    const double norm = row.norm();
    const double radius = options.init_radius * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
    if (norm > 0.0) row *= radius / norm;
  }

  std::vector<std::vector<std::size_t>> neighbors(n_nodes);
  for (const auto& [p, c] : edges.edges) {
    neighbors[p].push_back(c);
    neighbors[c].push_back(p);
  }
  for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());

  std::vector<std::size_t> order(edges.edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uniform_int_distribution<std::size_t> pick(0, n_nodes - 1);
  std::vector<std::size_t> negatives;
  Matrix grad = Matrix::Zero(out.table.rows(), out.table.cols());
  std::vector<std::size_t> touched;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const double lr = epoch <= options.burn_in_epochs ? options.lr * options.burn_in_lr_factor : options.lr;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t e : order) {
      const auto [u, v] = edges.edges[e];
      const auto& nb = neighbors[u];
      negatives.clear();
      if (n_nodes - 1 > nb.size()) {
        while (negatives.size() < static_cast<std::size_t>(options.n_negatives)) {
          const std::size_t w = pick(rng);
          if (w == u || std::binary_search(nb.begin(), nb.end(), w)) continue;
          negatives.push_back(w);
        }
      }

      touched.assign({u, v});
      touched.insert(touched.end(), negatives.begin(), negatives.end());
      for (std::size_t r : touched) grad.row(static_cast<Eigen::Index>(r)).setZero();
      edge_ranking_loss(out.table, u, v, negatives, &grad);

      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (std::size_t r : touched) {
        auto row = out.table.row(static_cast<Eigen::Index>(r));
        const double sq = row.squaredNorm();
        const double scale = (1.0 - sq) * (1.0 - sq) / 4.0;
        row -= lr * scale * grad.row(static_cast<Eigen::Index>(r));
        const double norm = row.norm();
        if (norm >= 1.0 - options.ball_eps) row *= (1.0 - options.ball_eps) / norm;
      }
    }
    if (observer) observer(epoch, out.table);
  }
  return out;
}

Matrix extract_level(const PoincareEmbeddings& embeddings, int level) {
  if (level < 1 || level > kTreeDepth) {
    throw DomainError("embedding level must be in [1, 4], got " + std::to_string(level));
  }
  const auto k = static_cast<std::size_t>(level);
  return embeddings.table.middleRows(static_cast<Eigen::Index>(embeddings.offset[k]),
                                     static_cast<Eigen::Index>(embeddings.count[k]));
}

}  // namespace xrlat
