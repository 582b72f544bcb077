// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "xrlat/code_tree.hpp"
#include "xrlat/common.hpp"

namespace xrlat {

/// Hyperbolic distance in the Poincare ball:
/// arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2))). Throws DomainError when
/// either point is on or outside the unit sphere.
double poincare_distance(std::span<const double> u, std::span<const double> v);

/// Euclidean gradient of poincare_distance with respect to `u`.
/// Zero when u == v.
void poincare_distance_grad(std::span<const double> u, std::span<const double> v, std::span<double> grad_u);

/// Parent/child pairs over the flattened tree. Flat index 0 is the virtual
/// root; level k node i sits at offset(k) + i.
struct EdgeSet {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::array<std::size_t, kTreeDepth + 1> offset{};
  std::size_t n_nodes = 0;

  static EdgeSet from_tree(const CodeTree& tree);
  std::size_t flat_index(int level, std::size_t node) const { return offset.at(static_cast<std::size_t>(level)) + node; }
};

struct PoincareEmbeddings {
  /// Flat node table including the root (row 0), see EdgeSet for indexing.
  Matrix table;
  std::array<std::size_t, kTreeDepth + 1> offset{};
  std::array<std::size_t, kTreeDepth + 1> count{};
  double ball_eps = 1e-5;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(table.cols()); }
};

struct PoincareOptions {
  int dim = 50;
  int epochs = 50;
  double lr = 0.1;
  int n_negatives = 10;
  std::uint64_t seed = 2022;
  int burn_in_epochs = 10;
  double burn_in_lr_factor = 0.1;
  double init_radius = 1e-3;
  double ball_eps = 1e-5;
};

/// Softmax ranking loss of one edge against its sampled negatives,
/// -log(exp(-d(u,v)) / sum_{w in {v} + negatives} exp(-d(u,w))).
/// When `grad` is non-null the Euclidean gradient is accumulated into it.
double edge_ranking_loss(const Matrix& table, std::size_t u, std::size_t v,
                         std::span<const std::size_t> negatives, Matrix* grad);

/// Rescales rows whose norm reaches 1 - eps back onto that radius.
void project_to_ball(Matrix& table, double eps);

/// Called after every epoch (1-based) with the current table.
using EpochObserver = std::function<void(int epoch, const Matrix& table)>;

/// Trains embeddings for every tree node with Riemannian SGD. epochs == 0
/// returns the seeded initialization.
PoincareEmbeddings train_poincare(const CodeTree& tree, const PoincareOptions& options,
                                  const EpochObserver& observer = {});

/// V_k x d rows for level k in tree node order.
Matrix extract_level(const PoincareEmbeddings& embeddings, int level);

}  // namespace xrlat
