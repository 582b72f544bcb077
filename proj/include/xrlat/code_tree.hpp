// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xrlat/common.hpp"

namespace xrlat {

/// Levels below the virtual root: 1 = Chapter, 2 = Block, 3 = Category, 4 = Code.
inline constexpr int kTreeDepth = 4;

/// Sparse binary V_k x V_{k-1} matrix with exactly one 1 per row, stored as
/// the parent column of each row.
class IndexingMatrix {
 public:
  IndexingMatrix() = default;
  IndexingMatrix(std::vector<std::size_t> parent_of, std::size_t n_parents);

  std::size_t rows() const noexcept { return parent_of_.size(); }
  std::size_t cols() const noexcept { return n_parents_; }
  std::size_t parent(std::size_t row) const { return parent_of_.at(row); }
  const std::vector<std::size_t>& parents() const noexcept { return parent_of_; }

  /// Child rows grouped by parent column, children in ascending order.
  std::vector<std::vector<std::size_t>> children() const;

  /// Row-wise product T * W: row i of the result is row parent(i) of `weights`.
  Matrix gather(const Matrix& weights) const;

 private:
  std::vector<std::size_t> parent_of_;
  std::size_t n_parents_ = 0;
};

/// N x V binary matrix in sparse row form (sorted, duplicate-free indices).
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t n_labels, std::vector<std::vector<std::size_t>> rows);

  std::size_t n_instances() const noexcept { return rows_.size(); }
  std::size_t n_labels() const noexcept { return n_labels_; }
  const std::vector<std::size_t>& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<std::vector<std::size_t>>& rows() const noexcept { return rows_; }

  /// Dense 0/1 row of length n_labels.
  std::vector<std::uint8_t> dense_row(std::size_t i) const;

  bool operator==(const LabelMatrix&) const = default;

 private:
  std::size_t n_labels_ = 0;
  std::vector<std::vector<std::size_t>> rows_;
};

class CodeTree {
 public:
  using Path = std::array<std::string, kTreeDepth>;

  /// Builds a tree from full chapter/block/category/code paths. Node order
  /// is lexicographic by identifier within each level.
  static CodeTree from_paths(const std::vector<Path>& paths);

  /// Parses a hierarchy file: one `chapter/block/category/code` per line,
  /// `#` comment lines and blank lines ignored.
  static CodeTree load(const std::filesystem::path& file);
  static CodeTree parse(std::string_view text);

  /// V_k; level 0 is the virtual root with one node.
  std::size_t size(int level) const;
  const std::vector<std::string>& ids(int level) const;
  std::optional<std::size_t> find(int level, std::string_view id) const;

  /// T^(k) for k = 1..4 (k = 1 maps every chapter to the root).
  const IndexingMatrix& indexing(int level) const;

  /// Total node count including the virtual root.
  std::size_t total_nodes() const noexcept;

  /// Every leaf path in node order, one per code.
  std::vector<Path> leaf_paths() const;

 private:
  static void check_level(int level);

  std::array<std::vector<std::string>, kTreeDepth + 1> ids_;
  std::array<std::unordered_map<std::string, std::size_t>, kTreeDepth + 1> lookup_;
  std::array<IndexingMatrix, kTreeDepth + 1> indexing_;
};

/// L^(k-1) = binary(L^(k) T^(k)).
LabelMatrix propagate_labels(const LabelMatrix& labels, const IndexingMatrix& indexing);

/// Propagates Code-level labels up to `level` (1..4).
LabelMatrix labels_at_level(const LabelMatrix& codes, const CodeTree& tree, int level);

struct LevelStats {
  int level = 0;
  std::size_t nodes = 0;
  std::size_t fanout_min = 0;
  double fanout_mean = 0.0;
  std::size_t fanout_max = 0;
};

/// Per-level node counts and fanout of the parent level into this one.
std::vector<LevelStats> tree_stats(const CodeTree& tree);
std::string format_tree_stats(const CodeTree& tree);

}  // namespace xrlat
