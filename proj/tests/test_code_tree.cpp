// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "xrlat/code_tree.hpp"

using namespace xrlat;
using xrlat::testing::random_tree;

TEST_CASE("single chain tree") {
  const CodeTree t = CodeTree::parse("A/A1/A11/A112\nA/A1/A11/A111\n");
  CHECK(t.size(0) == 1);
  CHECK(t.size(1) == 1);
  CHECK(t.size(2) == 1);
  CHECK(t.size(3) == 1);
  CHECK(t.size(4) == 2);
  CHECK(t.ids(4) == std::vector<std::string>{"A111", "A112"});
  CHECK(t.indexing(4).parent(0) == 0);
  CHECK(t.indexing(4).parent(1) == 0);
  CHECK(t.total_nodes() == 6);
  for (const auto& s : tree_stats(t)) {
    CHECK(s.fanout_min == (s.level == 4 ? 2u : 1u));
    CHECK(s.fanout_max == s.fanout_min);
  }
}

TEST_CASE("node order is lexicographic per level") {
  const CodeTree t = CodeTree::parse("# comment\n\nz/zb/zc/z1\na/ab/ac/a2\na/ab/ac/a1\n");
  CHECK(t.ids(1) == std::vector<std::string>{"a", "z"});
  CHECK(t.ids(4) == std::vector<std::string>{"a1", "a2", "z1"});
  CHECK(t.find(4, "z1") == std::optional<std::size_t>(2));
  CHECK_FALSE(t.find(4, "nope").has_value());
  CHECK(t.indexing(4).parent(2) == 1);
  CHECK(t.indexing(1).cols() == 1);
}

TEST_CASE("hierarchy parse errors") {
  SUBCASE("wrong component count carries the line") {
    try {
      CodeTree::parse("a/b/c/d\na/b/c\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("empty component") { CHECK_THROWS_AS(CodeTree::parse("a//c/d\n"), ParseError); }
  SUBCASE("duplicate path") { CHECK_THROWS_AS(CodeTree::parse("a/b/c/d\na/b/c/d\n"), InputError); }
  SUBCASE("node with two parents") { CHECK_THROWS_AS(CodeTree::parse("a/b/c/d\nx/b/c2/d2\n"), InputError); }
  SUBCASE("empty file") { CHECK_THROWS_AS(CodeTree::parse("# only a comment\n"), InputError); }
  SUBCASE("missing file") { CHECK_THROWS_AS(CodeTree::load("/nonexistent/tree.txt"), InputError); }
}

TEST_CASE("demo hierarchy is 3/9/27/81 with three children per parent") {
  const CodeTree t = CodeTree::load(xrlat::testing::demo_hierarchy());
  CHECK(t.size(1) == 3);
  CHECK(t.size(2) == 9);
  CHECK(t.size(3) == 27);
  CHECK(t.size(4) == 81);
  for (int k = 1; k <= 4; ++k) {
    for (const auto& kids : t.indexing(k).children()) CHECK(kids.size() == 3);
  }
  for (const auto& s : tree_stats(t)) {
    CHECK(s.fanout_min == 3);
    CHECK(s.fanout_max == 3);
    CHECK(s.fanout_mean == doctest::Approx(3.0));
  }
  CHECK(format_tree_stats(t).find("4\tcode\t81\t3\t3.0000\t3") != std::string::npos);
}

TEST_CASE("propagate_labels examples") {
  const IndexingMatrix t({0, 0, 1}, 2);
  const LabelMatrix l(3, {{0, 1}, {}, {2}});
  const LabelMatrix up = propagate_labels(l, t);
  CHECK(up.n_labels() == 2);
  CHECK(up.row(0) == std::vector<std::size_t>{0});
  CHECK(up.row(1).empty());
  CHECK(up.row(2) == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(propagate_labels(LabelMatrix(4, {{0}}), t), ShapeError);
}

TEST_CASE("indexing matrices have one parent per row and gather copies parent rows") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CodeTree t = random_tree(rng);
    for (int k = 1; k <= 4; ++k) {
      const auto& idx = t.indexing(k);
      CHECK(idx.rows() == t.size(k));
      CHECK(idx.cols() == t.size(k - 1));
      std::size_t total = 0;
      for (const auto& kids : idx.children()) {
        CHECK_FALSE(kids.empty());
        total += kids.size();
      }
      CHECK(total == idx.rows());
      Matrix w = Matrix::Random(static_cast<Eigen::Index>(idx.cols()), 3);
      const Matrix g = idx.gather(w);
      for (std::size_t r = 0; r < idx.rows(); ++r) {
        CHECK(g.row(static_cast<Eigen::Index>(r)) == w.row(static_cast<Eigen::Index>(idx.parent(r))));
      }
    }
  }
}

TEST_CASE("propagate_labels equals a per-parent OR loop on random instances") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const CodeTree t = random_tree(rng, 5);
    const std::size_t n = 1 + rng() % 60;
    const std::size_t v = t.size(4);
    std::vector<std::vector<std::size_t>> rows(n);
    for (auto& r : rows) {
      for (std::size_t j = 0; j < v; ++j) {
        if (rng() % 4 == 0) r.push_back(j);
      }
    }
    const LabelMatrix l4(v, rows);
    for (int k = 4; k >= 2; --k) {
      const LabelMatrix lk = labels_at_level(l4, t, k);
      const LabelMatrix up = propagate_labels(lk, t.indexing(k));
      const auto kids = t.indexing(k).children();
      for (std::size_t i = 0; i < n; ++i) {
        const auto dense = lk.dense_row(i);
        const auto got = up.dense_row(i);
        for (std::size_t p = 0; p < kids.size(); ++p) {
          std::uint8_t any = 0;
          for (auto c : kids[p]) any |= dense[c];
          CHECK(got[p] == any);
        }
      }
      CHECK(up == labels_at_level(l4, t, k - 1));
      CHECK(propagate_labels(up, IndexingMatrix(std::vector<std::size_t>(up.n_labels(), 0), 1)).n_labels() == 1);
    }
  }
}

TEST_CASE("label matrix validation") {
  CHECK_THROWS_AS(LabelMatrix(3, {{3}}), ShapeError);
  CHECK_THROWS_AS(LabelMatrix(3, {{2, 0}}), ShapeError);
  CHECK_THROWS_AS(LabelMatrix(3, {{1, 1}}), ShapeError);
  const LabelMatrix l(3, {{0, 2}});
  CHECK(l.dense_row(0) == std::vector<std::uint8_t>{1, 0, 1});
}
