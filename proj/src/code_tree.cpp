// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/code_tree.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace xrlat {

IndexingMatrix::IndexingMatrix(std::vector<std::size_t> parent_of, std::size_t n_parents)
    : parent_of_(std::move(parent_of)), n_parents_(n_parents) {
  for (std::size_t p : parent_of_) {
    if (p >= n_parents_) throw ShapeError("indexing matrix column out of range");
  }
}

std::vector<std::vector<std::size_t>> IndexingMatrix::children() const {
  std::vector<std::vector<std::size_t>> out(n_parents_);
  for (std::size_t i = 0; i < parent_of_.size(); ++i) out[parent_of_[i]].push_back(i);
  return out;
}

Matrix IndexingMatrix::gather(const Matrix& weights) const {
  if (static_cast<std::size_t>(weights.rows()) != n_parents_) {
    throw ShapeError("indexing matrix has " + std::to_string(n_parents_) +
                     " columns but weights have " + std::to_string(weights.rows()) + " rows");
  }
  Matrix out(static_cast<Eigen::Index>(rows()), weights.cols());
  for (std::size_t i = 0; i < rows(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = weights.row(static_cast<Eigen::Index>(parent_of_[i]));
  }
  return out;
}

LabelMatrix::LabelMatrix(std::size_t n_labels, std::vector<std::vector<std::size_t>> rows)
    : n_labels_(n_labels), rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] >= n_labels_) throw ShapeError("label index out of range");
      if (j > 0 && r[j] <= r[j - 1]) throw ShapeError("label row not sorted or has duplicates");
    }
  }
}

std::vector<std::uint8_t> LabelMatrix::dense_row(std::size_t i) const {
  std::vector<std::uint8_t> out(n_labels_, 0);
  for (std::size_t j : rows_.at(i)) out[j] = 1;
  return out;
}

void CodeTree::check_level(int level) {
  if (level < 0 || level > kTreeDepth) {
    throw DomainError("tree level must be in [0, 4], got " + std::to_string(level));
  }
}

CodeTree CodeTree::from_paths(const std::vector<Path>& paths) {
  if (paths.empty()) throw InputError("hierarchy is empty");

  // parent id (at level k-1) of each id at level k
  std::array<std::map<std::string, std::string>, kTreeDepth + 1> parent_id;
  std::set<Path> seen;
  for (const Path& path : paths) {
    if (!seen.insert(path).second) {
      throw InputError("duplicate code path: " + path[0] + "/" + path[1] + "/" + path[2] + "/" + path[3]);
    }
    for (int k = 1; k <= kTreeDepth; ++k) {
      const std::string& id = path[static_cast<std::size_t>(k - 1)];
      const std::string parent = k == 1 ? std::string() : path[static_cast<std::size_t>(k - 2)];
      auto [it, inserted] = parent_id[static_cast<std::size_t>(k)].emplace(id, parent);
      if (!inserted && it->second != parent) {
        throw InputError("node '" + id + "' at level " + std::to_string(k) +
                         " has two parents: '" + it->second + "' and '" + parent + "'");
      }
    }
  }

  CodeTree tree;
  tree.ids_[0] = {""};
  tree.lookup_[0].emplace("", 0);
  for (int k = 1; k <= kTreeDepth; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    auto& ids = tree.ids_[ku];
    for (const auto& [id, parent] : parent_id[ku]) ids.push_back(id);  // std::map iterates sorted
    for (std::size_t i = 0; i < ids.size(); ++i) tree.lookup_[ku].emplace(ids[i], i);

    std::vector<std::size_t> parent_of(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      parent_of[i] = tree.lookup_[ku - 1].at(parent_id[ku].at(ids[i]));
    }
    tree.indexing_[ku] = IndexingMatrix(std::move(parent_of), tree.ids_[ku - 1].size());
  }
  return tree;
}

CodeTree CodeTree::parse(std::string_view text) {
  std::vector<Path> paths;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);

    Path path;
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t slash = line.find('/', start);
      std::string_view part = line.substr(start, slash == std::string_view::npos ? line.npos : slash - start);
      if (n >= path.size()) throw ParseError("expected 4 '/'-separated components", line_no);
      if (part.empty()) throw ParseError("empty path component", line_no);
      path[n++] = std::string(part);
      if (slash == std::string_view::npos) break;
      start = slash + 1;
    }
    if (n != path.size()) throw ParseError("expected 4 '/'-separated components", line_no);
    paths.push_back(std::move(path));
  }
  if (paths.empty()) throw InputError("hierarchy file has no codes");
  return from_paths(paths);
}

CodeTree CodeTree::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open hierarchy file: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::size_t CodeTree::size(int level) const {
  check_level(level);
  return ids_[static_cast<std::size_t>(level)].size();
}

const std::vector<std::string>& CodeTree::ids(int level) const {
  check_level(level);
  return ids_[static_cast<std::size_t>(level)];
}

std::optional<std::size_t> CodeTree::find(int level, std::string_view id) const {
  check_level(level);
  const auto& m = lookup_[static_cast<std::size_t>(level)];
  auto it = m.find(std::string(id));
  if (it == m.end()) return std::nullopt;
  return it->second;
}

const IndexingMatrix& CodeTree::indexing(int level) const {
  if (level < 1 || level > kTreeDepth) {
    throw DomainError("indexing matrix level must be in [1, 4], got " + std::to_string(level));
  }
  return indexing_[static_cast<std::size_t>(level)];
}

std::size_t CodeTree::total_nodes() const noexcept {
  std::size_t n = 0;
  for (const auto& level : ids_) n += level.size();
  return n;
}

std::vector<CodeTree::Path> CodeTree::leaf_paths() const {
  std::vector<Path> out(size(kTreeDepth));
  for (std::size_t leaf = 0; leaf < out.size(); ++leaf) {
    std::size_t node = leaf;
    for (int k = kTreeDepth; k >= 1; --k) {
      out[leaf][static_cast<std::size_t>(k - 1)] = ids_[static_cast<std::size_t>(k)][node];
      node = indexing_[static_cast<std::size_t>(k)].parent(node);
    }
  }
  return out;
}

LabelMatrix propagate_labels(const LabelMatrix& labels, const IndexingMatrix& indexing) {
  if (labels.n_labels() != indexing.rows()) {
    throw ShapeError("label matrix has " + std::to_string(labels.n_labels()) +
                     " columns but indexing matrix has " + std::to_string(indexing.rows()) + " rows");
  }
  std::vector<std::vector<std::size_t>> rows;
  rows.reserve(labels.n_instances());
  for (const auto& row : labels.rows()) {
    std::vector<std::size_t> parents;
    parents.reserve(row.size());
    for (std::size_t c : row) parents.push_back(indexing.parent(c));
    std::sort(parents.begin(), parents.end());
    parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
    rows.push_back(std::move(parents));
  }
  return LabelMatrix(indexing.cols(), std::move(rows));
}

LabelMatrix labels_at_level(const LabelMatrix& codes, const CodeTree& tree, int level) {
  if (level < 1 || level > kTreeDepth) throw DomainError("label level must be in [1, 4]");
  LabelMatrix out = codes;
  for (int k = kTreeDepth; k > level; --k) out = propagate_labels(out, tree.indexing(k));
  return out;
}

std::vector<LevelStats> tree_stats(const CodeTree& tree) {
  std::vector<LevelStats> out;
  for (int k = 1; k <= kTreeDepth; ++k) {
    LevelStats s;
    s.level = k;
    s.nodes = tree.size(k);
    auto groups = tree.indexing(k).children();
    s.fanout_min = groups.empty() ? 0 : groups.front().size();
    for (const auto& g : groups) {
      s.fanout_min = std::min(s.fanout_min, g.size());
      s.fanout_max = std::max(s.fanout_max, g.size());
    }
    s.fanout_mean = static_cast<double>(s.nodes) / static_cast<double>(groups.size());
    out.push_back(s);
  }
  return out;
}

std::string format_tree_stats(const CodeTree& tree) {
  static constexpr std::array<const char*, kTreeDepth> kNames = {"chapter", "block", "category", "code"};
  std::ostringstream os;
  os << "level\tname\tnodes\tfanout_min\tfanout_mean\tfanout_max\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& s : tree_stats(tree)) {
    os << s.level << '\t' << kNames[static_cast<std::size_t>(s.level - 1)] << '\t' << s.nodes << '\t'
       << s.fanout_min << '\t' << s.fanout_mean << '\t' << s.fanout_max << '\n';
  }
  return os.str();
}

}  // namespace xrlat
