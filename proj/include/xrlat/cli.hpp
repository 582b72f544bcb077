// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xrlat/code_tree.hpp"
#include "xrlat/dataset.hpp"
#include "xrlat/metrics.hpp"

namespace xrlat {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

/// Entry point of the `xrlat` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

enum class CascadeMode { kAuto, kOn, kOff };

/// Scores every document of `docs` with the model(s) stored in `model_dir`
/// (model.ckpt, or level1..4.ckpt, plus vocab.txt and hierarchy.txt).
/// Cascade defaults to the chain's negative-sampling setting.
PredictionSet predict_model_dir(const std::filesystem::path& model_dir, const std::vector<RawDocument>& docs,
                                CascadeMode cascade = CascadeMode::kAuto);

/// Score file: `doc_id<TAB>s_1 ... s_L` per line, codes in tree order.
std::string format_scores(const std::vector<RawDocument>& docs, const Matrix& scores);
Matrix parse_scores(std::string_view content, const std::vector<RawDocument>& docs, std::size_t n_codes);

/// Dense N x V_4 gold matrix of a dataset against the tree.
std::vector<std::vector<std::uint8_t>> gold_matrix(const std::vector<RawDocument>& docs, const CodeTree& tree);

}  // namespace xrlat
