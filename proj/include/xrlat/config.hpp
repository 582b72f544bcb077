// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xrlat/trainer.hpp"

namespace xrlat {

/// Flat `key = value` run configuration: every TrainConfig field plus paths.
struct RunConfig {
  std::filesystem::path tree;
  std::filesystem::path train_data;
  std::filesystem::path test_data;
  std::filesystem::path embeddings;
  std::filesystem::path output_dir;
  int min_frequency = 1;
  /// When > 0, max_steps is derived as epochs * floor(N / batch_size).
  std::size_t epochs = 0;
  /// Unset means 5% of max_steps.
  std::optional<std::size_t> warmup_steps;
  TrainConfig train;

  /// Fills max_steps (from epochs) and warmup_steps for a training set of
  /// `n_docs` documents, then validates.
  void resolve(std::size_t n_docs);

  /// Every key with its resolved value, one `key=value` per line.
  std::string format() const;
};

/// Recognized keys in echo order.
const std::vector<std::string>& run_config_keys();

/// Applies one key. Relative paths are joined onto `base_dir`. Throws
/// ConfigError for unknown keys and malformed values.
void set_run_config_value(RunConfig& cfg, const std::string& key, const std::string& value,
                          const std::filesystem::path& base_dir = {});

/// Parses file content; `#` starts a comment line, duplicate keys are errors.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});

/// File, then `key=value` overrides (paths relative to the working
/// directory), then the seed flag.
RunConfig load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides,
                          std::optional<std::uint64_t> seed);

}  // namespace xrlat
