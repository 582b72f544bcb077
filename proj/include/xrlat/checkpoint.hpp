// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xrlat/bootstrap.hpp"
#include "xrlat/hyperbolic.hpp"

namespace xrlat {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic `XRLT`, u32 version, u32-length-prefixed
/// metadata block of `key=value` lines, u32 tensor count, then per tensor
/// u32 name length, name, u32 rank, u64 dims, f64 row-major data. All
/// integers and floats little-endian.
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, Matrix>> tensors;

  bool has_meta(std::string_view key) const;
  const std::string& meta(std::string_view key) const;
  void set_meta(const std::string& key, std::string value);

  bool has_tensor(std::string_view name) const;
  const Matrix& tensor(std::string_view name) const;
  void add_tensor(const std::string& name, Matrix value);
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

/// Written to a sibling temp file and renamed into place.
void write_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& file);

/// Writes `content` via temp file + rename.
void write_file_atomic(const std::filesystem::path& file, std::string_view content);
std::string read_file(const std::filesystem::path& file);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// What a model checkpoint records besides its tensors.
struct ModelMeta {
  std::string mode = "plm-icd";  // plm-icd or xr-lat
  int chunk_len = 16;
  int n_chunks = 8;
  std::size_t vocab_size = 0;
  std::string vocab_hash;
  std::uint64_t seed = 0;
  std::string bootstrap = "none";
  bool negative_sampling = false;
  double binary_threshold = 0.5;
  double decision_threshold = 0.5;
};

Checkpoint model_checkpoint(const LevelModel& model, const ModelMeta& meta);

struct LoadedModel {
  LevelModel model;
  ModelMeta meta;
};
LoadedModel model_from_checkpoint(const Checkpoint& ckpt);

/// Tensors `E1..E4`; the virtual root is not stored.
Checkpoint embeddings_checkpoint(const PoincareEmbeddings& emb, const PoincareOptions& options);
/// Rebuilds the flat table with a zero root row.
PoincareEmbeddings embeddings_from_checkpoint(const Checkpoint& ckpt);

}  // namespace xrlat
