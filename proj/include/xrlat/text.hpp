// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xrlat/common.hpp"

namespace xrlat {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr int kMaxChunkLength = 512;

/// Removes de-identification surrogates `[** ... **]` and runs of two or
/// more `=`, `-`, `_` characters, then collapses whitespace and trims.
std::string clean_text(std::string_view raw);

/// Lowercased, whitespace-split words with leading/trailing ASCII
/// punctuation stripped. Empty words are dropped.
std::vector<std::string> split_words(std::string_view text);

class Vocabulary {
 public:
  Vocabulary();

  /// Tokens counted over `texts`; those with count >= min_frequency get ids
  /// from 2 upward ordered by descending count, then lexicographically.
  static Vocabulary build(std::span<const std::string> texts, int min_frequency);

  static Vocabulary load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;
  std::string serialize() const;

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }
  int min_frequency() const noexcept { return min_frequency_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  int min_frequency_ = 1;
};

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

/// s chunks of exactly c ids laid out consecutively; padding only at the tail.
struct ChunkedDocument {
  int chunk_len = 0;
  int n_chunks = 0;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> flags;

  std::size_t total_len() const noexcept { return ids.size(); }
  std::size_t real_tokens() const noexcept;
  std::span<const TokenId> chunk(int index) const;
};

ChunkedDocument chunk(std::span<const TokenId> tokens, int chunk_len, int n_chunks);

}  // namespace xrlat
