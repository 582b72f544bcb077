// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xrlat/code_tree.hpp"
#include "xrlat/text.hpp"

namespace xrlat {

/// One line of a dataset file: `doc_id<TAB>code1;code2;...<TAB>text`.
struct RawDocument {
  std::string id;
  std::vector<std::string> codes;
  std::string text;

  bool operator==(const RawDocument&) const = default;
};

inline constexpr const char* kDatasetHeader = "doc_id\tcodes\ttext";

std::vector<RawDocument> parse_dataset(std::string_view content);
std::vector<RawDocument> read_dataset(const std::filesystem::path& file);
std::string serialize_dataset(const std::vector<RawDocument>& docs);
void write_dataset(const std::filesystem::path& file, const std::vector<RawDocument>& docs);

/// Documents chunked with a fixed vocabulary plus Code-level gold labels.
struct EncodedDataset {
  std::vector<std::string> ids;
  std::vector<ChunkedDocument> docs;
  LabelMatrix codes;

  std::size_t size() const noexcept { return docs.size(); }
};

/// Cleans, tokenizes and chunks every document and maps its codes onto the
/// tree's Code level. Every document must keep >= 1 token and >= 1 code.
EncodedDataset encode_dataset(const std::vector<RawDocument>& docs, const CodeTree& tree,
                              const Vocabulary& vocab, int chunk_len, int n_chunks);

/// Cleaned texts, for vocabulary construction.
std::vector<std::string> cleaned_texts(const std::vector<RawDocument>& docs);

struct SynthOptions {
  std::size_t n_docs = 2000;
  double codes_per_doc_mean = 3.0;
  double trigger_prob = 0.9;
  std::size_t filler_vocab = 500;
  std::size_t doc_len = 128;
  std::uint64_t seed = 7;
};

/// Name of the two trigger tokens owned by a leaf code (index 0 or 1).
std::string trigger_token(const std::string& code, int which);

/// Synthetic hierarchical corpus: each leaf code owns two trigger tokens,
/// each injected with probability trigger_prob into documents carrying the
/// code; the remaining positions are filler words.
std::vector<RawDocument> synth_corpus(const CodeTree& tree, const SynthOptions& options);

}  // namespace xrlat
