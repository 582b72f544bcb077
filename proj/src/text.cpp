// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace xrlat {

namespace {

bool is_rule_char(char c) { return c == '=' || c == '-' || c == '_'; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string clean_text(std::string_view raw) {
  // Removed spans become a single space so nothing on either side can fuse
  // into a new run or surrogate.
  std::string stripped;
  stripped.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw.compare(i, 3, "[**") == 0) {
      const std::size_t close = raw.find("**]", i + 3);
      if (close != std::string_view::npos) {
        stripped.push_back(' ');
        i = close + 3;
        continue;
      }
    }
    if (is_rule_char(raw[i])) {
      std::size_t j = i;
      while (j < raw.size() && is_rule_char(raw[j])) ++j;
      if (j - i >= 2) {
        stripped.push_back(' ');
      } else {
        stripped.push_back(raw[i]);
      }
      i = j;
      continue;
    }
    stripped.push_back(raw[i]);
    ++i;
  }

  std::string out;
  out.reserve(stripped.size());
  bool pending_space = false;
  for (char c : stripped) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && std::ispunct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string w(text.substr(b, e - b));
      for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      words.push_back(std::move(w));
    }
    i = j;
  }
  return words;
}

Vocabulary::Vocabulary() : tokens_{"<pad>", "<unk>"} {
  index_.emplace(tokens_[0], kPadId);
  index_.emplace(tokens_[1], kUnkId);
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, int min_frequency) {
  if (texts.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& w : split_words(text)) ++counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= static_cast<std::size_t>(std::max(min_frequency, 1))) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  vocab.min_frequency_ = min_frequency;
  for (auto& [tok, n] : kept) {
    if (vocab.index_.contains(tok)) continue;  // literal "<pad>"/"<unk>" in text stay reserved
    vocab.index_.emplace(tok, static_cast<TokenId>(vocab.tokens_.size()));
    vocab.tokens_.push_back(tok);
  }
  return vocab;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& file) const {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot write vocabulary: " + file.string());
  os << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open vocabulary: " + file.string());
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.index_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (!vocab.index_.emplace(line, static_cast<TokenId>(vocab.tokens_.size())).second) {
      throw ParseError("duplicate vocabulary token '" + line + "'", vocab.tokens_.size() + 1);
    }
    vocab.tokens_.push_back(line);
  }
  if (vocab.tokens_.size() < 2 || vocab.tokens_[0] != "<pad>" || vocab.tokens_[1] != "<unk>") {
    throw InputError("vocabulary file must start with <pad> and <unk>: " + file.string());
  }
  return vocab;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end() || it->second == kPadId) return kUnkId;
  return it->second;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

std::size_t ChunkedDocument::real_tokens() const noexcept {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

std::span<const TokenId> ChunkedDocument::chunk(int index) const {
  return std::span<const TokenId>(ids).subspan(static_cast<std::size_t>(index * chunk_len),
                                               static_cast<std::size_t>(chunk_len));
}

ChunkedDocument chunk(std::span<const TokenId> tokens, int chunk_len, int n_chunks) {
  if (chunk_len < 1 || n_chunks < 1) throw ConfigError("chunk length and chunk count must be >= 1");
  if (chunk_len > kMaxChunkLength) {
    throw ConfigError("chunk length " + std::to_string(chunk_len) + " exceeds the maximum of 512");
  }
  ChunkedDocument doc;
  doc.chunk_len = chunk_len;
  doc.n_chunks = n_chunks;
  const std::size_t z = static_cast<std::size_t>(chunk_len) * static_cast<std::size_t>(n_chunks);
  const std::size_t kept = std::min(tokens.size(), z);
  doc.ids.assign(z, kPadId);
  doc.flags.assign(z, 0);
  std::copy_n(tokens.begin(), kept, doc.ids.begin());
  std::fill_n(doc.flags.begin(), kept, std::uint8_t{1});
  return doc;
}

}  // namespace xrlat
