// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace xrlat {

std::vector<RawDocument> parse_dataset(std::string_view content) {
  std::vector<RawDocument> docs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!header_seen) {
      if (line != kDatasetHeader) throw ParseError("dataset must start with the header 'doc_id<TAB>codes<TAB>text'", line_no);
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) throw ParseError("expected 3 tab-separated fields", line_no);

    RawDocument doc;
    doc.id = std::string(line.substr(0, t1));
    if (doc.id.empty()) throw ParseError("empty document id", line_no);
    std::string_view codes = line.substr(t1 + 1, t2 - t1 - 1);
    std::size_t start = 0;
    while (start <= codes.size() && !codes.empty()) {
      std::size_t semi = codes.find(';', start);
      std::string_view code = codes.substr(start, semi == std::string_view::npos ? codes.npos : semi - start);
      if (!code.empty()) doc.codes.emplace_back(code);
      if (semi == std::string_view::npos) break;
      start = semi + 1;
    }
    doc.text = std::string(line.substr(t2 + 1));
    docs.push_back(std::move(doc));
  }
  if (!header_seen) throw ParseError("dataset is missing its header line", 1);
  return docs;
}

std::vector<RawDocument> read_dataset(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open dataset: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::string serialize_dataset(const std::vector<RawDocument>& docs) {
  std::string out = kDatasetHeader;
  out += '\n';
  for (const auto& doc : docs) {
    out += doc.id;
    out += '\t';
    for (std::size_t i = 0; i < doc.codes.size(); ++i) {
      if (i > 0) out += ';';
      out += doc.codes[i];
    }
    out += '\t';
    out += doc.text;
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& file, const std::vector<RawDocument>& docs) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot write dataset: " + file.string());
  os << serialize_dataset(docs);
}

std::vector<std::string> cleaned_texts(const std::vector<RawDocument>& docs) {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(clean_text(d.text));
  return out;
}

EncodedDataset encode_dataset(const std::vector<RawDocument>& docs, const CodeTree& tree,
                              const Vocabulary& vocab, int chunk_len, int n_chunks) {
  EncodedDataset out;
  std::vector<std::vector<std::size_t>> rows;
  rows.reserve(docs.size());
  for (const auto& d : docs) {
    const auto tokens = tokenize(clean_text(d.text), vocab);
    if (tokens.empty()) throw InputError("document '" + d.id + "' has no tokens after cleaning");
    std::vector<std::size_t> row;
    for (const auto& code : d.codes) {
      auto idx = tree.find(kTreeDepth, code);
      if (!idx) throw InputError("document '" + d.id + "' has code '" + code + "' not present in the hierarchy");
      row.push_back(*idx);
    }
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    if (row.empty()) throw InputError("document '" + d.id + "' has no codes");
    out.ids.push_back(d.id);
    out.docs.push_back(chunk(tokens, chunk_len, n_chunks));
    rows.push_back(std::move(row));
  }
  out.codes = LabelMatrix(tree.size(kTreeDepth), std::move(rows));
  return out;
}

std::string trigger_token(const std::string& code, int which) {
  std::string tok = "trg";
  for (char c : code) tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  tok.push_back(which == 0 ? 'a' : 'b');
  return tok;
}

std::vector<RawDocument> synth_corpus(const CodeTree& tree, const SynthOptions& options) {
  if (!(options.trigger_prob >= 0.0 && options.trigger_prob <= 1.0)) {
    throw ConfigError("trigger_prob must be in [0, 1]");
  }
  if (!(options.codes_per_doc_mean >= 1.0)) throw ConfigError("codes_per_doc_mean must be >= 1");
  const auto min_len = static_cast<std::size_t>(2.0 * std::ceil(options.codes_per_doc_mean));
  if (options.doc_len < min_len) {
    throw ConfigError("doc_len " + std::to_string(options.doc_len) + " cannot hold the triggers of " +
                      std::to_string(min_len / 2) + " codes");
  }
  if (options.filler_vocab == 0) throw ConfigError("filler_vocab must be >= 1");

  const auto& leaves = tree.ids(kTreeDepth);
  const std::size_t max_codes = std::min(leaves.size(), options.doc_len / 2);

  std::mt19937_64 rng(options.seed);
  std::poisson_distribution<int> extra(options.codes_per_doc_mean - 1.0);
  std::bernoulli_distribution inject(options.trigger_prob);
  std::uniform_int_distribution<std::size_t> filler(0, options.filler_vocab - 1);

  const int width = static_cast<int>(std::to_string(options.filler_vocab - 1).size());
  std::vector<std::string> filler_words(options.filler_vocab);
  for (std::size_t i = 0; i < options.filler_vocab; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "w%0*zu", width, i);
    filler_words[i] = buf;
  }

  std::vector<RawDocument> docs;
  docs.reserve(options.n_docs);
  std::vector<std::size_t> pool(leaves.size());
  for (std::size_t n = 0; n < options.n_docs; ++n) {
    const std::size_t count = std::min<std::size_t>(1 + static_cast<std::size_t>(extra(rng)), max_codes);

    // Partial Fisher-Yates over the leaf indices.
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<std::size_t> gold(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(gold.begin(), gold.end());

    std::vector<std::string> slots(options.doc_len);
    std::vector<std::size_t> free_slots(options.doc_len);
    for (std::size_t i = 0; i < free_slots.size(); ++i) free_slots[i] = i;
    for (std::size_t code : gold) {
      for (int which = 0; which < 2; ++which) {
        if (!inject(rng)) continue;
        std::uniform_int_distribution<std::size_t> pick(0, free_slots.size() - 1);
        const std::size_t k = pick(rng);
        slots[free_slots[k]] = trigger_token(leaves[code], which);
        free_slots[k] = free_slots.back();
        free_slots.pop_back();
      }
    }
    for (auto& s : slots) {
      if (s.empty()) s = filler_words[filler(rng)];
    }

    RawDocument doc;
    char id[32];
    std::snprintf(id, sizeof(id), "doc%06zu", n);
    doc.id = id;
    for (std::size_t code : gold) doc.codes.push_back(leaves[code]);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (i > 0) doc.text.push_back(' ');
      doc.text += slots[i];
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace xrlat
