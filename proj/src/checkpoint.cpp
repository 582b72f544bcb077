// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace xrlat {

namespace {

constexpr char kMagic[4] = {'X', 'R', 'L', 'T'};

template <class T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw InputError("checkpoint is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("checkpoint metadata '" + key + "' is not an integer: " + value);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("checkpoint metadata '" + key + "' is not a number: " + value);
}

}  // namespace

bool Checkpoint::has_meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return true;
  }
  return false;
}

const std::string& Checkpoint::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  throw InputError("checkpoint lacks metadata key '" + std::string(key) + "'");
}

void Checkpoint::set_meta(const std::string& key, std::string value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos) throw DomainError("bad metadata key: " + key);
  if (value.find('\n') != std::string::npos) throw DomainError("metadata value contains a newline: " + key);
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata.emplace_back(key, std::move(value));
}

bool Checkpoint::has_tensor(std::string_view name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return true;
  }
  return false;
}

const Matrix& Checkpoint::tensor(std::string_view name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw InputError("checkpoint lacks tensor '" + std::string(name) + "'");
}

void Checkpoint::add_tensor(const std::string& name, Matrix value) {
  if (has_tensor(name)) throw DomainError("duplicate tensor name: " + name);
  tensors.emplace_back(name, std::move(value));
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  std::string meta;
  for (const auto& [k, v] : ckpt.metadata) meta += k + "=" + v + "\n";
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, m] : ckpt.tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4) != std::string_view(kMagic, 4)) throw InputError("not a checkpoint (bad magic)");
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto meta_len = r.le<std::uint32_t>();
  std::istringstream meta{std::string(r.take(meta_len))};
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("malformed checkpoint metadata line: " + line);
    const std::string key = line.substr(0, eq);
    if (ckpt.has_meta(key)) throw InputError("duplicate checkpoint metadata key: " + key);
    ckpt.metadata.emplace_back(key, line.substr(eq + 1));
  }

  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = r.le<std::uint32_t>();
    std::string name(r.take(name_len));
    if (ckpt.has_tensor(name)) throw InputError("duplicate checkpoint tensor: " + name);
    const auto rank = r.le<std::uint32_t>();
    if (rank < 1 || rank > 2) throw InputError("tensor " + name + " has unsupported rank " + std::to_string(rank));
    std::uint64_t rows = 1, cols = r.le<std::uint64_t>();
    if (rank == 2) {
      rows = cols;
      cols = r.le<std::uint64_t>();
    }
    if (cols != 0 && rows > r.remaining() / 8 / cols) throw InputError("tensor " + name + " exceeds the payload");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (!r.done()) throw InputError("checkpoint has trailing bytes");
  return ckpt;
}

void write_file_atomic(const std::filesystem::path& file, std::string_view content) {
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file, ec);
  if (ec) throw InputError("cannot rename " + tmp.string() + " to " + file.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt) {
  write_file_atomic(file, serialize_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& file) {
  try {
    return parse_checkpoint(read_file(file));
  } catch (const InputError& e) {
    throw InputError(file.string() + ": " + e.what());
  }
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Checkpoint model_checkpoint(const LevelModel& model, const ModelMeta& meta) {
  Checkpoint c;
  const ModelParams& p = model.params;
  c.set_meta("kind", "model");
  c.set_meta("mode", meta.mode);
  c.set_meta("level", std::to_string(model.level));
  c.set_meta("provenance", to_string(model.provenance));
  c.set_meta("c", std::to_string(meta.chunk_len));
  c.set_meta("s", std::to_string(meta.n_chunks));
  c.set_meta("h", std::to_string(p.encoder.hidden()));
  c.set_meta("n_layers", std::to_string(p.encoder.blocks.size()));
  c.set_meta("n_labels", std::to_string(p.n_labels()));
  c.set_meta("vocab_size", std::to_string(meta.vocab_size));
  c.set_meta("vocab_hash", meta.vocab_hash);
  c.set_meta("seed", std::to_string(meta.seed));
  c.set_meta("bootstrap", meta.bootstrap);
  c.set_meta("negative_sampling", meta.negative_sampling ? "true" : "false");
  c.set_meta("binary_threshold", fmt_double(meta.binary_threshold));
  c.set_meta("decision_threshold", fmt_double(meta.decision_threshold));
  p.for_each([&](const std::string& name, const Matrix& m) { c.add_tensor(name, m); });
  if (p.correction) c.add_tensor("hyp.E", p.correction->embeddings);
  return c;
}

LoadedModel model_from_checkpoint(const Checkpoint& c) {
  if (!c.has_meta("kind") || c.meta("kind") != "model") throw InputError("checkpoint does not hold a model");
  LoadedModel out;
  ModelMeta& m = out.meta;
  m.mode = c.meta("mode");
  m.chunk_len = static_cast<int>(to_int("c", c.meta("c")));
  m.n_chunks = static_cast<int>(to_int("s", c.meta("s")));
  m.vocab_size = static_cast<std::size_t>(to_int("vocab_size", c.meta("vocab_size")));
  m.vocab_hash = c.meta("vocab_hash");
  m.seed = static_cast<std::uint64_t>(to_int("seed", c.meta("seed")));
  m.bootstrap = c.meta("bootstrap");
  m.negative_sampling = c.meta("negative_sampling") == "true";
  m.binary_threshold = to_double("binary_threshold", c.meta("binary_threshold"));
  m.decision_threshold = to_double("decision_threshold", c.meta("decision_threshold"));

  LevelModel& model = out.model;
  model.level = static_cast<int>(to_int("level", c.meta("level")));
  if (model.level < 1 || model.level > kTreeDepth) throw InputError("checkpoint level out of range");
  model.provenance = parse_provenance(c.meta("provenance"));
  const auto n_layers = to_int("n_layers", c.meta("n_layers"));
  if (n_layers < 0) throw InputError("checkpoint n_layers is negative");
  model.params.encoder.blocks.resize(static_cast<std::size_t>(n_layers));
  if (c.has_tensor("hyp.weight")) {
    CorrectionLayer f;
    f.embeddings = c.tensor("hyp.E");
    model.params.correction = std::move(f);
  }

  std::set<std::string> used;
  model.params.for_each([&](const std::string& name, Matrix& t) {
    t = c.tensor(name);
    used.insert(name);
  });
  if (model.params.correction) used.insert("hyp.E");
  for (const auto& [name, t] : c.tensors) {
    if (!used.count(name)) throw InputError("unexpected checkpoint tensor: " + name);
  }

  const ModelParams& p = model.params;
  const auto h = static_cast<Eigen::Index>(p.encoder.hidden());
  const auto l = static_cast<Eigen::Index>(p.n_labels());
  bool ok = p.encoder.pos.cols() == h && p.encoder.pos.rows() >= m.chunk_len &&
            p.encoder.vocab_size() == m.vocab_size && p.head.w_cl.rows() == l && p.head.w_cl.cols() == h &&
            p.head.w_la.cols() == h && p.head.b_cl.rows() == l && p.head.b_cl.cols() == 1 &&
            std::to_string(h) == c.meta("h") && std::to_string(l) == c.meta("n_labels");
  for (const auto& b : p.encoder.blocks) {
    ok = ok && b.w_q.rows() == h && b.w_q.cols() == h && b.w_k.rows() == h && b.w_k.cols() == h &&
         b.w_v.rows() == h && b.w_v.cols() == h && b.w_o.rows() == h && b.w_o.cols() == h &&
         b.ln1_gain.cols() == h && b.ln1_bias.cols() == h && b.ln2_gain.cols() == h && b.ln2_bias.cols() == h &&
         b.w_ff1.rows() == h && b.w_ff2.cols() == h && b.w_ff1.cols() == b.w_ff2.rows();
  }
  if (p.correction) {
    const auto& f = *p.correction;
    ok = ok && f.weight.cols() == h && f.bias.rows() == 1 && f.bias.cols() == h && f.embeddings.rows() == l &&
         f.embeddings.cols() == f.weight.rows();
  }
  if (!ok) throw InputError("checkpoint tensor shapes are inconsistent with its metadata");
  return out;
}

Checkpoint embeddings_checkpoint(const PoincareEmbeddings& emb, const PoincareOptions& options) {
  Checkpoint c;
  c.set_meta("kind", "embeddings");
  c.set_meta("dim", std::to_string(emb.dim()));
  c.set_meta("epochs", std::to_string(options.epochs));
  c.set_meta("lr", fmt_double(options.lr));
  c.set_meta("negatives", std::to_string(options.n_negatives));
  c.set_meta("seed", std::to_string(options.seed));
  c.set_meta("ball_eps", fmt_double(emb.ball_eps));
  for (int k = 1; k <= kTreeDepth; ++k) c.add_tensor("E" + std::to_string(k), extract_level(emb, k));
  return c;
}

PoincareEmbeddings embeddings_from_checkpoint(const Checkpoint& c) {
  if (!c.has_meta("kind") || c.meta("kind") != "embeddings") {
    throw InputError("checkpoint does not hold Poincare embeddings");
  }
  PoincareEmbeddings e;
  e.ball_eps = to_double("ball_eps", c.meta("ball_eps"));
  const auto dim = c.tensor("E1").cols();
  std::size_t total = 1;
  e.offset[0] = 0;
  e.count[0] = 1;
  for (int k = 1; k <= kTreeDepth; ++k) {
    const Matrix& m = c.tensor("E" + std::to_string(k));
    if (m.cols() != dim) throw InputError("embedding tensors disagree on dimension");
    e.offset[static_cast<std::size_t>(k)] = total;
    e.count[static_cast<std::size_t>(k)] = static_cast<std::size_t>(m.rows());
    total += static_cast<std::size_t>(m.rows());
  }
  e.table = Matrix::Zero(static_cast<Eigen::Index>(total), dim);
  for (int k = 1; k <= kTreeDepth; ++k) {
    const Matrix& m = c.tensor("E" + std::to_string(k));
    e.table.middleRows(static_cast<Eigen::Index>(e.offset[static_cast<std::size_t>(k)]), m.rows()) = m;
  }
  return e;
}

}  // namespace xrlat
