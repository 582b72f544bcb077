// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "xrlat/checkpoint.hpp"

namespace xrlat {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

unsigned long long to_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range: " + v);
  }
}

int to_int(const std::string& key, const std::string& v) {
  const auto u = to_unsigned(key, v);
  if (u > 1'000'000'000ULL) throw ConfigError(key + ": integer out of range: " + v);
  return static_cast<int>(u);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::filesystem::path to_path(const std::string& v, const std::filesystem::path& base) {
  std::filesystem::path p(v);
  if (v.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {
      "tree",          "train_data",       "test_data",          "embeddings",    "output_dir",
      "min_frequency", "chunk_len",        "n_chunks",           "hidden",        "n_layers",
      "init_std",      "dropout",          "batch_size",         "epochs",        "max_steps",
      "warmup_steps",  "learning_rate",    "weight_decay",       "grad_clip",     "seed",
      "loss",          "asl_gamma_pos",    "asl_gamma_neg",      "asl_margin",    "bootstrap",
      "negative_sampling", "binary_threshold", "decision_threshold", "log_every",
  };
  return keys;
}

void set_run_config_value(RunConfig& cfg, const std::string& key, const std::string& value,
                          const std::filesystem::path& base_dir) {
  TrainConfig& t = cfg.train;
  if (key == "tree") cfg.tree = to_path(value, base_dir);
  else if (key == "train_data") cfg.train_data = to_path(value, base_dir);
  else if (key == "test_data") cfg.test_data = to_path(value, base_dir);
  else if (key == "embeddings") cfg.embeddings = to_path(value, base_dir);
  else if (key == "output_dir") cfg.output_dir = to_path(value, base_dir);
  else if (key == "min_frequency") cfg.min_frequency = to_int(key, value);
  else if (key == "chunk_len") t.chunk_len = to_int(key, value);
  else if (key == "n_chunks") t.n_chunks = to_int(key, value);
  else if (key == "hidden") t.hidden = to_unsigned(key, value);
  else if (key == "n_layers") t.n_layers = to_int(key, value);
  else if (key == "init_std") t.init_std = to_real(key, value);
  else if (key == "dropout") t.dropout = to_real(key, value);
  else if (key == "batch_size") t.batch_size = to_unsigned(key, value);
  else if (key == "epochs") cfg.epochs = to_unsigned(key, value);
  else if (key == "max_steps") t.max_steps = to_unsigned(key, value);
  else if (key == "warmup_steps") cfg.warmup_steps = to_unsigned(key, value);
  else if (key == "learning_rate") t.learning_rate = to_real(key, value);
  else if (key == "weight_decay") t.weight_decay = to_real(key, value);
  else if (key == "grad_clip") t.grad_clip = to_real(key, value);
  else if (key == "seed") t.seed = to_unsigned(key, value);
  else if (key == "loss") t.loss.kind = parse_loss_kind(value);
  else if (key == "asl_gamma_pos") t.loss.gamma_pos = to_real(key, value);
  else if (key == "asl_gamma_neg") t.loss.gamma_neg = to_real(key, value);
  else if (key == "asl_margin") t.loss.margin = to_real(key, value);
  else if (key == "bootstrap") t.bootstrap = parse_bootstrap_mode(value);
  else if (key == "negative_sampling") t.negative_sampling = to_bool(key, value);
  else if (key == "binary_threshold") t.binary_threshold = to_real(key, value);
  else if (key == "decision_threshold") t.decision_threshold = to_real(key, value);
  else if (key == "log_every") t.log_every = to_unsigned(key, value);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (!seen.insert(key).second) throw ParseError("duplicate key '" + key + "'", line_no);
    try {
      set_run_config_value(cfg, key, value, base_dir);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides,
                          std::optional<std::uint64_t> seed) {
  RunConfig cfg = parse_run_config(read_file(file), file.parent_path());
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    set_run_config_value(cfg, trim(std::string_view(o).substr(0, eq)), trim(std::string_view(o).substr(eq + 1)));
  }
  if (seed) cfg.train.seed = *seed;
  return cfg;
}

void RunConfig::resolve(std::size_t n_docs) {
  if (epochs > 0) {
    if (train.max_steps > 0) throw ConfigError("set either epochs or max_steps, not both");
    if (train.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    const std::size_t per_epoch = std::max<std::size_t>(1, n_docs / train.batch_size);
    train.max_steps = epochs * per_epoch;
    epochs = 0;
  }
  if (train.max_steps == 0) throw ConfigError("max_steps (or epochs) must be set and positive");
  train.warmup_steps = warmup_steps ? *warmup_steps : train.max_steps / 20;
  warmup_steps = train.warmup_steps;
  if (min_frequency < 1) throw ConfigError("min_frequency must be >= 1");
  train.validate();
}

std::string RunConfig::format() const {
  const TrainConfig& t = train;
  std::ostringstream os;
  os << "tree=" << tree.string() << '\n'
     << "train_data=" << train_data.string() << '\n'
     << "test_data=" << test_data.string() << '\n'
     << "embeddings=" << embeddings.string() << '\n'
     << "output_dir=" << output_dir.string() << '\n'
     << "min_frequency=" << min_frequency << '\n'
     << "chunk_len=" << t.chunk_len << '\n'
     << "n_chunks=" << t.n_chunks << '\n'
     << "hidden=" << t.hidden << '\n'
     << "n_layers=" << t.n_layers << '\n'
     << "init_std=" << real(t.init_std) << '\n'
     << "dropout=" << real(t.dropout) << '\n'
     << "batch_size=" << t.batch_size << '\n'
     << "epochs=" << epochs << '\n'
     << "max_steps=" << t.max_steps << '\n'
     << "warmup_steps=" << (warmup_steps ? std::to_string(*warmup_steps) : std::string("auto")) << '\n'
     << "learning_rate=" << real(t.learning_rate) << '\n'
     << "weight_decay=" << real(t.weight_decay) << '\n'
     << "grad_clip=" << real(t.grad_clip) << '\n'
     << "seed=" << t.seed << '\n'
     << "loss=" << to_string(t.loss.kind) << '\n'
     << "asl_gamma_pos=" << real(t.loss.gamma_pos) << '\n'
     << "asl_gamma_neg=" << real(t.loss.gamma_neg) << '\n'
     << "asl_margin=" << real(t.loss.margin) << '\n'
     << "bootstrap=" << to_string(t.bootstrap) << '\n'
     << "negative_sampling=" << (t.negative_sampling ? "true" : "false") << '\n'
     << "binary_threshold=" << real(t.binary_threshold) << '\n'
     << "decision_threshold=" << real(t.decision_threshold) << '\n'
     << "log_every=" << t.log_every << '\n';
  return os.str();
}

}  // namespace xrlat
