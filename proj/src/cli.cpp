// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "xrlat/checkpoint.hpp"
#include "xrlat/config.hpp"
#include "xrlat/gradcheck.hpp"
#include "xrlat/hyperbolic.hpp"
#include "xrlat/trainer.hpp"

namespace xrlat {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string canonical_hierarchy(const CodeTree& tree) {
  std::string out;
  for (const auto& p : tree.leaf_paths()) out += p[0] + "/" + p[1] + "/" + p[2] + "/" + p[3] + "\n";
  return out;
}

std::string format_log(const std::vector<StepLog>& log) {
  std::string out;
  for (const auto& l : log) out += std::to_string(l.step) + "\t" + fixed(l.lr, 6) + "\t" + fixed(l.loss, 6) + "\n";
  return out;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::string level_ckpt_name(int k) { return "level" + std::to_string(k) + ".ckpt"; }

// ---- tree ---------------------------------------------------------------

struct TreeArgs {
  std::string action;
  std::string hierarchy;
  std::string out;
};

int cmd_tree(const TreeArgs& a, std::ostream& out) {
  const CodeTree tree = CodeTree::load(a.hierarchy);
  const std::string stats = format_tree_stats(tree);
  if (a.action == "build") {
    if (a.out.empty()) throw ConfigError("tree build needs --out");
    ensure_parent(a.out);
    write_file_atomic(a.out, canonical_hierarchy(tree));
    out << stats;
  } else if (!a.out.empty()) {
    ensure_parent(a.out);
    write_file_atomic(a.out, stats);
  } else {
    out << stats;
  }
  return kExitOk;
}

// ---- embed --------------------------------------------------------------

struct EmbedArgs {
  std::string tree;
  std::string out;
  PoincareOptions opts;
};

int cmd_embed(const EmbedArgs& a, std::ostream& out) {
  if (a.opts.dim < 1) throw ConfigError("--dim must be >= 1");
  if (a.opts.epochs < 0) throw ConfigError("--epochs must be >= 0");
  if (a.opts.n_negatives < 1) throw ConfigError("--negatives must be >= 1");
  if (!(a.opts.lr > 0.0)) throw ConfigError("--lr must be > 0");
  const CodeTree tree = CodeTree::load(a.tree);
  const auto t0 = Clock::now();
  const PoincareEmbeddings emb = train_poincare(tree, a.opts);
  ensure_parent(a.out);
  write_checkpoint(a.out, embeddings_checkpoint(emb, a.opts));
  out << "embedded " << tree.total_nodes() - 1 << " nodes in " << a.opts.dim << " dims, " << a.opts.epochs
      << " epochs\nwall_time_s\t" << fixed(seconds_since(t0), 2) << "\n";
  return kExitOk;
}

// ---- data ---------------------------------------------------------------

struct DataArgs {
  std::string action;
  std::string tree;
  std::string in;
  std::string out;
  SynthOptions synth;
};

int cmd_data(const DataArgs& a, std::ostream& out) {
  if (a.out.empty()) throw ConfigError("data needs --out");
  std::vector<RawDocument> docs;
  if (a.action == "synth") {
    if (a.tree.empty()) throw ConfigError("data synth needs --tree");
    docs = synth_corpus(CodeTree::load(a.tree), a.synth);
  } else {
    if (a.in.empty()) throw ConfigError("data clean needs --in");
    docs = read_dataset(a.in);
    for (auto& d : docs) d.text = clean_text(d.text);
  }
  ensure_parent(a.out);
  write_file_atomic(a.out, serialize_dataset(docs));
  out << "wrote " << docs.size() << " documents to " << a.out << "\n";
  return kExitOk;
}

// ---- eval helpers ---------------------------------------------------------

struct ModelDir {
  CodeTree tree;
  Vocabulary vocab;
  std::vector<LoadedModel> models;  // 1 (flat) or 4 (chain)
};

ModelDir load_model_dir(const fs::path& dir) {
  ModelDir m;
  m.tree = CodeTree::load(dir / "hierarchy.txt");
  m.vocab = Vocabulary::load(dir / "vocab.txt");
  if (fs::exists(dir / "model.ckpt")) {
    m.models.push_back(model_from_checkpoint(read_checkpoint(dir / "model.ckpt")));
  } else {
    for (int k = 1; k <= kTreeDepth; ++k) {
      const fs::path p = dir / level_ckpt_name(k);
      if (!fs::exists(p)) throw InputError("model directory has neither model.ckpt nor " + p.filename().string());
      m.models.push_back(model_from_checkpoint(read_checkpoint(p)));
      if (m.models.back().model.level != k) throw InputError(p.string() + " does not hold level " + std::to_string(k));
    }
  }
  const std::string hash = fnv1a_hex(m.vocab.serialize());
  for (const auto& lm : m.models) {
    if (lm.meta.vocab_hash != hash || lm.meta.vocab_size != m.vocab.size()) {
      throw InputError("vocabulary in " + dir.string() + " does not match the checkpoint");
    }
    if (lm.meta.chunk_len != m.models.front().meta.chunk_len || lm.meta.n_chunks != m.models.front().meta.n_chunks) {
      throw InputError("checkpoints in " + dir.string() + " disagree on chunking");
    }
  }
  const auto& last = m.models.back().model;
  if (last.params.n_labels() != m.tree.size(last.level)) throw InputError("checkpoint does not match hierarchy.txt");
  return m;
}

struct TopK {
  std::size_t k = 0;
  std::string file;
};

std::string format_topk(const std::vector<RawDocument>& docs, const CodeTree& tree, const Matrix& scores,
                        std::size_t k) {
  const auto& ids = tree.ids(kTreeDepth);
  const std::size_t l = ids.size();
  k = std::min(k, l);
  std::string out;
  std::vector<std::size_t> order(l);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto row = scores.row(static_cast<Eigen::Index>(i));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double sa = row(static_cast<Eigen::Index>(a));
                        const double sb = row(static_cast<Eigen::Index>(b));
                        return sa != sb ? sa > sb : a < b;
                      });
    out += docs[i].id;
    for (std::size_t t = 0; t < k; ++t) {
      out += t == 0 ? '\t' : ' ';
      out += ids[order[t]] + ":" + fixed(row(static_cast<Eigen::Index>(order[t])), 6);
    }
    out += '\n';
  }
  return out;
}

// ---- train --------------------------------------------------------------

struct TrainArgs {
  std::string mode;
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.config, a.overrides, a.seed);
  if (cfg.tree.empty()) throw ConfigError("config must set tree");
  if (cfg.train_data.empty()) throw ConfigError("config must set train_data");
  if (cfg.output_dir.empty()) throw ConfigError("config must set output_dir");
  if (a.mode == "xr-lat" && cfg.train.bootstrap == BootstrapMode::kHyperC && cfg.embeddings.empty()) {
    throw ConfigError("bootstrap=hyperc needs embeddings");
  }

  const CodeTree tree = CodeTree::load(cfg.tree);
  const auto raw = read_dataset(cfg.train_data);
  if (raw.empty()) throw InputError("training set is empty: " + cfg.train_data.string());
  cfg.resolve(raw.size());
  std::optional<PoincareEmbeddings> emb;
  if (a.mode == "xr-lat" && cfg.train.bootstrap == BootstrapMode::kHyperC) {
    emb = embeddings_from_checkpoint(read_checkpoint(cfg.embeddings));
    for (int k = 1; k <= kTreeDepth; ++k) {
      if (emb->count[static_cast<std::size_t>(k)] != tree.size(k)) {
        throw InputError("embeddings do not match the hierarchy at level " + std::to_string(k));
      }
    }
  }
  std::vector<RawDocument> test_raw;
  if (!cfg.test_data.empty()) test_raw = read_dataset(cfg.test_data);

  const auto texts = cleaned_texts(raw);
  const Vocabulary vocab = Vocabulary::build(texts, cfg.min_frequency);
  const EncodedDataset data = encode_dataset(raw, tree, vocab, cfg.train.chunk_len, cfg.train.n_chunks);

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_file_atomic(dir / "config.txt", cfg.format());
  write_file_atomic(dir / "hierarchy.txt", canonical_hierarchy(tree));
  const std::string vocab_text = vocab.serialize();
  write_file_atomic(dir / "vocab.txt", vocab_text);

  ModelMeta meta;
  meta.mode = a.mode;
  meta.chunk_len = cfg.train.chunk_len;
  meta.n_chunks = cfg.train.n_chunks;
  meta.vocab_size = vocab.size();
  meta.vocab_hash = fnv1a_hex(vocab_text);
  meta.seed = cfg.train.seed;
  meta.bootstrap = a.mode == "xr-lat" ? to_string(cfg.train.bootstrap) : "none";
  meta.negative_sampling = a.mode == "xr-lat" && cfg.train.negative_sampling;
  meta.binary_threshold = cfg.train.binary_threshold;
  meta.decision_threshold = cfg.train.decision_threshold;

  out << a.mode << ": " << raw.size() << " documents, vocabulary " << vocab.size() << ", " << cfg.train.max_steps
      << " steps per model\n";
  const auto t0 = Clock::now();
  if (a.mode == "plm-icd") {
    const LevelResult r = train_flat(data, tree, cfg.train, vocab.size());
    write_checkpoint(dir / "model.ckpt", model_checkpoint(r.model, meta));
    write_file_atomic(dir / "train_log.tsv", format_log(r.log));
    out << "final loss " << fixed(r.step_losses.back(), 6) << "\n";
  } else {
    train_xr_lat(data, tree, cfg.train, vocab.size(), emb ? &*emb : nullptr, [&](const LevelResult& r) {
      const int k = r.model.level;
      write_checkpoint(dir / level_ckpt_name(k), model_checkpoint(r.model, meta));
      write_file_atomic(dir / ("level" + std::to_string(k) + "_log.tsv"), format_log(r.log));
      out << "level " << k << " (" << to_string(r.model.provenance) << ") final loss "
          << fixed(r.step_losses.empty() ? 0.0 : r.step_losses.back(), 6) << "\n";
    });
  }
  out << "wall_time_s\t" << fixed(seconds_since(t0), 2) << "\n";

  if (!test_raw.empty()) {
    PredictionSet pred = predict_model_dir(dir, test_raw);
    const MetricsReport report = evaluate(pred);
    write_file_atomic(dir / "metrics.tsv", report.format());
    out << report.format();
  }
  return kExitOk;
}

// ---- eval ---------------------------------------------------------------

struct EvalArgs {
  std::string model_dir;
  std::string tree;
  std::string data;
  std::string out;
  std::string scores;
  std::string dump_scores;
  std::string cascade = "auto";
  std::optional<double> threshold;
  TopK topk;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.model_dir.empty() == a.scores.empty()) throw ConfigError("eval needs exactly one of --model-dir or --scores");
  const auto docs = read_dataset(a.data);
  if (docs.empty()) throw InputError("evaluation set is empty: " + a.data);

  PredictionSet pred;
  CodeTree tree;
  if (!a.model_dir.empty()) {
    const CascadeMode mode = a.cascade == "on" ? CascadeMode::kOn : a.cascade == "off" ? CascadeMode::kOff
                                                                                     : CascadeMode::kAuto;
    pred = predict_model_dir(a.model_dir, docs, mode);
    tree = CodeTree::load(fs::path(a.model_dir) / "hierarchy.txt");
  } else {
    if (a.tree.empty()) throw ConfigError("--scores needs --tree");
    tree = CodeTree::load(a.tree);
    pred.scores = parse_scores(read_file(a.scores), docs, tree.size(kTreeDepth));
    pred.gold = gold_matrix(docs, tree);
  }
  if (a.threshold) {
    if (!(*a.threshold > 0.0 && *a.threshold < 1.0)) throw ConfigError("--threshold must be in (0, 1)");
    pred.decision_threshold = *a.threshold;
  }

  const MetricsReport report = evaluate(pred);
  ensure_parent(a.out);
  write_file_atomic(a.out, report.format());
  if (!a.dump_scores.empty()) {
    ensure_parent(a.dump_scores);
    write_file_atomic(a.dump_scores, format_scores(docs, pred.scores));
  }
  if (!a.topk.file.empty()) {
    ensure_parent(a.topk.file);
    write_file_atomic(a.topk.file, format_topk(docs, tree, pred.scores, a.topk.k));
  }
  out << report.format();
  return kExitOk;
}

// ---- gradcheck ----------------------------------------------------------

struct GradcheckArgs {
  GradcheckConfig cfg;
  std::string loss = "bce";
};

int cmd_gradcheck(GradcheckArgs a, std::ostream& out) {
  a.cfg.loss.kind = parse_loss_kind(a.loss);
  if (a.cfg.n_layers < 0 || a.cfg.n_layers > 2) throw ConfigError("--layers must be 0, 1 or 2");
  if (a.cfg.hidden < 1 || a.cfg.n_labels < 1 || a.cfg.vocab_size < 3) throw ConfigError("model sizes too small");
  if (a.cfg.doc_tokens < 1 || a.cfg.doc_tokens > static_cast<std::size_t>(a.cfg.chunk_len) * a.cfg.n_chunks) {
    throw ConfigError("--tokens must be in [1, chunk_len * n_chunks]");
  }
  const GradcheckReport report = gradcheck(a.cfg);
  out << report.format();
  const bool pass = report.max_rel_error < 1e-4;
  out << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitUser;
}

}  // namespace

// ---- shared -------------------------------------------------------------

std::vector<std::vector<std::uint8_t>> gold_matrix(const std::vector<RawDocument>& docs, const CodeTree& tree) {
  std::vector<std::vector<std::uint8_t>> gold(docs.size(), std::vector<std::uint8_t>(tree.size(kTreeDepth), 0));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& code : docs[i].codes) {
      const auto idx = tree.find(kTreeDepth, code);
      if (!idx) throw InputError("document '" + docs[i].id + "' has code '" + code + "' not present in the hierarchy");
      gold[i][*idx] = 1;
    }
  }
  return gold;
}

std::string format_scores(const std::vector<RawDocument>& docs, const Matrix& scores) {
  if (static_cast<std::size_t>(scores.rows()) != docs.size()) throw ShapeError("score rows != documents");
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out += docs[i].id;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", scores(static_cast<Eigen::Index>(i), j));
      out += j == 0 ? '\t' : ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Matrix parse_scores(std::string_view content, const std::vector<RawDocument>& docs, std::size_t n_codes) {
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!row_of.emplace(docs[i].id, i).second) throw InputError("duplicate document id '" + docs[i].id + "'");
  }
  Matrix scores = Matrix::Constant(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(n_codes),
                                   std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> seen(docs.size(), 0);
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected doc_id<TAB>scores", line_no);
    const auto it = row_of.find(line.substr(0, tab));
    if (it == row_of.end()) throw ParseError("unknown document id '" + line.substr(0, tab) + "'", line_no);
    if (seen[it->second]) throw ParseError("duplicate scores for '" + it->first + "'", line_no);
    seen[it->second] = 1;
    std::istringstream vals(line.substr(tab + 1));
    std::string tok;
    std::size_t j = 0;
    while (vals >> tok) {
      if (j >= n_codes) throw ParseError("more than " + std::to_string(n_codes) + " scores", line_no);
      try {
        std::size_t used = 0;
        scores(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(j)) = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("bad score '" + tok + "'", line_no);
      }
      ++j;
    }
    if (j != n_codes) throw ParseError("expected " + std::to_string(n_codes) + " scores, got " + std::to_string(j), line_no);
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!seen[i]) throw InputError("no scores for document '" + docs[i].id + "'");
  }
  if (!scores.allFinite()) throw InputError("scores must be finite");
  return scores;
}

PredictionSet predict_model_dir(const fs::path& model_dir, const std::vector<RawDocument>& docs,
                                CascadeMode cascade) {
  const ModelDir m = load_model_dir(model_dir);
  const ModelMeta& meta = m.models.front().meta;
  const EncodedDataset data = encode_dataset(docs, m.tree, m.vocab, meta.chunk_len, meta.n_chunks);
  const std::size_t l = m.tree.size(kTreeDepth);

  PredictionSet pred;
  pred.decision_threshold = m.models.back().meta.decision_threshold;
  pred.scores = Matrix(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(l));
  pred.gold.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) pred.gold[i] = data.codes.dense_row(i);

  if (m.models.size() == 1) {
    if (cascade == CascadeMode::kOn) throw ConfigError("cascade needs a four-level chain");
    const auto probs = predict_level(m.models.front().model, data.docs);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      for (std::size_t j = 0; j < l; ++j) pred.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = probs[i][j];
    }
    return pred;
  }

  const bool use_cascade = cascade == CascadeMode::kOn || (cascade == CascadeMode::kAuto && meta.negative_sampling);
  std::vector<LevelModel> chain;
  for (const auto& lm : m.models) chain.push_back(lm.model);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto probs = predict_chain(chain, m.tree, data.docs[i], use_cascade, meta.binary_threshold);
    for (std::size_t j = 0; j < l; ++j) pred.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = probs[j];
  }
  return pred;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"xrlat: hierarchical multi-label code assignment with label-wise attention"};
  app.name("xrlat");
  app.require_subcommand(1);

  TreeArgs tree_args;
  auto* tree = app.add_subcommand("tree", "Parse a code hierarchy; `build` writes it canonically, `stats` reports levels");
  tree->add_option("action", tree_args.action, "build or stats")->required()->check(CLI::IsMember({"build", "stats"}));
  tree->add_option("--hierarchy", tree_args.hierarchy, "chapter/block/category/code file")->required();
  tree->add_option("--out", tree_args.out, "output file");

  EmbedArgs embed_args;
  auto* embed = app.add_subcommand("embed", "Train Poincare embeddings of every tree node");
  embed->add_option("--tree", embed_args.tree, "hierarchy file")->required();
  embed->add_option("--out", embed_args.out, "embeddings checkpoint")->required();
  embed->add_option("--dim", embed_args.opts.dim, "embedding dimension")->capture_default_str();
  embed->add_option("--epochs", embed_args.opts.epochs, "training epochs")->capture_default_str();
  embed->add_option("--lr", embed_args.opts.lr, "learning rate")->capture_default_str();
  embed->add_option("--negatives", embed_args.opts.n_negatives, "negatives per edge")->capture_default_str();
  embed->add_option("--seed", embed_args.opts.seed, "random seed")->capture_default_str();

  DataArgs data_args;
  auto* data = app.add_subcommand("data", "Generate a synthetic corpus or clean a dataset's text column");
  data->add_option("action", data_args.action, "synth or clean")->required()->check(CLI::IsMember({"synth", "clean"}));
  data->add_option("--tree", data_args.tree, "hierarchy file (synth)");
  data->add_option("--in", data_args.in, "dataset to clean");
  data->add_option("--out", data_args.out, "output dataset")->required();
  data->add_option("--n-docs", data_args.synth.n_docs, "documents")->capture_default_str();
  data->add_option("--codes-per-doc", data_args.synth.codes_per_doc_mean, "mean codes per document")->capture_default_str();
  data->add_option("--trigger-prob", data_args.synth.trigger_prob, "trigger injection probability")->capture_default_str();
  data->add_option("--filler-vocab", data_args.synth.filler_vocab, "filler word count")->capture_default_str();
  data->add_option("--doc-len", data_args.synth.doc_len, "tokens per document")->capture_default_str();
  data->add_option("--seed", data_args.synth.seed, "random seed")->capture_default_str();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a flat (plm-icd) model or an XR-LAT chain (xr-lat)");
  train->add_option("mode", train_args.mode, "plm-icd or xr-lat")->required()->check(CLI::IsMember({"plm-icd", "xr-lat"}));
  train->add_option("--config", train_args.config, "key = value configuration file")->required();
  train->add_option("--set", train_args.overrides, "override a key (key=value), repeatable");
  train->add_option("--seed", train_args.seed, "override the configured seed");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score a dataset and write the metrics report");
  eval->add_option("--model-dir", eval_args.model_dir, "training output directory");
  eval->add_option("--scores", eval_args.scores, "precomputed score file instead of a model");
  eval->add_option("--tree", eval_args.tree, "hierarchy file (with --scores)");
  eval->add_option("--data", eval_args.data, "dataset file")->required();
  eval->add_option("--out", eval_args.out, "metrics report")->required();
  eval->add_option("--topk", eval_args.topk.file, "per-document top-k listing");
  eval->add_option("--k", eval_args.topk.k, "codes in the top-k listing")->default_val(15);
  eval->add_option("--dump-scores", eval_args.dump_scores, "write the score matrix");
  eval->add_option("--cascade", eval_args.cascade, "auto, on or off")->check(CLI::IsMember({"auto", "on", "off"}))->capture_default_str();
  eval->add_option("--threshold", eval_args.threshold, "F1 decision threshold (default from checkpoint, else 0.5)");

  GradcheckArgs gc_args;
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients of a tiny model");
  gc->add_option("--layers", gc_args.cfg.n_layers, "transformer blocks (0-2)")->capture_default_str();
  gc->add_option("--loss", gc_args.loss, "bce or asl")->capture_default_str();
  gc->add_option("--hidden", gc_args.cfg.hidden, "hidden width")->capture_default_str();
  gc->add_option("--vocab", gc_args.cfg.vocab_size, "vocabulary size")->capture_default_str();
  gc->add_option("--chunk-len", gc_args.cfg.chunk_len, "chunk length")->capture_default_str();
  gc->add_option("--chunks", gc_args.cfg.n_chunks, "chunks")->capture_default_str();
  gc->add_option("--labels", gc_args.cfg.n_labels, "labels")->capture_default_str();
  gc->add_option("--tokens", gc_args.cfg.doc_tokens, "real tokens in the probe document")->capture_default_str();
  gc->add_flag("--hyperc", gc_args.cfg.hyperbolic_correction, "include the hyperbolic correction layer");
  gc->add_option("--max-coords", gc_args.cfg.max_coords, "check a random subset (0 = all)")->capture_default_str();
  gc->add_option("--seed", gc_args.cfg.seed, "random seed")->capture_default_str();
  gc->add_flag("--corrupt", gc_args.cfg.corrupt, "perturb one analytic coordinate (negative control)");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("xrlat");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUser;
  }

  try {
    if (tree->parsed()) return cmd_tree(tree_args, out);
    if (embed->parsed()) return cmd_embed(embed_args, out);
    if (data->parsed()) return cmd_data(data_args, out);
    if (train->parsed()) return cmd_train(train_args, out);
    if (eval->parsed()) return cmd_eval(eval_args, out);
    if (gc->parsed()) return cmd_gradcheck(gc_args, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUser;
}

}  // namespace xrlat
