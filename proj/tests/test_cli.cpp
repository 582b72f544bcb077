// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "test_util.hpp"
#include "xrlat/checkpoint.hpp"
#include "xrlat/cli.hpp"

using namespace xrlat;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string demo() { return xrlat::testing::demo_hierarchy().string(); }

// Small corpus plus a config that trains in a second or two.
fs::path tiny_setup(const fs::path& dir) {
  REQUIRE(run({"data", "synth", "--tree", demo(), "--out", (dir / "train.tsv").string(), "--n-docs", "40", "--doc-len",
               "20", "--seed", "3"})
              .code == 0);
  REQUIRE(run({"data", "synth", "--tree", demo(), "--out", (dir / "test.tsv").string(), "--n-docs", "15", "--doc-len",
               "20", "--seed", "4"})
              .code == 0);
  const fs::path cfg = dir / "tiny.cfg";
  write_file_atomic(cfg,
                    "tree = " + demo() +
                        "\n"
                        "train_data = train.tsv\n"
                        "test_data = test.tsv\n"
                        "output_dir = out\n"
                        "chunk_len = 8\nn_chunks = 3\nhidden = 8\nn_layers = 1\n"
                        "batch_size = 8\nmax_steps = 6\nlearning_rate = 0.003\ninit_std = 0.1\n"
                        "log_every = 2\n");
  return cfg;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"train", "--help"}).code == 0);
  CHECK(run({}).code == kExitUser);
  CHECK(run({"nonsense"}).code == kExitUser);
  CHECK(run({"tree", "stats"}).code == kExitUser);
}

TEST_CASE("tree stats and build") {
  const auto dir = xrlat::testing::scratch_dir("cli_tree");
  const Run r = run({"tree", "stats", "--hierarchy", demo()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1\tchapter\t3\t") != std::string::npos);
  CHECK(r.out.find("4\tcode\t81\t") != std::string::npos);
  CHECK(run({"tree", "build", "--hierarchy", demo(), "--out", (dir / "h.txt").string()}).code == 0);
  CHECK(read_file(dir / "h.txt").find('#') == std::string::npos);
  CHECK(run({"tree", "stats", "--hierarchy", (dir / "h.txt").string()}).out == r.out);

  const Run missing = run({"tree", "stats", "--hierarchy", (dir / "nope.txt").string()});
  CHECK(missing.code == kExitUser);
  CHECK_FALSE(missing.err.empty());
  write_file_atomic(dir / "bad.txt", "a/b/c\n");
  CHECK(run({"tree", "stats", "--hierarchy", (dir / "bad.txt").string()}).code == kExitUser);
}

TEST_CASE("embed is deterministic per seed") {
  const auto dir = xrlat::testing::scratch_dir("cli_embed");
  const auto a = (dir / "a.ckpt").string(), b = (dir / "b.ckpt").string(), z = (dir / "z.ckpt").string();
  CHECK(run({"embed", "--tree", demo(), "--out", a, "--dim", "3", "--epochs", "4", "--seed", "5"}).code == 0);
  CHECK(run({"embed", "--tree", demo(), "--out", b, "--dim", "3", "--epochs", "4", "--seed", "5"}).code == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(run({"embed", "--tree", demo(), "--out", z, "--dim", "3", "--epochs", "0"}).code == 0);
  const PoincareEmbeddings e = embeddings_from_checkpoint(read_checkpoint(z));
  CHECK(e.table.rowwise().norm().maxCoeff() <= 1e-3);
  CHECK(run({"embed", "--tree", demo(), "--out", z, "--dim", "1"}).code == kExitUser);
}

TEST_CASE("data synth and clean") {
  const auto dir = xrlat::testing::scratch_dir("cli_data");
  const auto a = (dir / "a.tsv").string(), b = (dir / "b.tsv").string();
  CHECK(run({"data", "synth", "--tree", demo(), "--out", a, "--n-docs", "30", "--seed", "9"}).code == 0);
  CHECK(run({"data", "synth", "--tree", demo(), "--out", b, "--n-docs", "30", "--seed", "9"}).code == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(run({"data", "synth", "--tree", demo(), "--out", a, "--n-docs", "0"}).code == 0);
  CHECK(read_file(a) == "doc_id\tcodes\ttext\n");
  CHECK(run({"data", "synth", "--out", a}).code == kExitUser);

  write_file_atomic(dir / "raw.tsv", "doc_id\tcodes\ttext\nd1\tD1111\tseen [**2101-1-1**] today == ok\n");
  CHECK(run({"data", "clean", "--in", (dir / "raw.tsv").string(), "--out", b}).code == 0);
  CHECK(read_file(b) == "doc_id\tcodes\ttext\nd1\tD1111\tseen today ok\n");
}

TEST_CASE("train rejects bad configuration before writing anything") {
  const auto dir = xrlat::testing::scratch_dir("cli_badcfg");
  const fs::path cfg = tiny_setup(dir);
  const Run r = run({"train", "plm-icd", "--config", cfg.string(), "--set", "wibble=3"});
  CHECK(r.code == kExitUser);
  CHECK(r.err.find("wibble") != std::string::npos);
  CHECK(run({"train", "plm-icd", "--config", cfg.string(), "--set", "dropout=1.5"}).code == kExitUser);
  CHECK(run({"train", "xr-lat", "--config", cfg.string(), "--set", "bootstrap=hyperc"}).code == kExitUser);
  CHECK_FALSE(fs::exists(dir / "out"));
  CHECK(run({"train", "plm-icd", "--config", (dir / "missing.cfg").string()}).code == kExitUser);
}

TEST_CASE("train, eval and score files") {
  const auto dir = xrlat::testing::scratch_dir("cli_train");
  const fs::path cfg = tiny_setup(dir);

  const Run flat = run({"train", "plm-icd", "--config", cfg.string()});
  REQUIRE_MESSAGE(flat.code == 0, flat.err);
  for (const char* f : {"model.ckpt", "config.txt", "vocab.txt", "hierarchy.txt", "train_log.tsv", "metrics.tsv"}) {
    CHECK(fs::exists(dir / "out" / f));
  }
  CHECK(flat.out.find("wall_time_s\t") != std::string::npos);
  CHECK(read_file(dir / "out" / "config.txt").find("warmup_steps=0\n") != std::string::npos);

  const auto data = (dir / "test.tsv").string();
  const Run e1 = run({"eval", "--model-dir", (dir / "out").string(), "--data", data, "--out",
                      (dir / "m1.tsv").string(), "--dump-scores", (dir / "s1.txt").string(), "--topk",
                      (dir / "top.txt").string(), "--k", "3"});
  REQUIRE_MESSAGE(e1.code == 0, e1.err);
  const Run e2 = run({"eval", "--model-dir", (dir / "out").string(), "--data", data, "--out",
                      (dir / "m2.tsv").string(), "--dump-scores", (dir / "s2.txt").string()});
  CHECK(read_file(dir / "m1.tsv") == read_file(dir / "m2.tsv"));
  CHECK(read_file(dir / "s1.txt") == read_file(dir / "s2.txt"));
  CHECK(read_file(dir / "m1.tsv") == read_file(dir / "out" / "metrics.tsv"));
  const std::string top = read_file(dir / "top.txt");
  CHECK(std::count(top.begin(), top.end(), '\n') == 15);
  CHECK(std::count(top.begin(), top.end(), ':') == 45);

  // scores file round trip reproduces the model's report
  const Run e3 = run({"eval", "--scores", (dir / "s1.txt").string(), "--tree", demo(), "--data", data, "--out",
                      (dir / "m3.tsv").string()});
  REQUIRE_MESSAGE(e3.code == 0, e3.err);
  CHECK(read_file(dir / "m3.tsv") == read_file(dir / "m1.tsv"));

  CHECK(run({"eval", "--data", data, "--out", (dir / "x.tsv").string()}).code == kExitUser);
  CHECK(run({"eval", "--scores", (dir / "s1.txt").string(), "--data", data, "--out", (dir / "x.tsv").string()}).code ==
        kExitUser);

  const Run chain = run({"train", "xr-lat", "--config", cfg.string(), "--set", "output_dir=" + (dir / "xr").string(),
                         "--set", "negative_sampling=true"});
  REQUIRE_MESSAGE(chain.code == 0, chain.err);
  for (int k = 1; k <= 4; ++k) {
    const auto p = dir / "xr" / ("level" + std::to_string(k) + ".ckpt");
    REQUIRE(fs::exists(p));
    CHECK(model_from_checkpoint(read_checkpoint(p)).model.level == k);
  }
  CHECK(run({"eval", "--model-dir", (dir / "xr").string(), "--data", data, "--out", (dir / "c.tsv").string(),
             "--cascade", "off"})
            .code == 0);

  // a vocabulary edited after training is caught
  write_file_atomic(dir / "out" / "vocab.txt", read_file(dir / "out" / "vocab.txt") + "extra\n");
  CHECK(run({"eval", "--model-dir", (dir / "out").string(), "--data", data, "--out", (dir / "x.tsv").string()}).code ==
        kExitUser);
}

TEST_CASE("a perfect score file gives perfect metrics") {
  const auto dir = xrlat::testing::scratch_dir("cli_oracle");
  const auto data = (dir / "d.tsv").string();
  REQUIRE(run({"data", "synth", "--tree", demo(), "--out", data, "--n-docs", "60", "--seed", "1"}).code == 0);
  const CodeTree tree = CodeTree::load(demo());
  const auto docs = read_dataset(data);
  const auto gold = gold_matrix(docs, tree);
  Matrix s(static_cast<Eigen::Index>(docs.size()), 81);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t j = 0; j < 81; ++j) s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gold[i][j];
  }
  write_file_atomic(dir / "s.txt", format_scores(docs, s));
  const Run r = run({"eval", "--scores", (dir / "s.txt").string(), "--tree", demo(), "--data", data, "--out",
                     (dir / "m.tsv").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("macro_auc\t1.0000\nmicro_auc\t1.0000\nmacro_f1\t") != std::string::npos);
  CHECK(r.out.find("micro_f1\t1.0000\n") != std::string::npos);

  // wrong column count is an input error
  write_file_atomic(dir / "short.txt", docs[0].id + "\t0.5\n");
  CHECK(run({"eval", "--scores", (dir / "short.txt").string(), "--tree", demo(), "--data", data, "--out",
             (dir / "m.tsv").string()})
            .code == kExitUser);
}

TEST_CASE("gradcheck command") {
  const Run ok = run({"gradcheck", "--layers", "1", "--max-coords", "60"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("W_la") != std::string::npos);
  CHECK(ok.out.find("PASS\n") != std::string::npos);
  const Run bad = run({"gradcheck", "--layers", "0", "--corrupt"});
  CHECK(bad.code == kExitUser);
  CHECK(bad.out.find("FAIL\n") != std::string::npos);
  CHECK(run({"gradcheck", "--layers", "3"}).code == kExitUser);
  CHECK(run({"gradcheck", "--loss", "hinge"}).code == kExitUser);
}
