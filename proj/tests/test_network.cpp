// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "xrlat/gradcheck.hpp"
#include "xrlat/loss.hpp"
#include "xrlat/network.hpp"

using namespace xrlat;

namespace {

ModelShape tiny_shape(int layers, std::size_t labels = 6) {
  ModelShape s;
  s.vocab_size = 30;
  s.hidden = 8;
  s.max_chunk_len = 4;
  s.n_layers = layers;
  s.n_labels = labels;
  return s;
}

ChunkedDocument random_doc(std::mt19937_64& rng, std::size_t n_tokens, int c = 4, int s = 3) {
  std::vector<TokenId> t(n_tokens);
  for (auto& x : t) x = static_cast<TokenId>(2 + rng() % 28);
  return chunk(t, c, s);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("label attention two-token example") {
  Matrix h(2, 1);
  h << 1.0, 3.0;
  Matrix q(1, 1);
  q << 1.0;
  const std::vector<std::uint8_t> flags{1, 1};
  const LabelAttention la = label_attention(h, flags, q);
  CHECK(la.weights(0, 0) == doctest::Approx(0.119203).epsilon(1e-6));
  CHECK(la.weights(0, 1) == doctest::Approx(0.880797).epsilon(1e-6));
  CHECK(la.reps(0, 0) == doctest::Approx(2.761594).epsilon(1e-6));
}

TEST_CASE("label attention properties") {
  std::mt19937_64 rng(1);
  Matrix h = Matrix::Random(7, 4);
  Matrix q = Matrix::Random(5, 4);
  const std::vector<std::uint8_t> flags{1, 1, 0, 1, 1, 0, 0};
  const LabelAttention la = label_attention(h, flags, q);
  for (Eigen::Index j = 0; j < 5; ++j) {
    CHECK(std::abs(la.weights.row(j).sum() - 1.0) < 1e-12);
    CHECK(la.weights(j, 2) == 0.0);
    CHECK(la.weights(j, 6) == 0.0);
  }

  SUBCASE("zero query attends uniformly") {
    const LabelAttention z = label_attention(h, flags, Matrix::Zero(1, 4));
    const Matrix mean = (h.row(0) + h.row(1) + h.row(3) + h.row(4)) / 4.0;
    CHECK((z.reps - mean).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("duplicating every row leaves d unchanged") {
    Matrix h2(14, 4);
    h2 << h, h;
    std::vector<std::uint8_t> f2 = flags;
    f2.insert(f2.end(), flags.begin(), flags.end());
    const LabelAttention d2 = label_attention(h2, f2, q);
    CHECK((d2.reps - la.reps).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("all padding is an error") {
    CHECK_THROWS_AS(label_attention(h, std::vector<std::uint8_t>(7, 0), q), DomainError);
  }
}

TEST_CASE("classifier") {
  Matrix d = Matrix::Zero(3, 2);
  Matrix w = Matrix::Random(3, 2);
  Matrix b(3, 1);
  b << 0.0, 0.2, -1.0;
  const auto p = classify(d, w, b, {});
  CHECK(p[0] == 0.5);
  CHECK(p[1] == doctest::Approx(0.549834).epsilon(1e-6));
  const std::vector<std::uint8_t> none(3, 0);
  for (double x : classify(d, w, b, none)) CHECK(x == 0.0);
  const std::vector<std::uint8_t> some{0, 1, 0};
  const auto ps = classify(d, w, b, some);
  CHECK(ps[0] == 0.0);
  CHECK(ps[1] == p[1]);
}

TEST_CASE("loss fixed values") {
  const std::vector<double> half{0.5};
  const std::vector<std::uint8_t> one{1};
  CHECK(bce_loss(half, one, {}) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(asl_loss(half, one, {}, 1.0, 0.0, 0.0) == doctest::Approx(0.346574).epsilon(1e-6));
  const std::vector<double> p02{0.2};
  const std::vector<std::uint8_t> zero{0};
  CHECK(asl_loss(p02, zero, {}, 0.0, 4.0, 0.3) == 0.0);
  const std::vector<double> perfect{1.0, 0.0};
  const std::vector<std::uint8_t> y10{1, 0};
  CHECK(bce_loss(perfect, y10, {}) < 1e-11);
  const std::vector<std::uint8_t> nomask{0, 0};
  CHECK_THROWS_AS(bce_loss(perfect, y10, nomask), DomainError);
}

TEST_CASE("masked losses equal a hand loop over unmasked labels") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> p(n);
    for (auto& x : p) x = u(rng);
    const auto y = xrlat::testing::random_bits(rng, n, 0.4);
    auto m = xrlat::testing::random_bits(rng, n, 0.6);
    m[rng() % n] = 1;
    double bce = 0, asl = 0;
    int cnt = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!m[j]) continue;
      ++cnt;
      const double pj = std::clamp(p[j], 1e-12, 1 - 1e-12);
      if (y[j]) {
        bce += -std::log(pj);
        asl += -std::pow(1 - pj, 0.5) * std::log(pj);
      } else {
        bce += -std::log(1 - pj);
        const double pm = std::max(p[j] - 0.1, 0.0);
        asl += -std::pow(pm, 2.0) * std::log(std::clamp(1 - pm, 1e-12, 1 - 1e-12));
      }
    }
    CHECK(std::abs(bce_loss(p, y, m) - bce / cnt) < 1e-12);
    CHECK(std::abs(asl_loss(p, y, m, 0.5, 2.0, 0.1) - asl / cnt) < 1e-12);
  }
}

TEST_CASE("label_loss derivative matches finite differences") {
  LossConfig asl;
  asl.kind = LossKind::kAsl;
  asl.gamma_pos = 1.0;
  asl.gamma_neg = 4.0;
  asl.margin = 0.05;
  for (const LossConfig& cfg : {LossConfig{}, asl}) {
    for (double p : {0.07, 0.3, 0.5, 0.8, 0.97}) {
      for (bool pos : {false, true}) {
        const double h = 1e-7;
        const double num = (label_loss(cfg, p + h, pos).value - label_loss(cfg, p - h, pos).value) / (2 * h);
        CHECK(label_loss(cfg, p, pos).d_prob == doctest::Approx(num).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("degenerate encoder is embedding plus position") {
  const ModelParams m = init_model(tiny_shape(0), 0.5, 3);
  std::mt19937_64 rng(2);
  const ChunkedDocument doc = random_doc(rng, 10);
  const Matrix h = encode_document(doc, m.encoder);
  CHECK(h.rows() == 12);
  CHECK(h.cols() == 8);
  for (Eigen::Index i = 0; i < 12; ++i) {
    const Matrix expect = m.encoder.emb.row(doc.ids[static_cast<std::size_t>(i)]) + m.encoder.pos.row(i % 4);
    CHECK((h.row(i) - expect).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("encoder attention stays inside a chunk") {
  const ModelParams m = init_model(tiny_shape(1), 0.3, 4);
  std::mt19937_64 rng(3);
  ChunkedDocument a = random_doc(rng, 12);
  ChunkedDocument b = a;
  std::swap(b.ids[3], b.ids[4]);  // crosses the chunk 0 / chunk 1 boundary
  const Matrix ha = encode_document(a, m.encoder);
  const Matrix hb = encode_document(b, m.encoder);
  CHECK(ha.middleRows(8, 4) == hb.middleRows(8, 4));
  CHECK((ha.middleRows(0, 4) - hb.middleRows(0, 4)).cwiseAbs().maxCoeff() > 0.0);
  CHECK((ha.middleRows(4, 4) - hb.middleRows(4, 4)).cwiseAbs().maxCoeff() > 0.0);

  ChunkedDocument bad = a;
  bad.ids[0] = 30;
  CHECK_THROWS_AS(encode_document(bad, m.encoder), ShapeError);
}

TEST_CASE("probabilities are in [0,1] and masked labels score 0") {
  std::mt19937_64 rng(5);
  for (int layers = 0; layers <= 2; ++layers) {
    const ModelParams m = init_model(tiny_shape(layers, 10), 0.5, 10 + static_cast<std::uint64_t>(layers));
    const ChunkedDocument doc = random_doc(rng, 7);
    const auto mask = xrlat::testing::random_bits(rng, 10, 0.5);
    const auto p = predict_probabilities(doc, m, mask);
    const auto full = predict_probabilities(doc, m, {});
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(p[j] >= 0.0);
      CHECK(p[j] <= 1.0);
      // the masked path multiplies a row subset, so summation order may differ
      CHECK(std::abs(p[j] - (mask[j] ? full[j] : 0.0)) <= 1e-12);
    }
  }
}

TEST_CASE("masked labels get exactly zero head gradient rows") {
  std::mt19937_64 rng(6);
  const ModelParams m = init_model(tiny_shape(1, 8), 0.3, 7);
  const ChunkedDocument doc = random_doc(rng, 9);
  const std::vector<std::uint8_t> gold{1, 0, 1, 0, 0, 1, 0, 0};
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0, 0, 1, 0};
  GradientSet g = m.zeros_like();
  forward_backward(doc, m, gold, mask, {}, {}, g);
  for (Eigen::Index j = 0; j < 8; ++j) {
    if (mask[static_cast<std::size_t>(j)]) {
      CHECK(g.head.w_cl.row(j).cwiseAbs().maxCoeff() > 0.0);
    } else {
      CHECK(g.head.w_la.row(j).cwiseAbs().maxCoeff() == 0.0);
      CHECK(g.head.w_cl.row(j).cwiseAbs().maxCoeff() == 0.0);
      CHECK(g.head.b_cl(j, 0) == 0.0);
    }
  }
}

TEST_CASE("classifier bias gradient is (p - y) over the unmasked count") {
  std::mt19937_64 rng(7);
  const ModelParams m = init_model(tiny_shape(1, 5), 0.3, 8);
  const ChunkedDocument doc = random_doc(rng, 11);
  const std::vector<std::uint8_t> gold{1, 0, 0, 1, 0};
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1};
  GradientSet g = m.zeros_like();
  forward_backward(doc, m, gold, mask, {}, {}, g);
  const auto p = predict_probabilities(doc, m, mask);
  for (std::size_t j = 0; j < 5; ++j) {
    const double expect = mask[j] ? (p[j] - gold[j]) / 4.0 : 0.0;
    CHECK(std::abs(g.head.b_cl(static_cast<Eigen::Index>(j), 0) - expect) < 1e-12);
  }
}

TEST_CASE("loss weight scales every gradient") {
  std::mt19937_64 rng(8);
  const ModelParams m = init_model(tiny_shape(2, 5), 0.3, 9);
  const ChunkedDocument doc = random_doc(rng, 11);
  const std::vector<std::uint8_t> gold{1, 0, 0, 1, 0};
  LossConfig one, two;
  two.weight = 2.0;
  GradientSet g1 = m.zeros_like(), g2 = m.zeros_like();
  const double l1 = forward_backward(doc, m, gold, {}, one, {}, g1);
  const double l2 = forward_backward(doc, m, gold, {}, two, {}, g2);
  CHECK(l2 == doctest::Approx(2 * l1).epsilon(1e-14));
  std::vector<const Matrix*> a;
  g1.for_each([&](const std::string&, const Matrix& x) { a.push_back(&x); });
  std::size_t i = 0;
  g2.for_each([&](const std::string& name, const Matrix& x) {
    INFO(name);
    CHECK((x - 2.0 * *a[i]).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff()));
    ++i;
  });
}

TEST_CASE("forward_backward loss equals document_loss and dropout is seeded") {
  std::mt19937_64 rng(9);
  const ModelParams m = init_model(tiny_shape(1, 5), 0.3, 10);
  const ChunkedDocument doc = random_doc(rng, 12);
  const std::vector<std::uint8_t> gold{0, 1, 0, 0, 1};
  GradientSet g = m.zeros_like();
  CHECK(forward_backward(doc, m, gold, {}, {}, {}, g) == document_loss(doc, m, gold, {}, {}));

  ForwardOptions drop;
  drop.training = true;
  drop.dropout = 0.3;
  drop.dropout_seed = 42;
  const double d1 = document_loss(doc, m, gold, {}, {}, drop);
  CHECK(d1 == document_loss(doc, m, gold, {}, {}, drop));
  drop.dropout_seed = 43;
  CHECK(d1 != document_loss(doc, m, gold, {}, {}, drop));
  ForwardOptions eval = drop;
  eval.training = false;
  CHECK(document_loss(doc, m, gold, {}, {}, eval) == document_loss(doc, m, gold, {}, {}));
}

TEST_CASE("gradients with dropout match finite differences of the same dropout mask") {
  std::mt19937_64 rng(10);
  const ModelParams base = init_model(tiny_shape(1, 4), 0.3, 11);
  const ChunkedDocument doc = random_doc(rng, 10);
  const std::vector<std::uint8_t> gold{1, 0, 1, 0};
  ForwardOptions fo;
  fo.training = true;
  fo.dropout = 0.2;
  fo.dropout_seed = 99;
  GradientSet g = base.zeros_like();
  forward_backward(doc, base, gold, {}, {}, fo, g);
  ModelParams m = base;
  double worst = 0;
  std::vector<Matrix*> grads;
  g.for_each([&](const std::string&, Matrix& x) { grads.push_back(&x); });
  std::size_t t = 0;
  m.for_each([&](const std::string&, Matrix& x) {
    for (Eigen::Index i = 0; i < x.size(); i += 3) {
      const double s = x.data()[i];
      x.data()[i] = s + 1e-5;
      const double up = document_loss(doc, m, gold, {}, {}, fo);
      x.data()[i] = s - 1e-5;
      const double dn = document_loss(doc, m, gold, {}, {}, fo);
      x.data()[i] = s;
      worst = std::max(worst, relative_error(grads[t]->data()[i], (up - dn) / 2e-5));
    }
    ++t;
  });
  CHECK(worst < 1e-4);
}

TEST_CASE("gradcheck across layers, losses and seeds") {
  for (int layers = 0; layers <= 2; ++layers) {
    for (LossKind kind : {LossKind::kBce, LossKind::kAsl}) {
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        GradcheckConfig cfg;
        cfg.n_layers = layers;
        cfg.loss.kind = kind;
        cfg.seed = seed;
        cfg.max_coords = 400;
        const GradcheckReport r = gradcheck(cfg);
        INFO("layers=" << layers << " loss=" << to_string(kind) << " seed=" << seed);
        CHECK(r.max_rel_error < (layers == 0 ? 1e-6 : 1e-4));
        CHECK(r.coords_checked == 400);
      }
    }
  }
}

TEST_CASE("gradcheck with hyperbolic correction and determinism") {
  GradcheckConfig cfg;
  cfg.hyperbolic_correction = true;
  const GradcheckReport r = gradcheck(cfg);
  CHECK(r.max_rel_error < 1e-4);
  bool saw_hyp = false;
  for (const auto& t : r.tensors) saw_hyp = saw_hyp || t.name == "hyp.weight";
  CHECK(saw_hyp);
  CHECK(gradcheck(cfg).format() == r.format());

  cfg.corrupt = true;
  CHECK(gradcheck(cfg).max_rel_error > 1e-4);
}

TEST_CASE("relative error floor") {
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-9, 0.0) == doctest::Approx(1e-3));
  CHECK(relative_error(2.0, 1.0) == 0.5);
}

TEST_CASE("init_model") {
  const ModelParams a = init_model(tiny_shape(2), 0.03, 5);
  const ModelParams b = init_model(tiny_shape(2), 0.03, 5);
  CHECK(a.head.w_la == b.head.w_la);
  CHECK(a.encoder.blocks[1].w_ff2 == b.encoder.blocks[1].w_ff2);
  CHECK(a.encoder.blocks[0].ln1_gain == Matrix::Ones(1, 8));
  CHECK(a.encoder.blocks[0].ln1_bias == Matrix::Zero(1, 8));
  CHECK(a.head.b_cl == Matrix::Zero(6, 1));
  CHECK(a.head.w_la.rows() == 6);
  CHECK(a.encoder.blocks[0].w_ff1.cols() == 32);
  ModelShape bad = tiny_shape(3);
  CHECK_THROWS_AS(init_model(bad, 0.03, 1), ConfigError);
}

TEST_CASE("non-finite parameters surface a named numeric error") {
  std::mt19937_64 rng(12);
  ModelParams m = init_model(tiny_shape(1, 3), 0.3, 12);
  m.head.w_cl(1, 2) = std::nan("");
  const ChunkedDocument doc = random_doc(rng, 5);
  const std::vector<std::uint8_t> gold{1, 0, 0};
  GradientSet g = m.zeros_like();
  try {
    forward_backward(doc, m, gold, {}, {}, {}, g);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(e.tensor() == "W_cl");
  }
}
