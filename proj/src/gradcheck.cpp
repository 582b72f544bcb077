// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "xrlat/network.hpp"

namespace xrlat {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
  return std::abs(analytic - numeric) / denom;
}

std::string GradcheckReport::format() const {
  std::ostringstream os;
  os << "tensor\tcoords\tworst_index\tanalytic\tnumeric\trel_error\n";
  os << std::scientific << std::setprecision(6);
  for (const auto& t : tensors) {
    os << t.name << '\t' << t.coords << '\t' << t.worst_index << '\t' << t.analytic << '\t' << t.numeric << '\t'
       << t.rel_error << '\n';
  }
  os << "max_rel_error\t" << max_rel_error << "\ncoords_checked\t" << coords_checked << '\n';
  return os.str();
}

GradcheckReport gradcheck(const GradcheckConfig& config) {
  std::mt19937_64 rng(config.seed);

  ModelShape shape;
  shape.vocab_size = config.vocab_size;
  shape.hidden = config.hidden;
  shape.max_chunk_len = static_cast<std::size_t>(config.chunk_len);
  shape.n_layers = config.n_layers;
  shape.n_labels = config.n_labels;
  ModelParams params = init_model(shape, config.init_std, rng());

  // Layer-norm gains and biases start at 1/0; perturb them so their
  // gradients are checked away from the symmetric point.
  std::normal_distribution<double> normal(0.0, config.init_std);
  for (auto& b : params.encoder.blocks) {
    for (Matrix* m : {&b.ln1_gain, &b.ln1_bias, &b.ln2_gain, &b.ln2_bias}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] += normal(rng);
    }
  }
  for (Eigen::Index i = 0; i < params.head.b_cl.size(); ++i) params.head.b_cl.data()[i] = normal(rng);

  if (config.hyperbolic_correction) {
    CorrectionLayer f;
    const auto d = static_cast<Eigen::Index>(config.correction_dim);
    const auto h = static_cast<Eigen::Index>(config.hidden);
    f.weight = Matrix(d, h);
    f.bias = Matrix(1, h);
    f.embeddings = Matrix(static_cast<Eigen::Index>(config.n_labels), d);
    std::uniform_real_distribution<double> ball(-0.4, 0.4);
    for (Eigen::Index i = 0; i < f.weight.size(); ++i) f.weight.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < f.bias.size(); ++i) f.bias.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < f.embeddings.size(); ++i) f.embeddings.data()[i] = ball(rng);
    params.correction = std::move(f);
  }

  std::uniform_int_distribution<TokenId> token(2, static_cast<TokenId>(config.vocab_size - 1));
  std::vector<TokenId> tokens(config.doc_tokens);
  for (auto& t : tokens) t = token(rng);
  const ChunkedDocument doc = chunk(tokens, config.chunk_len, config.n_chunks);

  std::bernoulli_distribution coin(0.3);
  std::bernoulli_distribution keep(0.75);
  std::vector<std::uint8_t> gold(config.n_labels), mask(config.n_labels);
  for (std::size_t j = 0; j < config.n_labels; ++j) {
    gold[j] = coin(rng) ? 1 : 0;
    mask[j] = keep(rng) ? 1 : 0;
  }
  mask[0] = 1;
  gold[0] = 1;

  GradientSet grads = params.zeros_like();
  forward_backward(doc, params, gold, mask, config.loss, {}, grads);

  struct Coord {
    std::size_t tensor;
    Eigen::Index index;
  };
  std::vector<std::string> names;
  std::vector<Matrix*> values;
  std::vector<Matrix*> analytic;
  params.for_each([&](const std::string& name, Matrix& m) {
    names.push_back(name);
    values.push_back(&m);
  });
  grads.for_each([&](const std::string&, Matrix& m) { analytic.push_back(&m); });

  if (config.corrupt) {
    for (std::size_t t = 0; t < names.size(); ++t) {
      if (names[t] == "W_cl") {
        double& g = analytic[t]->data()[0];
        g += 1e-2 * (1.0 + std::abs(g));
      }
    }
  }

  std::vector<Coord> coords;
  for (std::size_t t = 0; t < values.size(); ++t) {
    for (Eigen::Index i = 0; i < values[t]->size(); ++i) coords.push_back({t, i});
  }
  if (config.max_coords > 0 && config.max_coords < coords.size()) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(config.max_coords);
    std::sort(coords.begin(), coords.end(),
              [](const Coord& a, const Coord& b) { return a.tensor != b.tensor ? a.tensor < b.tensor : a.index < b.index; });
  }

  GradcheckReport report;
  report.tensors.resize(names.size());
  for (std::size_t t = 0; t < names.size(); ++t) report.tensors[t].name = names[t];

  for (const Coord& c : coords) {
    double& theta = values[c.tensor]->data()[c.index];
    const double saved = theta;
    theta = saved + config.epsilon;
    const double up = document_loss(doc, params, gold, mask, config.loss);
    theta = saved - config.epsilon;
    const double down = document_loss(doc, params, gold, mask, config.loss);
    theta = saved;

    const double numeric = (up - down) / (2.0 * config.epsilon);
    const double a = analytic[c.tensor]->data()[c.index];
    const double rel = relative_error(a, numeric);
    TensorCheck& tc = report.tensors[c.tensor];
    ++tc.coords;
    if (tc.coords == 1 || rel > tc.rel_error) {
      tc.rel_error = rel;
      tc.worst_index = static_cast<std::size_t>(c.index);
      tc.analytic = a;
      tc.numeric = numeric;
    }
    report.max_rel_error = std::max(report.max_rel_error, rel);
    ++report.coords_checked;
  }
  std::erase_if(report.tensors, [](const TensorCheck& t) { return t.coords == 0; });
  return report;
}

}  // namespace xrlat
