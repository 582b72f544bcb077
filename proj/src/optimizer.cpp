// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/optimizer.hpp"

#include <cmath>

namespace xrlat {

AdamW::AdamW(const ModelParams& like, AdamWConfig config) : config_(config) {
  like.for_each([&](const std::string&, const Matrix& m) {
    m_.push_back(Matrix::Zero(m.rows(), m.cols()));
    v_.push_back(Matrix::Zero(m.rows(), m.cols()));
  });
}

bool AdamW::decays(const std::string& name) {
  auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return !(ends_with("_gain") || ends_with("_bias") || name == "b_cl" || name == "hyp.bias");
}

void AdamW::step(ModelParams& params, const GradientSet& grads, double lr) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);

  std::vector<const Matrix*> g;
  grads.for_each([&](const std::string&, const Matrix& m) { g.push_back(&m); });

  std::size_t i = 0;
  params.for_each([&](const std::string& name, Matrix& p) {
    if (i >= g.size() || g[i]->rows() != p.rows() || g[i]->cols() != p.cols()) {
      throw ShapeError("optimizer: gradient shape mismatch at " + name);
    }
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * *g[i];
    v = config_.beta2 * v + (1.0 - config_.beta2) * g[i]->cwiseProduct(*g[i]);
    if (config_.weight_decay != 0.0 && decays(name)) p *= 1.0 - lr * config_.weight_decay;
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.eps);
    ++i;
  });
}

double learning_rate_at(std::size_t step, double peak, std::size_t warmup, std::size_t max_steps) {
  if (step >= max_steps) return 0.0;
  if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  return peak * static_cast<double>(max_steps - step) / static_cast<double>(max_steps - warmup);
}

double clip_gradients(GradientSet& grads, double max_norm) {
  double sq = 0.0;
  grads.for_each([&](const std::string&, const Matrix& m) { sq += m.squaredNorm(); });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) grads *= max_norm / norm;
  return norm;
}

}  // namespace xrlat
