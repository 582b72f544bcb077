// Copyright (c) 2026, The xrlat Authors
// SPDX-License-Identifier: Apache-2.0

#include "xrlat/bootstrap.hpp"

namespace xrlat {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kRandom: return "random";
    case Provenance::kBootstrapEqual: return "bootstrap-equal";
    case Provenance::kBootstrapHyperC: return "bootstrap-hyperc";
  }
  return "random";
}

Provenance parse_provenance(const std::string& name) {
  if (name == "random") return Provenance::kRandom;
  if (name == "bootstrap-equal") return Provenance::kBootstrapEqual;
  if (name == "bootstrap-hyperc") return Provenance::kBootstrapHyperC;
  throw InputError("unknown model provenance '" + name + "'");
}

LevelModel bootstrap_equal(const LevelModel& parent, const IndexingMatrix& indexing) {
  if (indexing.cols() != parent.params.n_labels()) {
    throw ShapeError("bootstrap: indexing matrix has " + std::to_string(indexing.cols()) +
                     " columns but the parent has " + std::to_string(parent.params.n_labels()) + " labels");
  }
  LevelModel child;
  child.level = parent.level + 1;
  child.provenance = Provenance::kBootstrapEqual;
  child.params.encoder = parent.params.encoder;
  child.params.head.w_la = indexing.gather(parent.params.label_queries());
  child.params.head.w_cl = indexing.gather(parent.params.head.w_cl);
  child.params.head.b_cl = indexing.gather(parent.params.head.b_cl);
  return child;
}

LevelModel bootstrap_hyperc(const LevelModel& parent, const IndexingMatrix& indexing, const Matrix& child_embeddings,
                            CorrectionLayer f) {
  if (static_cast<std::size_t>(child_embeddings.rows()) != indexing.rows()) {
    throw ShapeError("bootstrap_hyperc: " + std::to_string(child_embeddings.rows()) + " embedding rows for " +
                     std::to_string(indexing.rows()) + " child labels");
  }
  if (f.weight.rows() != child_embeddings.cols()) {
    throw ShapeError("bootstrap_hyperc: correction expects embedding dim " + std::to_string(f.weight.rows()) +
                     ", got " + std::to_string(child_embeddings.cols()));
  }
  if (static_cast<std::size_t>(f.weight.cols()) != parent.params.encoder.hidden() || f.bias.cols() != f.weight.cols() ||
      f.bias.rows() != 1) {
    throw ShapeError("bootstrap_hyperc: correction output width must equal the hidden size");
  }
  LevelModel child = bootstrap_equal(parent, indexing);
  child.provenance = Provenance::kBootstrapHyperC;
  f.embeddings = child_embeddings;
  child.params.correction = std::move(f);
  return child;
}

CorrectionLayer zero_correction(std::size_t embedding_dim, std::size_t hidden) {
  CorrectionLayer f;
  f.weight = Matrix::Zero(static_cast<Eigen::Index>(embedding_dim), static_cast<Eigen::Index>(hidden));
  f.bias = Matrix::Zero(1, static_cast<Eigen::Index>(hidden));
  return f;
}

}  // namespace xrlat
