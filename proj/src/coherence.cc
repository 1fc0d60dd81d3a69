// Copyright 2026 The blocklista Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "blocklista/coherence.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "blocklista/ops.h"

namespace blocklista {
namespace {

void require_normalized(const BlockDictionary& dict, const char* what) {
  if (!dict.is_normalized()) throw std::invalid_argument(std::string(what) + ": dictionary columns are not unit norm");
}

double max_offdiag_abs(const CMatrix& m) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j) best = std::max(best, std::abs(m(i, j)));
    }
  }
  return best;
}

}  // namespace

double mutual_coherence(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("mutual_coherence: shape mismatch");
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    const Complex d = a.col(i).dot(b.col(i));
    if (std::abs(d - Complex(1.0, 0.0)) > 1e-8) {
      throw std::invalid_argument("mutual_coherence: a_i^H b_i != 1 at column " + std::to_string(i));
    }
  }
  return max_offdiag_abs(a.adjoint() * b);
}

double sub_coherence(const BlockDictionary& dict) {
  require_normalized(dict, "sub_coherence");
  double best = 0.0;
  for (int q = 0; q < dict.partition().num_blocks(); ++q) {
    const auto sub = dict.sub(q);
    best = std::max(best, max_offdiag_abs(sub.adjoint() * sub));
  }
  return best;
}

double block_coherence(const BlockDictionary& dict) {
  require_normalized(dict, "block_coherence");
  const BlockPartition& part = dict.partition();
  if (part.num_blocks() < 2) throw std::invalid_argument("block_coherence: needs at least two blocks");
  const int p = part.block_len();
  const CMatrix gram = dict.matrix().adjoint() * dict.matrix();
  double best = 0.0;
  for (int q = 0; q < part.num_blocks(); ++q) {
    for (int r = q + 1; r < part.num_blocks(); ++r) {
      const CMatrix cross = gram.block(part.offset(q), part.offset(r), p, p);
      best = std::max(best, spectral_norm(cross) / p);
    }
  }
  return best;
}

CoherenceReport coherence_report(const BlockDictionary& dict) {
  CoherenceReport rep;
  rep.mutual = mutual_coherence(dict.matrix(), dict.matrix());
  rep.sub_coherence = sub_coherence(dict);
  rep.block_coherence = dict.partition().num_blocks() >= 2 ? block_coherence(dict) : 0.0;
  return rep;
}

GeneralizedCoherenceReport generalized_coherences(const BlockDictionary& dict, const NetworkParams& params,
                                                  const std::vector<int>& layers, bool row_wise_c_w) {
  if (params.kind != NetworkKind::AdaBlockLista) {
    throw std::invalid_argument("generalized_coherences: needs an Ada-BlockLISTA network");
  }
  params.validate();
  std::vector<int> used = layers;
  if (used.empty()) {
    for (int t = 0; t < params.layers(); ++t) used.push_back(t);
  }
  if (used.empty()) throw std::invalid_argument("generalized_coherences: no layers to consider");
  double gamma_max = 0.0;
  for (int t : used) {
    if (t < 0 || t >= params.layers()) throw std::out_of_range("generalized_coherences: bad layer index");
    gamma_max = std::max(gamma_max, std::abs(params.gammas[t]));
  }

  // Every quantity is |gamma| times a gamma-free maximum.
  const BlockPartition& part = dict.partition();
  const int p = part.block_len();
  double nu = 0.0;
  double mu = 0.0;
  double cw = 0.0;
  for (int q = 0; q < part.num_blocks(); ++q) {
    const CMatrix a = dict.sub(q).adjoint() * params.weights[q];  // P x N
    const CMatrix cross = a * dict.matrix();                      // P x M
    nu = std::max(nu, max_offdiag_abs(cross.middleCols(part.offset(q), p)));
    for (int r = 0; r < part.num_blocks(); ++r) {
      if (r == q) continue;
      mu = std::max(mu, spectral_norm(cross.middleCols(part.offset(r), p)) / p);
    }
    const double c = row_wise_c_w ? a.rowwise().norm().sum() : a.colwise().norm().sum();
    cw = std::max(cw, c);
  }
  return {gamma_max * nu, gamma_max * mu, gamma_max * cw, static_cast<int>(used.size())};
}

}  // namespace blocklista
