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

#include "blocklista/iterative.h"

#include <stdexcept>
#include <string>

#include "blocklista/ops.h"

namespace blocklista {
namespace {

void check_lipschitz(double lipschitz) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("Lipschitz constant must be > 0, got " + std::to_string(lipschitz));
}

CVector gradient_point(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict, double lipschitz) {
  check_lipschitz(lipschitz);
  const CVector r = residual(obs, dict, x);
  return x.data() + (dict.matrix().adjoint() * r) / lipschitz;
}

}  // namespace

BlockSignal ista_step(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict, double lipschitz,
                      double lambda) {
  CVector z = gradient_point(x, obs, dict, lipschitz);
  return BlockSignal(x.partition(), soft_threshold(z, lambda / lipschitz));
}

BlockSignal block_ista_step(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict,
                            double lipschitz, double theta) {
  CVector z = gradient_point(x, obs, dict, lipschitz);
  block_soft_threshold_inplace(z, x.partition(), theta);
  return BlockSignal(x.partition(), std::move(z));
}

double l1_objective(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict, double lambda) {
  const CVector r = obs.y - dict.matrix() * x.data();
  return 0.5 * r.squaredNorm() + lambda * x.data().cwiseAbs().sum();
}

double l21_objective(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict, double lambda) {
  const CVector r = obs.y - dict.matrix() * x.data();
  return 0.5 * r.squaredNorm() + lambda * x.norm_21();
}

SolveResult solve(IterativeKind kind, const Observation& obs, const BlockDictionary& dict, const IterativeConfig& cfg,
                  const std::optional<BlockSignal>& x_true) {
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  const double lip = cfg.lipschitz ? *cfg.lipschitz : lipschitz_constant(dict);
  const double theta = cfg.block_threshold ? *cfg.block_threshold : cfg.lambda / lip;

  SolveResult out{BlockSignal::zeros(dict.partition()), {}};
  for (int t = 0; t < cfg.max_iters; ++t) {
    BlockSignal next = kind == IterativeKind::Ista ? ista_step(out.x, obs, dict, lip, cfg.lambda)
                                                   : block_ista_step(out.x, obs, dict, lip, theta);
    const double step = (next.data() - out.x.data()).norm();
    out.x = std::move(next);
    out.trace.iterations_run = t + 1;
    if (cfg.record_trajectory) out.trace.iterates.push_back(out.x);
    if (x_true) out.trace.per_iter_nmse.push_back(nmse(out.x, *x_true));
    out.trace.objective.push_back(kind == IterativeKind::Ista ? l1_objective(out.x, obs, dict, cfg.lambda)
                                                              : l21_objective(out.x, obs, dict, cfg.lambda));
    if (step <= cfg.tol) break;
  }
  return out;
}

const char* to_string(IterativeKind kind) { return kind == IterativeKind::Ista ? "ista" : "block_ista"; }

}  // namespace blocklista
