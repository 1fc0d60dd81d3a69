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

#pragma once

#include <optional>

#include "blocklista/core_types.h"
#include "blocklista/solve_result.h"

namespace blocklista {

enum class IterativeKind { Ista, BlockIsta };

struct IterativeConfig {
  double lambda = 1e-3;
  int max_iters = 1000;
  // Stop once ||x^(t+1) - x^(t)||_2 <= tol.
  double tol = 1e-10;
  bool record_trajectory = false;
  // Step constant; computed with lipschitz_constant() when absent.
  std::optional<double> lipschitz;
  // Block threshold for Block-ISTA; lambda / L when absent.
  std::optional<double> block_threshold;
};

// One proximal-gradient step of ISTA: soft_{lambda/L}(x + Phi^H (y - Phi x) / L).
BlockSignal ista_step(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict, double lipschitz,
                      double lambda);

// Block-ISTA: z_q = x_q + Phi_q^H (y - Phi x) / L, then block shrinkage by theta.
BlockSignal block_ista_step(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict,
                            double lipschitz, double theta);

// 0.5 ||y - Phi x||^2 + lambda ||x||_1
double l1_objective(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict, double lambda);
// 0.5 ||y - Phi x||^2 + lambda ||x||_{2,1}
double l21_objective(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict, double lambda);

SolveResult solve(IterativeKind kind, const Observation& obs, const BlockDictionary& dict, const IterativeConfig& cfg,
                  const std::optional<BlockSignal>& x_true = std::nullopt);

const char* to_string(IterativeKind kind);

}  // namespace blocklista
