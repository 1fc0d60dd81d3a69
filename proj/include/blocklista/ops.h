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

#include <cstdint>

#include "blocklista/core_types.h"

namespace blocklista {

enum class ShrinkageKind { ElementSoft, BlockSoft };

// Phase-preserving complex soft threshold: u_i/|u_i| * (|u_i| - theta)_+.
// Exactly zero when |u_i| <= theta.
CVector soft_threshold(const CVector& u, double theta);

// Per block: z_q * (1 - theta/||z_q||)_+, exactly zero when ||z_q|| <= theta.
BlockSignal block_soft_threshold(const BlockSignal& z, double theta);

// In-place variant over a flat vector laid out by `partition`.
void block_soft_threshold_inplace(CVector& z, const BlockPartition& partition, double theta);

BlockSignal shrink(ShrinkageKind kind, const BlockSignal& z, double theta);

// r = y - Phi x.
CVector residual(const Observation& obs, const BlockDictionary& dict, const BlockSignal& x);

// Number of Phi*x products formed by residual() on this thread. Used by
// tests to check per-layer cost.
std::uint64_t residual_evaluations();

struct PowerIterationOptions {
  double rel_tol = 1e-10;
  int max_iters = 10000;
  std::uint64_t seed = 0x5eed;
};

// lambda_max(Phi^H Phi) by power iteration on v -> Phi^H (Phi v).
// Throws std::runtime_error if the estimate does not settle in max_iters.
double lipschitz_constant(const BlockDictionary& dict, const PowerIterationOptions& opts = {});

// Largest singular value of a (small) complex matrix, via power iteration on
// the Gram matrix A^H A (or A A^H, whichever is smaller).
double spectral_norm(const CMatrix& a, const PowerIterationOptions& opts = {});

}  // namespace blocklista
