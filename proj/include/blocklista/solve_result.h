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

#include <span>
#include <vector>

#include "blocklista/core_types.h"

namespace blocklista {

// Normalized error ||x_true - x_hat|| / ||x_true||. Throws on zero x_true.
double nmse(const BlockSignal& x_hat, const BlockSignal& x_true);
double nmse(const CVector& x_hat, const CVector& x_true);

// Mean NMSE over paired samples.
double batch_nmse(std::span<const BlockSignal> x_hat, std::span<const BlockSignal> x_true);

struct SolveTrace {
  std::vector<BlockSignal> iterates;  // filled when trajectories are recorded
  std::vector<double> per_iter_nmse;  // filled when ground truth is supplied
  std::vector<double> objective;      // iterative solvers only
  int iterations_run = 0;
};

struct SolveResult {
  BlockSignal x;
  SolveTrace trace;
};

}  // namespace blocklista
