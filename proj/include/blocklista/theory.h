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
#include <limits>
#include <vector>

#include "blocklista/coherence.h"
#include "blocklista/core_types.h"

namespace blocklista {

// High-probability bound on ||eps||_2 for eps complex standard normal in C^N:
//   sigma = sqrt(N + sqrt(2 N ln(1/delta)) + ln(1/delta)),
// so that P(||eps||_2 >= sigma) <= delta (chi-square tail bound).
double noise_norm_bound(int n, double delta);

struct ConditionCheck {
  bool satisfied = false;
  // RHS - LHS of the sparsity inequality; +inf when the coherence term is 0.
  double margin = std::numeric_limits<double>::infinity();
};

// sP < (1/2)(1/mu_B + P - (P-1) nu_I / mu_B) on a column-normalized dictionary.
ConditionCheck check_block_yonina(const BlockDictionary& dict, int s);
ConditionCheck check_block_yonina(const CoherenceReport& report, int s, int block_len);

// s < (1/(2P))(1/mu~ + P - (P-1) nu~ / mu~).
ConditionCheck check_adablock_condition(const GeneralizedCoherenceReport& report, int s, int block_len);

// (P-1) nu~ + P mu~ (2s - 1): the per-layer error contraction factor.
double contraction_factor(const GeneralizedCoherenceReport& report, int s, int block_len);

struct ConvergenceConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};

// c1 = -ln(factor), c2 = 2 s C_W / (1 - factor). Throws if factor >= 1.
ConvergenceConstants convergence_constants(const GeneralizedCoherenceReport& report, int s, int block_len);

struct ThresholdSchedule {
  std::vector<double> thetas;        // T entries
  std::vector<double> error_bounds;  // T + 1 entries, error_bounds[0] = s * zeta
};

// theta^(t) = P mu~ e^(t) + C_W sigma,
// e^(t+1)   = factor e^(t) + 2 s C_W sigma,  e^(0) = s zeta.
ThresholdSchedule theorem_threshold_schedule(const GeneralizedCoherenceReport& report, int s, int block_len,
                                             double zeta, double sigma, int layers);

struct TheoremVerification {
  GeneralizedCoherenceReport coherences;
  ConditionCheck condition;
  ConvergenceConstants constants;
  double sigma = 0.0;  // noise norm bound used in the schedule (sigma_w * noise_norm_bound)
  ThresholdSchedule schedule;
  int trials = 0;
  // Fraction of trials with Supp(x^(t)) within Supp(x*) at every layer.
  double containment_rate = 0.0;
  // Per layer t = 0..T: max over trials of ||x^(t) - x*||_{2,1}.
  std::vector<double> max_error;
  // Per layer: max over trials of ||x^(t) - x*||_{2,1} / (s zeta e^{-c1 t} + c2 sigma).
  std::vector<double> bound_ratio;
  double max_bound_ratio = 0.0;
};

struct TheoremOptions {
  int s = 1;
  double zeta = 1.0;
  double sigma_w = 0.0;
  double delta = 0.05;
  int layers = 20;
  int trials = 100;
  std::uint64_t seed = 1;
  // Multiplies the theorem thresholds; 1 reproduces the theorem's schedule.
  double threshold_scale = 1.0;
  int threads = 1;
};

// Runs Ada-BlockLISTA with W_q = I and gamma = 1 on a column-normalized
// dictionary, thresholds from theorem_threshold_schedule, over random
// x* in X(zeta, s) (exactly s active blocks, each of norm in [zeta/2, zeta]).
TheoremVerification verify_theorem(const BlockDictionary& dict, const TheoremOptions& opts);

// Least-squares line through (t, ln v_t) for t in [first, last] with v_t > 0.
struct LogSlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};
LogSlopeFit fit_log_slope(const std::vector<double>& values, int first, int last);

// Gaussian dictionary with unit-norm columns.
BlockDictionary gaussian_dictionary(int rows, int block_len, int num_blocks, std::uint64_t seed);
// Gaussian blocks, each replaced by an orthonormal basis of its span (nu_I = 0).
BlockDictionary orthogonal_block_dictionary(int rows, int block_len, int num_blocks, std::uint64_t seed);

// Draws a block-sparse x with exactly s active blocks, uniform support, each
// active block complex normal then rescaled to norm uniform in [lo, hi].
BlockSignal random_block_sparse(const BlockPartition& partition, int s, double lo, double hi, std::uint64_t seed);

}  // namespace blocklista
