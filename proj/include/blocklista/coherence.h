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
#include <vector>

#include "blocklista/core_types.h"
#include "blocklista/networks.h"

namespace blocklista {

struct CoherenceReport {
  double mutual = 0.0;           // mu(Phi, Phi)
  double sub_coherence = 0.0;    // nu_I
  double block_coherence = 0.0;  // mu_B
};

struct GeneralizedCoherenceReport {
  double nu_tilde = 0.0;
  double mu_tilde = 0.0;
  double c_w = 0.0;
  int layers_considered = 0;
};

// max_{i != j} |a_i^H b_j|. Requires a_i^H b_i = 1 (within 1e-8) for all i.
double mutual_coherence(const CMatrix& a, const CMatrix& b);

// Largest off-diagonal |phi_i^H phi_j| inside any block; 0 when P = 1.
double sub_coherence(const BlockDictionary& dict);

// max_{q != q'} ||Phi_q^H Phi_q'||_s / P. Requires Q >= 2.
double block_coherence(const BlockDictionary& dict);

CoherenceReport coherence_report(const BlockDictionary& dict);

// Learned-weight coherences of an Ada-BlockLISTA network, maximized over the
// given layers (all layers when `layers` is empty):
//   nu~  = max |gamma phi_{i,q}^H W_q phi_{j,q}|, i != j
//   mu~  = max (1/P) ||gamma Phi_i^H W_i Phi_j||_s, i != j
//   C_W  = max ||gamma Phi_q^H W_q||_{2,1}
// The matrix (2,1) norm is the sum of column l2 norms; pass
// `row_wise_c_w = true` to sum row norms instead.
GeneralizedCoherenceReport generalized_coherences(const BlockDictionary& dict, const NetworkParams& params,
                                                  const std::vector<int>& layers = {}, bool row_wise_c_w = false);

}  // namespace blocklista
