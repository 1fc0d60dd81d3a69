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
#include <string>
#include <vector>

#include "blocklista/core_types.h"
#include "blocklista/solve_result.h"

namespace blocklista {

enum class NetworkKind { Lista, AdaLista, AdaListaSingle, AdaBlockLista };

const char* to_string(NetworkKind kind);
NetworkKind network_kind_from_string(const std::string& name);

// Learned parameters of a T-layer unfolded network.
//
// `weights` holds the layer-shared matrices, in order:
//   Lista:          W_e (M x N), W_g (M x M)
//   AdaLista:       W_1 (N x N), W_2 (N x N)
//   AdaListaSingle: W_2 (N x N)
//   AdaBlockLista:  W_1 .. W_Q (N x N each)
// `thetas` and `gammas` are per layer; `gammas` is empty for Lista.
struct NetworkParams {
  NetworkKind kind = NetworkKind::AdaBlockLista;
  BlockPartition partition{1, 1};
  int n_measurements = 0;
  std::vector<CMatrix> weights;
  std::vector<double> thetas;
  std::vector<double> gammas;

  int layers() const { return static_cast<int>(thetas.size()); }

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  // Identity weights (Lista: W_e = Phi^H / L, W_g = I - Phi^H Phi / L), the
  // given step and threshold in every layer.
  static NetworkParams identity_init(NetworkKind kind, const BlockDictionary& dict, int layers, double gamma,
                                     double theta);
};

// x' = soft_theta(W_e y + W_g x)
BlockSignal lista_layer(const BlockSignal& x, const Observation& obs, const NetworkParams& params, int t);

// Dual-weight form (kind AdaLista):
//   soft_theta(gamma Phi^H W_2^H y + (I - gamma Phi^H W_1^H W_1 Phi) x)
// Single-weight form (kind AdaListaSingle):
//   soft_theta(x + gamma Phi^H W_2^H (y - Phi x))
BlockSignal adalista_layer(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict,
                           const NetworkParams& params, int t);

// One residual r = y - Phi x per layer, then for each block
//   z_q = x_q + gamma Phi_q^H W_q^H r,  x_q' = z_q (1 - theta/||z_q||)_+.
BlockSignal ada_blocklista_layer(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict,
                                 const NetworkParams& params, int t);

BlockSignal apply_layer(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict,
                        const NetworkParams& params, int t);

// Runs all T layers from x^(0) = 0.
SolveResult infer(const NetworkParams& params, const Observation& obs, const BlockDictionary& dict,
                  const std::optional<BlockSignal>& x_true = std::nullopt, bool record_trajectory = false);

}  // namespace blocklista
