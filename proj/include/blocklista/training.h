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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blocklista/core_types.h"
#include "blocklista/networks.h"

namespace blocklista {

// How nonzero blocks of a training signal are filled.
struct CoefficientDistribution {
  // Entries per active block drawn uniformly in [min_active, max_active]
  // (0 means "all P"); the entries are i.i.d. complex normal times `scale`.
  int min_active = 0;
  int max_active = 0;
  double scale = 1.0;
  // Blocks whose norm exceeds zeta are rescaled to norm zeta.
  double zeta = std::numeric_limits<double>::infinity();
};

struct TrainingConfig {
  int n_train = 2000;
  int n_val = 200;
  int n_test = 500;
  double lr0 = 5e-4;
  int epochs = 20;
  int batch_size = 50;
  std::uint64_t seed = 1;
  int sparsity = 1;  // active blocks per sample
  CoefficientDistribution coef_dist;
  double noise_sigma_w = 0.0;
  // Learning rate halves after this many evaluations without improvement.
  int patience = 5;
  // An epoch whose validation NMSE exceeds this multiple of the best so far
  // restores the best parameters, resets Adam and halves the learning rate.
  // 0 disables the rollback.
  double rollback_factor = 2.0;
  // Multiplies lr for the per-layer scalars (log thresholds and step sizes).
  double scalar_lr_scale = 1.0;
  int threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainingConfig& cfg);
void from_json(const nlohmann::json& j, TrainingConfig& cfg);

struct Sample {
  BlockSignal x;
  Observation obs;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

// Draws n_train + n_val + n_test samples y = Phi x* + sigma_w w with exactly
// `sparsity` active blocks on a uniformly drawn support. Deterministic in seed.
Dataset generate_dataset(const BlockDictionary& dict, const TrainingConfig& cfg);
std::vector<Sample> generate_samples(const BlockDictionary& dict, const TrainingConfig& cfg, int count,
                                     std::uint64_t seed);

// Gradient of a real loss. For complex weights the entry is dL/dRe + i dL/dIm.
struct Gradients {
  std::vector<CMatrix> weights;
  std::vector<double> thetas;
  std::vector<double> gammas;

  static Gradients zeros_like(const NetworkParams& params);
  Gradients& operator+=(const Gradients& other);
};

// Packs a batch column-wise: X is M x B, Y is N x B.
struct Batch {
  CMatrix x_true;
  CMatrix y;

  static Batch from_samples(const std::vector<Sample>& samples, const std::vector<int>& indices);
  static Batch from_samples(const std::vector<Sample>& samples);
  int size() const { return static_cast<int>(y.cols()); }
};

// Intermediate values kept by the forward pass for the adjoint sweep.
struct ForwardTape {
  std::vector<CMatrix> x;      // x^(0..T), M x B each
  std::vector<CMatrix> z;      // pre-shrink values, one per layer
  std::vector<CMatrix> aux;    // residual r (N x B) or W_1 Phi x for the dual form
  std::vector<CMatrix> drive;  // the term multiplied by gamma in each layer
};

// The unfolded network evaluated on a whole batch at once, with its adjoint.
class UnfoldedGraph {
 public:
  UnfoldedGraph(const NetworkParams& params, const BlockDictionary& dict);

  CMatrix forward(const CMatrix& y, ForwardTape* tape = nullptr) const;

  // Propagates the cotangent of x^(T) (same convention as Gradients) back
  // through every layer. `g_input`, when given, receives the cotangent of x^(0).
  Gradients backward(const CMatrix& y, const ForwardTape& tape, const CMatrix& g_output,
                     CMatrix* g_input = nullptr) const;

  // Adjoint of the single layer t: consumes the cotangent of x^(t+1), returns
  // the cotangent of x^(t) and adds this layer's parameter terms to `acc`.
  // Weight terms in `acc` stay in product form (gradients with respect to
  // W_q Phi_q, W_1 Phi, W_2 Phi) until finalize() maps them back to the weights.
  Gradients start_accumulation() const;
  CMatrix layer_backward(int t, const CMatrix& y, const ForwardTape& tape, const CMatrix& g_next,
                         Gradients& acc) const;
  Gradients finalize(Gradients acc) const;

 private:
  const NetworkParams& params_;
  const BlockDictionary& dict_;
  CMatrix b_;   // [W_1 Phi_1 .. W_Q Phi_Q] for Ada-BlockLISTA
  CMatrix c1_;  // W_1 Phi (dual AdaLISTA)
  CMatrix c2_;  // W_2 Phi (AdaLISTA, both forms)
  int shrink_len_ = 1;
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

// Mean NMSE of x^(T) over the batch.
double batch_loss(const NetworkParams& params, const BlockDictionary& dict, const Batch& batch);

// Loss and its gradient with respect to every weight, theta^(t) and gamma^(t).
LossAndGradients backward(const NetworkParams& params, const Batch& batch, const BlockDictionary& dict,
                          int threads = 1);

struct EpochLog {
  int epoch = 0;
  double train_nmse = 0.0;
  double val_nmse = 0.0;
  double lr = 0.0;
};

struct TrainingResult {
  NetworkParams params;  // parameters with the best validation NMSE
  std::vector<EpochLog> log;
  double initial_val_nmse = 0.0;
  double best_val_nmse = 0.0;
};

// Adam (0.9, 0.999, 1e-8) on every parameter; thresholds are optimized as
// theta = exp(rho). Throws std::runtime_error if the loss turns NaN.
TrainingResult train(const NetworkParams& init, const BlockDictionary& dict, const Dataset& data,
                     const TrainingConfig& cfg);

// Threshold such that about half of the true active blocks (or entries for
// element-wise networks) survive the first layer of `params` on `samples`.
double calibrate_initial_threshold(const NetworkParams& params, const BlockDictionary& dict,
                                   const std::vector<Sample>& samples);

// Draws the dataset of `cfg`, starts from identity weights with step 1/L and
// a calibrated threshold, and trains.
TrainingResult train_network(NetworkKind kind, const BlockDictionary& dict, int layers, const TrainingConfig& cfg);

std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace blocklista
