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

#include "blocklista/networks.h"

#include <cmath>
#include <stdexcept>

#include "blocklista/ops.h"

namespace blocklista {
namespace {

void check_layer(const NetworkParams& params, int t) {
  if (t < 0 || t >= params.layers()) {
    throw std::out_of_range("layer " + std::to_string(t) + " outside 0.." + std::to_string(params.layers() - 1));
  }
}

void check_kind(const NetworkParams& params, std::initializer_list<NetworkKind> allowed, const char* what) {
  for (NetworkKind k : allowed) {
    if (params.kind == k) return;
  }
  throw std::invalid_argument(std::string(what) + ": wrong network kind " + to_string(params.kind));
}

void expect_shape(const CMatrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(name + " has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

const char* to_string(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::Lista: return "lista";
    case NetworkKind::AdaLista: return "adalista";
    case NetworkKind::AdaListaSingle: return "adalista_single";
    case NetworkKind::AdaBlockLista: return "ada_blocklista";
  }
  return "unknown";
}

NetworkKind network_kind_from_string(const std::string& name) {
  if (name == "lista") return NetworkKind::Lista;
  if (name == "adalista") return NetworkKind::AdaLista;
  if (name == "adalista_single") return NetworkKind::AdaListaSingle;
  if (name == "ada_blocklista") return NetworkKind::AdaBlockLista;
  throw std::invalid_argument("unknown network kind '" + name + "'");
}

void NetworkParams::validate() const {
  const int n = n_measurements;
  const int m = partition.size();
  if (n < 1) throw std::invalid_argument("NetworkParams: N must be >= 1");
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    if (!(thetas[t] > 0.0)) throw std::invalid_argument("NetworkParams: theta[" + std::to_string(t) + "] must be > 0");
  }
  if (kind == NetworkKind::Lista) {
    if (!gammas.empty()) throw std::invalid_argument("NetworkParams: LISTA has no step sizes");
  } else if (gammas.size() != thetas.size()) {
    throw std::invalid_argument("NetworkParams: gammas and thetas differ in length");
  }
  switch (kind) {
    case NetworkKind::Lista:
      if (weights.size() != 2) throw std::invalid_argument("NetworkParams: LISTA needs W_e and W_g");
      expect_shape(weights[0], m, n, "W_e");
      expect_shape(weights[1], m, m, "W_g");
      break;
    case NetworkKind::AdaLista:
      if (weights.size() != 2) throw std::invalid_argument("NetworkParams: AdaLISTA needs W_1 and W_2");
      expect_shape(weights[0], n, n, "W_1");
      expect_shape(weights[1], n, n, "W_2");
      break;
    case NetworkKind::AdaListaSingle:
      if (weights.size() != 1) throw std::invalid_argument("NetworkParams: single-weight AdaLISTA needs W_2");
      expect_shape(weights[0], n, n, "W_2");
      break;
    case NetworkKind::AdaBlockLista:
      if (static_cast<int>(weights.size()) != partition.num_blocks()) {
        throw std::invalid_argument("NetworkParams: Ada-BlockLISTA needs one weight per block (" +
                                    std::to_string(partition.num_blocks()) + "), got " +
                                    std::to_string(weights.size()));
      }
      for (std::size_t q = 0; q < weights.size(); ++q) expect_shape(weights[q], n, n, "W_" + std::to_string(q + 1));
      break;
  }
}

NetworkParams NetworkParams::identity_init(NetworkKind kind, const BlockDictionary& dict, int layers, double gamma,
                                           double theta) {
  NetworkParams p;
  p.kind = kind;
  p.partition = dict.partition();
  p.n_measurements = dict.rows();
  const int n = dict.rows();
  const int m = dict.cols();
  p.thetas.assign(layers, theta);
  switch (kind) {
    case NetworkKind::Lista:
      p.weights = {gamma * dict.matrix().adjoint(),
                   CMatrix::Identity(m, m) - gamma * dict.matrix().adjoint() * dict.matrix()};
      break;
    case NetworkKind::AdaLista:
      p.weights = {CMatrix::Identity(n, n), CMatrix::Identity(n, n)};
      p.gammas.assign(layers, gamma);
      break;
    case NetworkKind::AdaListaSingle:
      p.weights = {CMatrix::Identity(n, n)};
      p.gammas.assign(layers, gamma);
      break;
    case NetworkKind::AdaBlockLista:
      p.weights.assign(dict.partition().num_blocks(), CMatrix::Identity(n, n));
      p.gammas.assign(layers, gamma);
      break;
  }
  p.validate();
  return p;
}

BlockSignal lista_layer(const BlockSignal& x, const Observation& obs, const NetworkParams& params, int t) {
  check_layer(params, t);
  check_kind(params, {NetworkKind::Lista}, "lista_layer");
  const CVector u = params.weights[0] * obs.y + params.weights[1] * x.data();
  return BlockSignal(x.partition(), soft_threshold(u, params.thetas[t]));
}

BlockSignal adalista_layer(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict,
                           const NetworkParams& params, int t) {
  check_layer(params, t);
  check_kind(params, {NetworkKind::AdaLista, NetworkKind::AdaListaSingle}, "adalista_layer");
  const CMatrix& phi = dict.matrix();
  const double gamma = params.gammas[t];
  CVector u;
  if (params.kind == NetworkKind::AdaListaSingle) {
    const CVector r = residual(obs, dict, x);
    u = x.data() + gamma * (phi.adjoint() * (params.weights[0].adjoint() * r));
  } else {
    check_shapes(obs, dict, x);
    const CMatrix& w1 = params.weights[0];
    const CMatrix& w2 = params.weights[1];
    const CVector v = w1 * (phi * x.data());
    u = gamma * (phi.adjoint() * (w2.adjoint() * obs.y)) + x.data() - gamma * (phi.adjoint() * (w1.adjoint() * v));
  }
  return BlockSignal(x.partition(), soft_threshold(u, params.thetas[t]));
}

BlockSignal ada_blocklista_layer(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict,
                                 const NetworkParams& params, int t) {
  check_layer(params, t);
  check_kind(params, {NetworkKind::AdaBlockLista}, "ada_blocklista_layer");
  const CVector r = residual(obs, dict, x);
  const BlockPartition& part = x.partition();
  const double gamma = params.gammas[t];
  CVector z = x.data();
  for (int q = 0; q < part.num_blocks(); ++q) {
    z.segment(part.offset(q), part.block_len()) +=
        gamma * (dict.sub(q).adjoint() * (params.weights[q].adjoint() * r));
  }
  block_soft_threshold_inplace(z, part, params.thetas[t]);
  return BlockSignal(part, std::move(z));
}

BlockSignal apply_layer(const BlockSignal& x, const Observation& obs, const BlockDictionary& dict,
                        const NetworkParams& params, int t) {
  switch (params.kind) {
    case NetworkKind::Lista: return lista_layer(x, obs, params, t);
    case NetworkKind::AdaLista:
    case NetworkKind::AdaListaSingle: return adalista_layer(x, obs, dict, params, t);
    case NetworkKind::AdaBlockLista: return ada_blocklista_layer(x, obs, dict, params, t);
  }
  throw std::logic_error("unreachable");
}

SolveResult infer(const NetworkParams& params, const Observation& obs, const BlockDictionary& dict,
                  const std::optional<BlockSignal>& x_true, bool record_trajectory) {
  params.validate();
  if (params.partition != dict.partition() || params.n_measurements != dict.rows()) {
    throw std::invalid_argument("infer: network shape does not match dictionary");
  }
  SolveResult out{BlockSignal::zeros(dict.partition()), {}};
  for (int t = 0; t < params.layers(); ++t) {
    out.x = apply_layer(out.x, obs, dict, params, t);
    out.trace.iterations_run = t + 1;
    if (record_trajectory) out.trace.iterates.push_back(out.x);
    if (x_true) out.trace.per_iter_nmse.push_back(nmse(out.x, *x_true));
  }
  return out;
}

}  // namespace blocklista
