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

#include "blocklista/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "blocklista/json_util.h"
#include "blocklista/ops.h"
#include "blocklista/parallel.h"
#include "blocklista/random.h"

namespace blocklista {
namespace {

bool block_shrinkage(NetworkKind kind) { return kind == NetworkKind::AdaBlockLista; }

// Shrinks each column of `z` in groups of `len` rows.
CMatrix shrink_columns(const CMatrix& z, int len, double theta) {
  CMatrix out(z.rows(), z.cols());
  for (Eigen::Index b = 0; b < z.cols(); ++b) {
    for (Eigen::Index i = 0; i < z.rows(); i += len) {
      const auto seg = z.col(b).segment(i, len);
      const double nrm = seg.norm();
      // NaN norms take the scaling branch so divergence stays visible.
      if (nrm <= theta) {
        out.col(b).segment(i, len).setZero();
      } else {
        out.col(b).segment(i, len) = seg * (1.0 - theta / nrm);
      }
    }
  }
  return out;
}

// Adjoint of the shrinkage. With n = ||z_g|| > theta and s = 1 - theta/n,
//   x_g = s z_g,  G_z = s G + (theta / n^3) Re(z_g^H G) z_g,
//   dL/dtheta += -Re(z_g^H G) / n.
// Culled groups pass no gradient.
CMatrix shrink_columns_backward(const CMatrix& z, int len, double theta, const CMatrix& g, double& g_theta) {
  CMatrix gz = CMatrix::Zero(z.rows(), z.cols());
  for (Eigen::Index b = 0; b < z.cols(); ++b) {
    for (Eigen::Index i = 0; i < z.rows(); i += len) {
      const auto seg = z.col(b).segment(i, len);
      const double nrm = seg.norm();
      if (nrm <= theta) continue;
      const auto gs = g.col(b).segment(i, len);
      const double proj = std::real(seg.dot(gs));
      gz.col(b).segment(i, len) = (1.0 - theta / nrm) * gs + (theta * proj / (nrm * nrm * nrm)) * seg;
      g_theta -= proj / nrm;
    }
  }
  return gz;
}

// Re <A, B> = Re tr(A^H B)
double real_inner(const CMatrix& a, const CMatrix& b) {
  return (a.array().real() * b.array().real() + a.array().imag() * b.array().imag()).sum();
}

Eigen::Map<Eigen::ArrayXd> real_view(CMatrix& m) {
  return {reinterpret_cast<double*>(m.data()), 2 * m.size()};
}

}  // namespace

void TrainingConfig::validate() const {
  if (n_train < 1 || n_val < 1 || n_test < 1) throw std::invalid_argument("TrainingConfig: sample counts must be >= 1");
  if (!(lr0 >= 0.0)) throw std::invalid_argument("TrainingConfig: lr0 must be >= 0");
  if (epochs < 0 || batch_size < 1) throw std::invalid_argument("TrainingConfig: bad epochs / batch_size");
  if (sparsity < 0) throw std::invalid_argument("TrainingConfig: sparsity must be >= 0");
  if (!(noise_sigma_w >= 0.0)) throw std::invalid_argument("TrainingConfig: noise_sigma_w must be >= 0");
  if (patience < 1) throw std::invalid_argument("TrainingConfig: patience must be >= 1");
  if (!(rollback_factor == 0.0 || rollback_factor > 1.0)) {
    throw std::invalid_argument("TrainingConfig: rollback_factor must be 0 or > 1");
  }
  if (coef_dist.min_active < 0 || coef_dist.max_active < coef_dist.min_active) {
    throw std::invalid_argument("TrainingConfig: bad active-entry range");
  }
}

void to_json(nlohmann::json& j, const TrainingConfig& cfg) {
  j = nlohmann::json{{"n_train", cfg.n_train},
                     {"n_val", cfg.n_val},
                     {"n_test", cfg.n_test},
                     {"lr0", cfg.lr0},
                     {"epochs", cfg.epochs},
                     {"batch_size", cfg.batch_size},
                     {"seed", cfg.seed},
                     {"sparsity", cfg.sparsity},
                     {"min_active", cfg.coef_dist.min_active},
                     {"max_active", cfg.coef_dist.max_active},
                     {"coef_scale", cfg.coef_dist.scale},
                     {"noise_sigma_w", cfg.noise_sigma_w},
                     {"patience", cfg.patience},
                     {"rollback_factor", cfg.rollback_factor},
                     {"scalar_lr_scale", cfg.scalar_lr_scale}};
  if (std::isfinite(cfg.coef_dist.zeta)) j["zeta"] = cfg.coef_dist.zeta;
}

void from_json(const nlohmann::json& j, TrainingConfig& cfg) {
  json_util::check_keys(j,
                        {"n_train", "n_val", "n_test", "lr0", "epochs", "batch_size", "seed", "sparsity", "min_active",
                         "max_active", "coef_scale", "zeta", "noise_sigma_w", "patience", "rollback_factor",
                         "scalar_lr_scale", "threads"},
                        "training config");
  TrainingConfig out;
  json_util::read(j, "n_train", out.n_train);
  json_util::read(j, "n_val", out.n_val);
  json_util::read(j, "n_test", out.n_test);
  json_util::read(j, "lr0", out.lr0);
  json_util::read(j, "epochs", out.epochs);
  json_util::read(j, "batch_size", out.batch_size);
  json_util::read(j, "seed", out.seed);
  json_util::read(j, "sparsity", out.sparsity);
  json_util::read(j, "min_active", out.coef_dist.min_active);
  json_util::read(j, "max_active", out.coef_dist.max_active);
  json_util::read(j, "coef_scale", out.coef_dist.scale);
  json_util::read(j, "zeta", out.coef_dist.zeta);
  json_util::read(j, "noise_sigma_w", out.noise_sigma_w);
  json_util::read(j, "patience", out.patience);
  json_util::read(j, "rollback_factor", out.rollback_factor);
  json_util::read(j, "scalar_lr_scale", out.scalar_lr_scale);
  json_util::read(j, "threads", out.threads);
  out.validate();
  cfg = out;
}

std::vector<Sample> generate_samples(const BlockDictionary& dict, const TrainingConfig& cfg, int count,
                                     std::uint64_t seed) {
  const BlockPartition& part = dict.partition();
  if (cfg.sparsity > part.num_blocks()) {
    throw std::invalid_argument("generate_dataset: sparsity " + std::to_string(cfg.sparsity) + " exceeds Q=" +
                                std::to_string(part.num_blocks()));
  }
  const int p = part.block_len();
  const int lo = cfg.coef_dist.min_active == 0 ? p : std::min(cfg.coef_dist.min_active, p);
  const int hi = cfg.coef_dist.max_active == 0 ? p : std::min(cfg.coef_dist.max_active, p);
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    BlockSignal x(part);
    for (int q : rng.choose(part.num_blocks(), cfg.sparsity)) {
      const int active = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
      auto blk = x.block(q);
      for (int e : rng.choose(p, active)) blk[e] = cfg.coef_dist.scale * rng.complex_normal();
      const double nrm = blk.norm();
      if (nrm > cfg.coef_dist.zeta) blk *= cfg.coef_dist.zeta / nrm;
    }
    Observation obs{dict.apply(x), cfg.noise_sigma_w};
    if (cfg.noise_sigma_w > 0.0) {
      for (Eigen::Index n = 0; n < obs.y.size(); ++n) obs.y[n] += cfg.noise_sigma_w * rng.complex_normal();
    }
    out.push_back({std::move(x), std::move(obs)});
  }
  return out;
}

Dataset generate_dataset(const BlockDictionary& dict, const TrainingConfig& cfg) {
  cfg.validate();
  Dataset d;
  d.train = generate_samples(dict, cfg, cfg.n_train, mix_seed(cfg.seed, 1));
  d.val = generate_samples(dict, cfg, cfg.n_val, mix_seed(cfg.seed, 2));
  d.test = generate_samples(dict, cfg, cfg.n_test, mix_seed(cfg.seed, 3));
  return d;
}

Gradients Gradients::zeros_like(const NetworkParams& params) {
  Gradients g;
  for (const CMatrix& w : params.weights) g.weights.push_back(CMatrix::Zero(w.rows(), w.cols()));
  g.thetas.assign(params.thetas.size(), 0.0);
  g.gammas.assign(params.gammas.size(), 0.0);
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (weights.size() != other.weights.size() || thetas.size() != other.thetas.size() ||
      gammas.size() != other.gammas.size()) {
    throw std::invalid_argument("Gradients: shape mismatch");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) weights[k] += other.weights[k];
  for (std::size_t t = 0; t < thetas.size(); ++t) thetas[t] += other.thetas[t];
  for (std::size_t t = 0; t < gammas.size(); ++t) gammas[t] += other.gammas[t];
  return *this;
}

Batch Batch::from_samples(const std::vector<Sample>& samples, const std::vector<int>& indices) {
  if (indices.empty()) throw std::invalid_argument("Batch: empty");
  const Sample& first = samples.at(indices[0]);
  Batch b{CMatrix(first.x.size(), static_cast<Eigen::Index>(indices.size())),
          CMatrix(first.obs.y.size(), static_cast<Eigen::Index>(indices.size()))};
  for (std::size_t k = 0; k < indices.size(); ++k) {
    b.x_true.col(k) = samples.at(indices[k]).x.data();
    b.y.col(k) = samples.at(indices[k]).obs.y;
  }
  return b;
}

Batch Batch::from_samples(const std::vector<Sample>& samples) {
  std::vector<int> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  return from_samples(samples, idx);
}

UnfoldedGraph::UnfoldedGraph(const NetworkParams& params, const BlockDictionary& dict)
    : params_(params), dict_(dict), shrink_len_(block_shrinkage(params.kind) ? dict.partition().block_len() : 1) {
  params.validate();
  if (params.partition != dict.partition() || params.n_measurements != dict.rows()) {
    throw std::invalid_argument("UnfoldedGraph: network shape does not match dictionary");
  }
  const CMatrix& phi = dict.matrix();
  switch (params.kind) {
    case NetworkKind::Lista: break;
    case NetworkKind::AdaLista:
      c1_ = params.weights[0] * phi;
      c2_ = params.weights[1] * phi;
      break;
    case NetworkKind::AdaListaSingle: c2_ = params.weights[0] * phi; break;
    case NetworkKind::AdaBlockLista: {
      const BlockPartition& part = dict.partition();
      b_.resize(phi.rows(), phi.cols());
      for (int q = 0; q < part.num_blocks(); ++q) {
        b_.middleCols(part.offset(q), part.block_len()).noalias() = params.weights[q] * dict.sub(q);
      }
      break;
    }
  }
}

CMatrix UnfoldedGraph::forward(const CMatrix& y, ForwardTape* tape) const {
  const CMatrix& phi = dict_.matrix();
  CMatrix x = CMatrix::Zero(phi.cols(), y.cols());
  CMatrix c2y;
  if (params_.kind == NetworkKind::AdaLista) c2y = c2_.adjoint() * y;
  if (tape) {
    *tape = ForwardTape{};
    tape->x.push_back(x);
  }
  for (int t = 0; t < params_.layers(); ++t) {
    CMatrix z;
    CMatrix aux;
    CMatrix drive;
    switch (params_.kind) {
      case NetworkKind::Lista:
        z = params_.weights[0] * y + params_.weights[1] * x;
        break;
      case NetworkKind::AdaLista:
        aux = c1_ * x;
        drive = c2y - c1_.adjoint() * aux;
        z = x + params_.gammas[t] * drive;
        break;
      case NetworkKind::AdaListaSingle:
        aux = y - phi * x;
        drive = c2_.adjoint() * aux;
        z = x + params_.gammas[t] * drive;
        break;
      case NetworkKind::AdaBlockLista:
        aux = y - phi * x;
        drive = b_.adjoint() * aux;
        z = x + params_.gammas[t] * drive;
        break;
    }
    x = shrink_columns(z, shrink_len_, params_.thetas[t]);
    if (tape) {
      tape->z.push_back(std::move(z));
      tape->aux.push_back(std::move(aux));
      tape->drive.push_back(std::move(drive));
      tape->x.push_back(x);
    }
  }
  return x;
}

Gradients UnfoldedGraph::start_accumulation() const {
  Gradients acc;
  const Eigen::Index n = dict_.rows();
  const Eigen::Index m = dict_.cols();
  switch (params_.kind) {
    case NetworkKind::Lista:
      for (const CMatrix& w : params_.weights) acc.weights.push_back(CMatrix::Zero(w.rows(), w.cols()));
      break;
    case NetworkKind::AdaLista: acc.weights.assign(2, CMatrix::Zero(n, m)); break;
    case NetworkKind::AdaListaSingle:
    case NetworkKind::AdaBlockLista: acc.weights.assign(1, CMatrix::Zero(n, m)); break;
  }
  acc.thetas.assign(params_.thetas.size(), 0.0);
  acc.gammas.assign(params_.gammas.size(), 0.0);
  return acc;
}

CMatrix UnfoldedGraph::layer_backward(int t, const CMatrix& y, const ForwardTape& tape, const CMatrix& g_next,
                                      Gradients& acc) const {
  const CMatrix& phi = dict_.matrix();
  const CMatrix& x = tape.x[t];
  const CMatrix gz = shrink_columns_backward(tape.z[t], shrink_len_, params_.thetas[t], g_next, acc.thetas[t]);
  switch (params_.kind) {
    case NetworkKind::Lista:
      // z = W_e y + W_g x
      acc.weights[0].noalias() += gz * y.adjoint();
      acc.weights[1].noalias() += gz * x.adjoint();
      return params_.weights[1].adjoint() * gz;
    case NetworkKind::AdaLista: {
      // z = x + gamma (C2^H y - C1^H v), v = C1 x
      const double gamma = params_.gammas[t];
      const CMatrix& v = tape.aux[t];
      acc.gammas[t] += real_inner(tape.drive[t], gz);
      acc.weights[1].noalias() += gamma * (y * gz.adjoint());
      const CMatrix gv = -gamma * (c1_ * gz);
      acc.weights[0].noalias() += -gamma * (v * gz.adjoint());
      acc.weights[0].noalias() += gv * x.adjoint();
      CMatrix gx = gz;
      gx.noalias() += c1_.adjoint() * gv;
      return gx;
    }
    case NetworkKind::AdaListaSingle:
    case NetworkKind::AdaBlockLista: {
      // z = x + gamma C^H r, r = y - Phi x, with C = W_2 Phi or [W_q Phi_q]
      const CMatrix& c = params_.kind == NetworkKind::AdaBlockLista ? b_ : c2_;
      const double gamma = params_.gammas[t];
      const CMatrix& r = tape.aux[t];
      acc.gammas[t] += real_inner(tape.drive[t], gz);
      acc.weights[0].noalias() += gamma * (r * gz.adjoint());
      const CMatrix gr = gamma * (c * gz);
      CMatrix gx = gz;
      gx.noalias() -= phi.adjoint() * gr;
      return gx;
    }
  }
  throw std::logic_error("unreachable");
}

Gradients UnfoldedGraph::finalize(Gradients acc) const {
  const CMatrix& phi = dict_.matrix();
  switch (params_.kind) {
    case NetworkKind::Lista: return acc;
    case NetworkKind::AdaLista:
      acc.weights[0] = acc.weights[0] * phi.adjoint();
      acc.weights[1] = acc.weights[1] * phi.adjoint();
      return acc;
    case NetworkKind::AdaListaSingle: acc.weights[0] = acc.weights[0] * phi.adjoint(); return acc;
    case NetworkKind::AdaBlockLista: {
      const BlockPartition& part = dict_.partition();
      const CMatrix gb = std::move(acc.weights[0]);
      acc.weights.clear();
      for (int q = 0; q < part.num_blocks(); ++q) {
        acc.weights.push_back(gb.middleCols(part.offset(q), part.block_len()) * dict_.sub(q).adjoint());
      }
      return acc;
    }
  }
  throw std::logic_error("unreachable");
}

Gradients UnfoldedGraph::backward(const CMatrix& y, const ForwardTape& tape, const CMatrix& g_output,
                                  CMatrix* g_input) const {
  Gradients acc = start_accumulation();
  CMatrix g = g_output;
  for (int t = params_.layers() - 1; t >= 0; --t) g = layer_backward(t, y, tape, g, acc);
  if (g_input) *g_input = g;
  return finalize(std::move(acc));
}

double batch_loss(const NetworkParams& params, const BlockDictionary& dict, const Batch& batch) {
  UnfoldedGraph graph(params, dict);
  const CMatrix xt = graph.forward(batch.y);
  double sum = 0.0;
  for (Eigen::Index b = 0; b < xt.cols(); ++b) {
    const double denom = batch.x_true.col(b).norm();
    if (denom == 0.0) throw std::invalid_argument("batch_loss: zero ground truth in batch");
    sum += (batch.x_true.col(b) - xt.col(b)).norm() / denom;
  }
  return sum / static_cast<double>(xt.cols());
}

LossAndGradients backward(const NetworkParams& params, const Batch& batch, const BlockDictionary& dict, int threads) {
  UnfoldedGraph graph(params, dict);
  const int total = batch.size();
  // Fixed chunking keeps the reduction order, and so the result, independent
  // of the thread count.
  constexpr int kChunks = 4;
  const int chunks = std::min(kChunks, total);
  std::vector<LossAndGradients> parts(chunks);
  parallel_for(chunks, threads, [&](int c) {
    const int begin = static_cast<int>(static_cast<long long>(total) * c / chunks);
    const int end = static_cast<int>(static_cast<long long>(total) * (c + 1) / chunks);
    const CMatrix y = batch.y.middleCols(begin, end - begin);
    const CMatrix xs = batch.x_true.middleCols(begin, end - begin);
    ForwardTape tape;
    const CMatrix xt = graph.forward(y, &tape);
    CMatrix g(xt.rows(), xt.cols());
    double loss = 0.0;
    for (Eigen::Index b = 0; b < xt.cols(); ++b) {
      const double denom = xs.col(b).norm();
      if (denom == 0.0) throw std::invalid_argument("backward: zero ground truth in batch");
      const CVector diff = xt.col(b) - xs.col(b);
      const double err = diff.norm();
      loss += err / denom;
      // d(||d|| / ||x*||) = Re(d^H dd) / (||d|| ||x*||)
      g.col(b) = err > 0.0 ? CVector(diff / (err * denom * total)) : CVector::Zero(diff.size());
    }
    parts[c].loss = loss / total;
    parts[c].grads = graph.backward(y, tape, g);
  });
  LossAndGradients out = std::move(parts[0]);
  for (int c = 1; c < chunks; ++c) {
    out.loss += parts[c].loss;
    out.grads += parts[c].grads;
  }
  return out;
}

double calibrate_initial_threshold(const NetworkParams& params, const BlockDictionary& dict,
                                   const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("calibrate_initial_threshold: no samples");
  NetworkParams one = params;
  one.thetas.assign(1, 1.0);
  if (!one.gammas.empty()) one.gammas.resize(1);
  UnfoldedGraph graph(one, dict);
  const Batch batch = Batch::from_samples(samples);
  ForwardTape tape;
  graph.forward(batch.y, &tape);
  const CMatrix& z = tape.z[0];
  const int len = block_shrinkage(params.kind) ? dict.partition().block_len() : 1;
  std::vector<double> norms;
  for (Eigen::Index b = 0; b < z.cols(); ++b) {
    for (Eigen::Index i = 0; i < z.rows(); i += len) {
      if (batch.x_true.col(b).segment(i, len).norm() > 0.0) norms.push_back(z.col(b).segment(i, len).norm());
    }
  }
  if (norms.empty()) throw std::invalid_argument("calibrate_initial_threshold: samples have no active entries");
  const auto mid = norms.begin() + static_cast<std::ptrdiff_t>(norms.size() / 2);
  std::nth_element(norms.begin(), mid, norms.end());
  return std::max(*mid, 1e-12);
}

TrainingResult train(const NetworkParams& init, const BlockDictionary& dict, const Dataset& data,
                     const TrainingConfig& cfg) {
  cfg.validate();
  if (data.train.empty() || data.val.empty()) throw std::invalid_argument("train: empty training or validation set");
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  NetworkParams params = init;
  params.validate();
  const int layers = params.layers();
  std::vector<double> rho(layers);
  for (int t = 0; t < layers; ++t) rho[t] = std::log(params.thetas[t]);

  // Adam moments; complex weights are treated as pairs of real coordinates.
  std::vector<CMatrix> m_w, v_w;
  for (const CMatrix& w : params.weights) {
    m_w.push_back(CMatrix::Zero(w.rows(), w.cols()));
    v_w.push_back(CMatrix::Zero(w.rows(), w.cols()));
  }
  std::vector<double> m_rho(layers, 0.0), v_rho(layers, 0.0);
  std::vector<double> m_gam(params.gammas.size(), 0.0), v_gam(params.gammas.size(), 0.0);
  long long step = 0;
  auto restart_from = [&](const NetworkParams& p) {
    params = p;
    for (int t = 0; t < layers; ++t) rho[t] = std::log(params.thetas[t]);
    for (std::size_t k = 0; k < m_w.size(); ++k) {
      m_w[k].setZero();
      v_w[k].setZero();
    }
    std::fill(m_rho.begin(), m_rho.end(), 0.0);
    std::fill(v_rho.begin(), v_rho.end(), 0.0);
    std::fill(m_gam.begin(), m_gam.end(), 0.0);
    std::fill(v_gam.begin(), v_gam.end(), 0.0);
    step = 0;
  };

  const Batch val = Batch::from_samples(data.val);
  TrainingResult result;
  result.initial_val_nmse = batch_loss(params, dict, val);
  result.best_val_nmse = result.initial_val_nmse;
  result.params = params;

  double lr = cfg.lr0;
  int stale = 0;
  const int n = static_cast<int>(data.train.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle(mix_seed(cfg.seed, 0x5000 + static_cast<std::uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(static_cast<std::uint64_t>(i + 1))]);

    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      const std::vector<int> idx(order.begin() + start, order.begin() + end);
      const Batch batch = Batch::from_samples(data.train, idx);
      LossAndGradients lg = backward(params, batch, dict, cfg.threads);
      if (!std::isfinite(lg.loss)) {
        throw std::runtime_error("train: loss is " + std::to_string(lg.loss) + " at epoch " + std::to_string(epoch) +
                                 ", batch starting at " + std::to_string(start) + " (lr " + std::to_string(lr) + ")");
      }
      loss_sum += lg.loss * (end - start);

      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t k = 0; k < params.weights.size(); ++k) {
        auto g = real_view(lg.grads.weights[k]);
        auto m = real_view(m_w[k]);
        auto v = real_view(v_w[k]);
        auto w = real_view(params.weights[k]);
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * g.square();
        w -= lr * (m / bc1) / ((v / bc2).sqrt() + kEps);
      }
      const double slr = lr * cfg.scalar_lr_scale;
      for (int t = 0; t < layers; ++t) {
        const double g = lg.grads.thetas[t] * params.thetas[t];  // d/d rho
        m_rho[t] = kBeta1 * m_rho[t] + (1.0 - kBeta1) * g;
        v_rho[t] = kBeta2 * v_rho[t] + (1.0 - kBeta2) * g * g;
        rho[t] -= slr * (m_rho[t] / bc1) / (std::sqrt(v_rho[t] / bc2) + kEps);
        params.thetas[t] = std::exp(rho[t]);
      }
      for (std::size_t t = 0; t < params.gammas.size(); ++t) {
        const double g = lg.grads.gammas[t];
        m_gam[t] = kBeta1 * m_gam[t] + (1.0 - kBeta1) * g;
        v_gam[t] = kBeta2 * v_gam[t] + (1.0 - kBeta2) * g * g;
        params.gammas[t] -= slr * (m_gam[t] / bc1) / (std::sqrt(v_gam[t] / bc2) + kEps);
      }
    }

    const double val_nmse = batch_loss(params, dict, val);
    if (!std::isfinite(val_nmse)) {
      throw std::runtime_error("train: validation NMSE is " + std::to_string(val_nmse) + " after epoch " +
                               std::to_string(epoch));
    }
    result.log.push_back({epoch, loss_sum / n, val_nmse, lr});
    if (val_nmse < result.best_val_nmse) {
      result.best_val_nmse = val_nmse;
      result.params = params;
      stale = 0;
    } else if (cfg.rollback_factor > 0.0 && val_nmse > cfg.rollback_factor * result.best_val_nmse) {
      restart_from(result.params);
      lr *= 0.5;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      lr *= 0.5;
      stale = 0;
    }
  }
  return result;
}

TrainingResult train_network(NetworkKind kind, const BlockDictionary& dict, int layers, const TrainingConfig& cfg) {
  const Dataset data = generate_dataset(dict, cfg);
  NetworkParams init = NetworkParams::identity_init(kind, dict, layers, 1.0 / lipschitz_constant(dict), 1.0);
  const double theta = calibrate_initial_threshold(init, dict, data.val);
  for (double& th : init.thetas) th = theta;
  return train(init, dict, data, cfg);
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << "epoch,train_nmse,val_nmse,lr\n";
  char buf[128];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_nmse, e.val_nmse, e.lr);
    os << buf;
  }
  return os.str();
}

}  // namespace blocklista
