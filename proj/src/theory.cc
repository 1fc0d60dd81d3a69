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

#include "blocklista/theory.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/QR>
#include <stdexcept>
#include <string>

#include "blocklista/networks.h"
#include "blocklista/parallel.h"
#include "blocklista/random.h"

namespace blocklista {
namespace {

ConditionCheck sparsity_condition(double lhs, double mu, double nu, int block_len, double rhs_scale) {
  if (mu == 0.0) return {true, std::numeric_limits<double>::infinity()};
  const double p = block_len;
  const double rhs = rhs_scale * (1.0 / mu + p - (p - 1.0) * nu / mu);
  return {lhs < rhs, rhs - lhs};
}

}  // namespace

double noise_norm_bound(int n, double delta) {
  if (n < 1) throw std::invalid_argument("noise_norm_bound: N must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("noise_norm_bound: delta must lie in (0, 1)");
  const double x = std::log(1.0 / delta);
  return std::sqrt(n + std::sqrt(2.0 * n * x) + x);
}

ConditionCheck check_block_yonina(const CoherenceReport& report, int s, int block_len) {
  return sparsity_condition(static_cast<double>(s) * block_len, report.block_coherence, report.sub_coherence,
                            block_len, 0.5);
}

ConditionCheck check_block_yonina(const BlockDictionary& dict, int s) {
  return check_block_yonina(coherence_report(dict), s, dict.partition().block_len());
}

ConditionCheck check_adablock_condition(const GeneralizedCoherenceReport& report, int s, int block_len) {
  return sparsity_condition(s, report.mu_tilde, report.nu_tilde, block_len, 1.0 / (2.0 * block_len));
}

double contraction_factor(const GeneralizedCoherenceReport& report, int s, int block_len) {
  const double p = block_len;
  return (p - 1.0) * report.nu_tilde + p * report.mu_tilde * (2.0 * s - 1.0);
}

ConvergenceConstants convergence_constants(const GeneralizedCoherenceReport& report, int s, int block_len) {
  const double factor = contraction_factor(report, s, block_len);
  if (!(factor < 1.0)) {
    throw std::invalid_argument("convergence_constants: contraction factor " + std::to_string(factor) + " >= 1");
  }
  ConvergenceConstants out;
  out.c1 = factor > 0.0 ? -std::log(factor) : std::numeric_limits<double>::infinity();
  out.c2 = 2.0 * s * report.c_w / (1.0 - factor);
  return out;
}

ThresholdSchedule theorem_threshold_schedule(const GeneralizedCoherenceReport& report, int s, int block_len,
                                             double zeta, double sigma, int layers) {
  if (layers < 0) throw std::invalid_argument("theorem_threshold_schedule: negative layer count");
  if (!check_adablock_condition(report, s, block_len).satisfied) {
    throw std::invalid_argument("theorem_threshold_schedule: sparsity condition violated");
  }
  const double factor = contraction_factor(report, s, block_len);
  ThresholdSchedule out;
  out.error_bounds.push_back(s * zeta);
  for (int t = 0; t < layers; ++t) {
    const double e = out.error_bounds.back();
    out.thetas.push_back(block_len * report.mu_tilde * e + report.c_w * sigma);
    out.error_bounds.push_back(factor * e + 2.0 * s * report.c_w * sigma);
  }
  return out;
}

LogSlopeFit fit_log_slope(const std::vector<double>& values, int first, int last) {
  if (first < 0 || last >= static_cast<int>(values.size()) || first > last) {
    throw std::invalid_argument("fit_log_slope: bad index range");
  }
  std::vector<double> ts;
  std::vector<double> ls;
  for (int t = first; t <= last; ++t) {
    if (values[t] > 0.0) {
      ts.push_back(t);
      ls.push_back(std::log(values[t]));
    }
  }
  LogSlopeFit fit;
  fit.points = static_cast<int>(ts.size());
  if (fit.points < 2) throw std::invalid_argument("fit_log_slope: fewer than two positive values");
  const double n = fit.points;
  const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
  const double ml = std::accumulate(ls.begin(), ls.end(), 0.0) / n;
  double stt = 0.0;
  double stl = 0.0;
  double sll = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    stl += (ts[i] - mt) * (ls[i] - ml);
    sll += (ls[i] - ml) * (ls[i] - ml);
  }
  fit.slope = stl / stt;
  fit.intercept = ml - fit.slope * mt;
  fit.r_squared = sll == 0.0 ? 1.0 : stl * stl / (stt * sll);
  return fit;
}

BlockDictionary gaussian_dictionary(int rows, int block_len, int num_blocks, std::uint64_t seed) {
  Rng rng(seed);
  CMatrix m(rows, block_len * num_blocks);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.complex_normal();
  }
  return BlockDictionary::normalized(std::move(m), {num_blocks, block_len});
}

BlockDictionary orthogonal_block_dictionary(int rows, int block_len, int num_blocks, std::uint64_t seed) {
  if (block_len > rows) throw std::invalid_argument("orthogonal_block_dictionary: P exceeds N");
  CMatrix m = gaussian_dictionary(rows, block_len, num_blocks, seed).matrix();
  for (int q = 0; q < num_blocks; ++q) {
    Eigen::HouseholderQR<CMatrix> qr(m.middleCols(q * block_len, block_len));
    m.middleCols(q * block_len, block_len) = qr.householderQ() * CMatrix::Identity(rows, block_len);
  }
  return BlockDictionary(std::move(m), {num_blocks, block_len});
}

BlockSignal random_block_sparse(const BlockPartition& partition, int s, double lo, double hi, std::uint64_t seed) {
  if (s < 0 || s > partition.num_blocks()) throw std::invalid_argument("random_block_sparse: need 0 <= s <= Q");
  Rng rng(seed);
  BlockSignal x(partition);
  for (int q : rng.choose(partition.num_blocks(), s)) {
    auto blk = x.block(q);
    for (Eigen::Index i = 0; i < blk.size(); ++i) blk[i] = rng.complex_normal();
    const double target = rng.uniform(lo, hi);
    const double nrm = blk.norm();
    if (nrm > 0.0) blk *= target / nrm;
  }
  return x;
}

TheoremVerification verify_theorem(const BlockDictionary& dict, const TheoremOptions& opts) {
  if (!dict.is_normalized()) throw std::invalid_argument("verify_theorem: dictionary must be column-normalized");
  if (opts.trials < 1) throw std::invalid_argument("verify_theorem: trials must be >= 1");
  const BlockPartition& part = dict.partition();
  const int p = part.block_len();
  const int n = dict.rows();
  const int layers = opts.layers;

  TheoremVerification out;
  out.trials = opts.trials;
  // W_q = I, gamma = 1 makes diag(gamma Phi_q^H W_q Phi_q) = 1 exactly.
  NetworkParams net = NetworkParams::identity_init(NetworkKind::AdaBlockLista, dict, std::max(layers, 1), 1.0, 1.0);
  out.coherences = generalized_coherences(dict, net);
  out.condition = check_adablock_condition(out.coherences, opts.s, p);
  if (!out.condition.satisfied) {
    throw std::invalid_argument("verify_theorem: sparsity condition fails for s=" + std::to_string(opts.s) +
                                " (margin " + std::to_string(out.condition.margin) + ")");
  }
  out.constants = convergence_constants(out.coherences, opts.s, p);
  out.sigma = opts.sigma_w > 0.0 ? opts.sigma_w * noise_norm_bound(n, opts.delta) : 0.0;
  out.schedule = theorem_threshold_schedule(out.coherences, opts.s, p, opts.zeta, out.sigma, layers);

  std::vector<double> bound(layers + 1);
  for (int t = 0; t <= layers; ++t) {
    const double decay = t == 0 ? 1.0 : std::exp(-out.constants.c1 * t);
    bound[t] = opts.s * opts.zeta * decay + out.constants.c2 * out.sigma;
  }

  // s = 0 or an all-zero schedule: x* = 0 and the estimate never leaves 0.
  const bool trivial = opts.s == 0 || layers == 0;
  if (!trivial) {
    net.thetas.clear();
    for (double th : out.schedule.thetas) net.thetas.push_back(th * opts.threshold_scale);
    net.gammas.assign(layers, 1.0);
  }

  struct TrialResult {
    bool contained = true;
    std::vector<double> errors;
  };
  std::vector<TrialResult> results(opts.trials);
  parallel_for(opts.trials, opts.threads, [&](int i) {
    const std::uint64_t seed = mix_seed(opts.seed, static_cast<std::uint64_t>(i));
    const BlockSignal x_true = random_block_sparse(part, opts.s, 0.5 * opts.zeta, opts.zeta, seed);
    Observation obs{dict.apply(x_true), opts.sigma_w};
    if (opts.sigma_w > 0.0) {
      Rng noise(mix_seed(seed, 0xe9));
      for (Eigen::Index k = 0; k < obs.y.size(); ++k) obs.y[k] += opts.sigma_w * noise.complex_normal();
    }
    const std::vector<int> true_support = x_true.support();
    TrialResult& res = results[i];
    BlockSignal x = BlockSignal::zeros(part);
    res.errors.push_back(BlockSignal(part, x.data() - x_true.data()).norm_21());
    for (int t = 0; t < layers; ++t) {
      if (!trivial) x = ada_blocklista_layer(x, obs, dict, net, t);
      for (int q : x.support()) {
        if (!std::binary_search(true_support.begin(), true_support.end(), q)) res.contained = false;
      }
      res.errors.push_back(BlockSignal(part, x.data() - x_true.data()).norm_21());
    }
  });

  int contained = 0;
  out.max_error.assign(layers + 1, 0.0);
  out.bound_ratio.assign(layers + 1, 0.0);
  for (const TrialResult& res : results) {
    contained += res.contained ? 1 : 0;
    for (int t = 0; t <= layers; ++t) {
      out.max_error[t] = std::max(out.max_error[t], res.errors[t]);
      double ratio = 0.0;
      if (res.errors[t] > 0.0) {
        ratio = bound[t] > 0.0 ? res.errors[t] / bound[t] : std::numeric_limits<double>::infinity();
      }
      out.bound_ratio[t] = std::max(out.bound_ratio[t], ratio);
    }
  }
  out.containment_rate = static_cast<double>(contained) / opts.trials;
  out.max_bound_ratio = *std::max_element(out.bound_ratio.begin(), out.bound_ratio.end());
  return out;
}

}  // namespace blocklista
