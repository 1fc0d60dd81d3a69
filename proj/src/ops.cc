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

#include "blocklista/ops.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "blocklista/random.h"

namespace blocklista {
namespace {

thread_local std::uint64_t residual_count = 0;

void check_threshold(double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("threshold must be >= 0, got " + std::to_string(theta));
}

// Largest eigenvalue of a Hermitian PSD matrix. The start vector is seeded;
// it is first pushed through G^(2^k) (formed by repeated squaring, each
// square rescaled by its trace) and then refined with plain power steps
// until the Rayleigh quotient settles.
double dominant_eigenvalue(const CMatrix& gram, const PowerIterationOptions& opts) {
  const Eigen::Index n = gram.rows();
  if (n == 0) throw std::invalid_argument("dominant_eigenvalue: empty matrix");
  const double scale = gram.diagonal().real().sum();
  if (!(scale > 0.0)) return 0.0;

  Rng rng(opts.seed);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.complex_normal();

  CMatrix power = gram / scale;
  constexpr int kSquarings = 16;
  for (int k = 0; k < kSquarings; ++k) {
    CMatrix sq = power * power;
    const double tr = sq.diagonal().real().sum();
    if (!(tr > 0.0)) break;
    power = sq / tr;
  }
  CVector w = power * v;
  if (w.norm() > 0.0) v = w;
  v.normalize();

  double rho = std::real(v.dot(gram * v));
  for (int it = 0; it < opts.max_iters; ++it) {
    CVector gv = gram * v;
    const double next = std::real(v.dot(gv));
    const double nrm = gv.norm();
    if (nrm == 0.0) return 0.0;
    v = gv / nrm;
    if (std::abs(next - rho) <= opts.rel_tol * std::abs(next)) return std::max(next, rho);
    rho = next;
  }
  throw std::runtime_error("power iteration did not converge in " + std::to_string(opts.max_iters) +
                           " iterations");
}

}  // namespace

CVector soft_threshold(const CVector& u, double theta) {
  check_threshold(theta);
  CVector out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double mag = std::abs(u[i]);
    out[i] = mag > theta ? u[i] * ((mag - theta) / mag) : Complex(0.0, 0.0);
  }
  return out;
}

void block_soft_threshold_inplace(CVector& z, const BlockPartition& partition, double theta) {
  check_threshold(theta);
  const int p = partition.block_len();
  for (int q = 0; q < partition.num_blocks(); ++q) {
    auto blk = z.segment(static_cast<Eigen::Index>(q) * p, p);
    const double nrm = blk.norm();
    if (nrm > theta) {
      blk *= (1.0 - theta / nrm);
    } else {
      blk.setZero();
    }
  }
}

BlockSignal block_soft_threshold(const BlockSignal& z, double theta) {
  CVector data = z.data();
  block_soft_threshold_inplace(data, z.partition(), theta);
  return BlockSignal(z.partition(), std::move(data));
}

BlockSignal shrink(ShrinkageKind kind, const BlockSignal& z, double theta) {
  if (kind == ShrinkageKind::ElementSoft) return BlockSignal(z.partition(), soft_threshold(z.data(), theta));
  return block_soft_threshold(z, theta);
}

CVector residual(const Observation& obs, const BlockDictionary& dict, const BlockSignal& x) {
  check_shapes(obs, dict, x);
  ++residual_count;
  return obs.y - dict.matrix() * x.data();
}

std::uint64_t residual_evaluations() { return residual_count; }

double lipschitz_constant(const BlockDictionary& dict, const PowerIterationOptions& opts) {
  const CMatrix& phi = dict.matrix();
  if (phi.size() == 0 || phi.cwiseAbs2().sum() == 0.0) {
    throw std::invalid_argument("lipschitz_constant: dictionary is zero");
  }
  // Phi^H Phi and Phi Phi^H share their nonzero spectrum; iterate on the smaller.
  if (phi.rows() <= phi.cols()) return dominant_eigenvalue(phi * phi.adjoint(), opts);
  return dominant_eigenvalue(phi.adjoint() * phi, opts);
}

double spectral_norm(const CMatrix& a, const PowerIterationOptions& opts) {
  if (a.size() == 0) return 0.0;
  if (a.cwiseAbs2().sum() == 0.0) return 0.0;
  const double lam = a.rows() <= a.cols() ? dominant_eigenvalue(a * a.adjoint(), opts)
                                          : dominant_eigenvalue(a.adjoint() * a, opts);
  return std::sqrt(std::max(lam, 0.0));
}

}  // namespace blocklista
