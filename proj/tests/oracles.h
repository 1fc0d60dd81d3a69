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

// Independent reference solutions shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "blocklista/core_types.h"
#include "blocklista/ops.h"
#include "blocklista/random.h"
#include "test_support.h"

namespace blocklista::testing {

// Prox of theta ||.||_2 found by bisection on the radius r of x = r z/||z||,
// where the scalar objective 0.5 (r - ||z||)^2 + theta r has derivative
// r - ||z|| + theta.
inline CVector bisection_prox(const CVector& z, double theta) {
  const double nz = z.norm();
  if (nz == 0.0) return z;
  double lo = 0.0;
  double hi = nz;
  if (lo - nz + theta >= 0.0) return CVector::Zero(z.size());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid - nz + theta > 0.0 ? hi : lo) = mid;
  }
  return (0.5 * (lo + hi) / nz) * z;
}

struct LassoInstance {
  BlockDictionary dict;
  Observation obs;
  double lambda;
};

// N = 16, M = 32, three active blocks, light noise, lambda = 0.1 ||Phi^H y||_inf.
inline LassoInstance make_lasso_instance(std::uint64_t seed, int block_len) {
  const int m = 32;
  BlockDictionary dict = random_dictionary(16, block_len, m / block_len, seed);
  Rng rng(mix_seed(seed, 1));
  BlockSignal x(dict.partition());
  for (int q : rng.choose(dict.partition().num_blocks(), 3)) {
    for (int e = 0; e < block_len; ++e) x.block(q)[e] = rng.complex_normal();
  }
  Observation obs{dict.apply(x) + 0.05 * random_vector(16, rng)};
  const double lambda = 0.1 * (dict.matrix().adjoint() * obs.y).cwiseAbs().maxCoeff();
  return {std::move(dict), std::move(obs), lambda};
}

// Cyclic coordinate descent for 0.5 ||y - Phi x||^2 + lambda ||x||_1 over
// complex coordinates; each update is the exact coordinate minimizer.
inline CVector coordinate_descent_lasso(const LassoInstance& in) {
  const CMatrix& phi = in.dict.matrix();
  CVector x = CVector::Zero(phi.cols());
  CVector r = in.obs.y;
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
      const double nj = phi.col(j).squaredNorm();
      const Complex rho = phi.col(j).dot(r) + nj * x[j];
      const double mag = std::abs(rho);
      const Complex next = mag > in.lambda ? rho * ((mag - in.lambda) / mag) / nj : Complex(0.0, 0.0);
      const Complex delta = next - x[j];
      if (delta != Complex(0.0, 0.0)) {
        r -= phi.col(j) * delta;
        x[j] = next;
        change = std::max(change, std::abs(delta));
      }
    }
    if (change < 1e-15) break;
  }
  return x;
}

// Plain proximal gradient for the l2,1 problem at step 1/(2L).
inline CVector slow_prox_grad_l21(const LassoInstance& in, double lip, int iters) {
  const CMatrix& phi = in.dict.matrix();
  const int p = in.dict.partition().block_len();
  const double step = 0.5 / lip;
  CVector x = CVector::Zero(phi.cols());
  for (int it = 0; it < iters; ++it) {
    CVector z = x + step * (phi.adjoint() * (in.obs.y - phi * x));
    for (Eigen::Index b = 0; b < z.size(); b += p) {
      const double nrm = z.segment(b, p).norm();
      z.segment(b, p) *= nrm > step * in.lambda ? 1.0 - step * in.lambda / nrm : 0.0;
    }
    x = z;
  }
  return x;
}

}  // namespace blocklista::testing
