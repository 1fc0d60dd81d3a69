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

#include "blocklista/solve_result.h"

#include <stdexcept>

namespace blocklista {

double nmse(const CVector& x_hat, const CVector& x_true) {
  if (x_hat.size() != x_true.size()) throw std::invalid_argument("nmse: length mismatch");
  const double denom = x_true.norm();
  if (denom == 0.0) throw std::invalid_argument("nmse: ground truth is zero");
  return (x_true - x_hat).norm() / denom;
}

double nmse(const BlockSignal& x_hat, const BlockSignal& x_true) { return nmse(x_hat.data(), x_true.data()); }

double batch_nmse(std::span<const BlockSignal> x_hat, std::span<const BlockSignal> x_true) {
  if (x_hat.size() != x_true.size() || x_hat.empty()) throw std::invalid_argument("batch_nmse: bad batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < x_hat.size(); ++i) sum += nmse(x_hat[i], x_true[i]);
  return sum / static_cast<double>(x_hat.size());
}

}  // namespace blocklista
