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

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace blocklista {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

// Layout of Q contiguous blocks of length P. Block q (0-based) covers the flat
// index range [q*P, (q+1)*P). User-facing text reports blocks 1-based.
class BlockPartition {
 public:
  BlockPartition(int num_blocks, int block_len);

  int num_blocks() const { return num_blocks_; }
  int block_len() const { return block_len_; }
  int size() const { return num_blocks_ * block_len_; }
  int offset(int q) const;

  bool operator==(const BlockPartition&) const = default;

 private:
  int num_blocks_;
  int block_len_;
};

// Complex length-M signal with block views and mixed-norm accessors.
class BlockSignal {
 public:
  explicit BlockSignal(BlockPartition partition);
  BlockSignal(BlockPartition partition, CVector data);

  static BlockSignal zeros(BlockPartition partition) { return BlockSignal(partition); }

  const BlockPartition& partition() const { return partition_; }
  const CVector& data() const { return data_; }
  CVector& data() { return data_; }
  int size() const { return partition_.size(); }

  // Mutable slice aliasing the flat storage.
  Eigen::VectorBlock<CVector> block(int q);
  Eigen::VectorBlock<const CVector> block(int q) const;

  double block_norm(int q) const;
  RVector block_norms() const;
  double norm_21() const;
  // Count of blocks with nonzero l2 norm (exact zero test).
  int norm_20() const;

  // Blocks with norm exactly > 0, ascending.
  std::vector<int> support() const;
  // Blocks with norm > tol, for outputs that are not produced by a shrinkage.
  std::vector<int> support(double tol) const;

 private:
  BlockPartition partition_;
  CVector data_;
};

// Complex N x M dictionary sharing a BlockPartition with the signals.
class BlockDictionary {
 public:
  // The normalized flag is set only if every column already has unit norm.
  BlockDictionary(CMatrix data, BlockPartition partition);

  // Divides each column by its l2 norm and records those norms as scales.
  static BlockDictionary normalized(CMatrix data, BlockPartition partition);

  const CMatrix& matrix() const { return data_; }
  const BlockPartition& partition() const { return partition_; }
  int rows() const { return static_cast<int>(data_.rows()); }
  int cols() const { return static_cast<int>(data_.cols()); }
  bool is_normalized() const { return normalized_; }

  // Column norms removed by normalized(); all ones otherwise.
  const RVector& column_scales() const { return column_scales_; }

  // Columns [q*P, (q+1)*P).
  Eigen::Block<const CMatrix, Eigen::Dynamic, Eigen::Dynamic, true> sub(int q) const;

  CVector apply(const BlockSignal& x) const;

 private:
  CMatrix data_;
  BlockPartition partition_;
  bool normalized_ = false;
  RVector column_scales_;
};

struct Observation {
  CVector y;
  double noise_sigma_w = 0.0;
};

// Throws std::invalid_argument unless the shapes of y, Phi and x line up.
void check_shapes(const Observation& obs, const BlockDictionary& dict, const BlockSignal& x);

}  // namespace blocklista
