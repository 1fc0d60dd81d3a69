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

#include "blocklista/core_types.h"

#include <stdexcept>
#include <string>

namespace blocklista {

BlockPartition::BlockPartition(int num_blocks, int block_len)
    : num_blocks_(num_blocks), block_len_(block_len) {
  if (num_blocks < 1 || block_len < 1) {
    throw std::invalid_argument("BlockPartition: Q and P must be >= 1 (got Q=" +
                                std::to_string(num_blocks) + ", P=" + std::to_string(block_len) + ")");
  }
}

int BlockPartition::offset(int q) const {
  if (q < 0 || q >= num_blocks_) {
    throw std::out_of_range("block " + std::to_string(q + 1) + " outside 1.." +
                            std::to_string(num_blocks_));
  }
  return q * block_len_;
}

BlockSignal::BlockSignal(BlockPartition partition)
    : partition_(partition), data_(CVector::Zero(partition.size())) {}

BlockSignal::BlockSignal(BlockPartition partition, CVector data)
    : partition_(partition), data_(std::move(data)) {
  if (data_.size() != partition_.size()) {
    throw std::invalid_argument("BlockSignal: data length " + std::to_string(data_.size()) +
                                " != Q*P = " + std::to_string(partition_.size()));
  }
}

Eigen::VectorBlock<CVector> BlockSignal::block(int q) {
  return data_.segment(partition_.offset(q), partition_.block_len());
}

Eigen::VectorBlock<const CVector> BlockSignal::block(int q) const {
  return data_.segment(partition_.offset(q), partition_.block_len());
}

double BlockSignal::block_norm(int q) const { return block(q).norm(); }

RVector BlockSignal::block_norms() const {
  RVector out(partition_.num_blocks());
  for (int q = 0; q < partition_.num_blocks(); ++q) out[q] = block_norm(q);
  return out;
}

double BlockSignal::norm_21() const { return block_norms().sum(); }

int BlockSignal::norm_20() const { return static_cast<int>(support().size()); }

std::vector<int> BlockSignal::support() const { return support(0.0); }

std::vector<int> BlockSignal::support(double tol) const {
  std::vector<int> out;
  for (int q = 0; q < partition_.num_blocks(); ++q) {
    if (block_norm(q) > tol) out.push_back(q);
  }
  return out;
}

BlockDictionary::BlockDictionary(CMatrix data, BlockPartition partition)
    : data_(std::move(data)), partition_(partition), column_scales_(RVector::Ones(data_.cols())) {
  if (data_.cols() != partition_.size()) {
    throw std::invalid_argument("BlockDictionary: " + std::to_string(data_.cols()) +
                                " columns != Q*P = " + std::to_string(partition_.size()));
  }
  normalized_ = data_.cols() > 0;
  for (Eigen::Index j = 0; j < data_.cols(); ++j) {
    if (std::abs(data_.col(j).norm() - 1.0) > 1e-12) {
      normalized_ = false;
      break;
    }
  }
}

BlockDictionary BlockDictionary::normalized(CMatrix data, BlockPartition partition) {
  RVector scales(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    scales[j] = data.col(j).norm();
    if (scales[j] == 0.0) throw std::invalid_argument("BlockDictionary: zero column " + std::to_string(j));
    data.col(j) /= scales[j];
  }
  BlockDictionary dict(std::move(data), partition);
  dict.column_scales_ = std::move(scales);
  return dict;
}

Eigen::Block<const CMatrix, Eigen::Dynamic, Eigen::Dynamic, true> BlockDictionary::sub(int q) const {
  return data_.middleCols(partition_.offset(q), partition_.block_len());
}

CVector BlockDictionary::apply(const BlockSignal& x) const {
  if (x.partition() != partition_) throw std::invalid_argument("BlockDictionary::apply: partition mismatch");
  return data_ * x.data();
}

void check_shapes(const Observation& obs, const BlockDictionary& dict, const BlockSignal& x) {
  if (obs.y.size() != dict.rows()) {
    throw std::invalid_argument("observation length " + std::to_string(obs.y.size()) +
                                " != dictionary rows " + std::to_string(dict.rows()));
  }
  if (x.partition() != dict.partition()) {
    throw std::invalid_argument("signal partition does not match dictionary partition");
  }
}

}  // namespace blocklista
