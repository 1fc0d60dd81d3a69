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

#include "blocklista/io.h"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace blocklista::io {
namespace {

constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  template <typename T>
  void le(T v) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const CMatrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        f64(m(i, j).real());
        f64(m(i, j).imag());
      }
    }
  }
  void save(const std::string& path) const { write_text(path, buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}
  void expect_magic(const char (&magic)[5]) {
    need(4);
    if (std::memcmp(data_.data() + pos_, magic, 4) != 0) fail(std::string("bad magic, expected ") + magic);
    pos_ += 4;
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  CMatrix matrix(std::uint64_t rows, std::uint64_t cols) {
    if (cols != 0 && rows > (data_.size() - pos_) / 16 / cols) fail("truncated payload");
    CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double re = f64();
        m(i, j) = Complex(re, f64());
      }
    }
    return m;
  }
  void finish() const {
    if (pos_ != data_.size()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const { throw std::runtime_error(path_ + ": " + what); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("unexpected end of file");
  }
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::uint32_t kind_code(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::Lista: return 0;
    case NetworkKind::AdaLista: return 1;
    case NetworkKind::AdaListaSingle: return 2;
    case NetworkKind::AdaBlockLista: return 3;
  }
  throw std::logic_error("unreachable");
}

nlohmann::json matrix_json(const CMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_complex_array(const std::string& path, const CMatrix& m) {
  Writer w;
  w.bytes("BLCA", 4);
  w.le(kVersion);
  w.le(static_cast<std::uint64_t>(m.rows()));
  w.le(static_cast<std::uint64_t>(m.cols()));
  w.matrix(m);
  w.save(path);
}

CMatrix read_complex_array(const std::string& path) {
  Reader r(read_text(path), path);
  r.expect_magic("BLCA");
  if (const auto v = r.le<std::uint32_t>(); v != kVersion) r.fail("unsupported version " + std::to_string(v));
  const auto rows = r.le<std::uint64_t>();
  const auto cols = r.le<std::uint64_t>();
  CMatrix m = r.matrix(rows, cols);
  r.finish();
  return m;
}

void save_checkpoint(const std::string& path, const NetworkParams& params) {
  params.validate();
  Writer w;
  w.bytes("BLNT", 4);
  w.le(kVersion);
  w.le(kind_code(params.kind));
  w.le(static_cast<std::uint32_t>(params.layers()));
  w.le(static_cast<std::uint32_t>(params.partition.block_len()));
  w.le(static_cast<std::uint32_t>(params.partition.num_blocks()));
  w.le(static_cast<std::uint32_t>(params.n_measurements));
  w.le(static_cast<std::uint32_t>(params.weights.size()));
  for (const CMatrix& m : params.weights) {
    w.le(static_cast<std::uint32_t>(m.rows()));
    w.le(static_cast<std::uint32_t>(m.cols()));
    w.matrix(m);
  }
  for (double th : params.thetas) w.f64(th);
  if (params.kind != NetworkKind::Lista) {
    for (double g : params.gammas) w.f64(g);
  }
  w.save(path);
}

NetworkParams load_checkpoint(const std::string& path) {
  Reader r(read_text(path), path);
  r.expect_magic("BLNT");
  if (const auto v = r.le<std::uint32_t>(); v != kVersion) r.fail("unsupported version " + std::to_string(v));
  const auto code = r.le<std::uint32_t>();
  if (code > 3) r.fail("unknown network kind " + std::to_string(code));
  static constexpr std::array kKinds{NetworkKind::Lista, NetworkKind::AdaLista, NetworkKind::AdaListaSingle,
                                     NetworkKind::AdaBlockLista};
  const auto layers = r.le<std::uint32_t>();
  const auto p = r.le<std::uint32_t>();
  const auto q = r.le<std::uint32_t>();
  const auto n = r.le<std::uint32_t>();
  if (p == 0 || q == 0 || layers > (1u << 20)) r.fail("bad header");
  NetworkParams params{kKinds[code], BlockPartition(static_cast<int>(q), static_cast<int>(p)), static_cast<int>(n),
                       {}, {}, {}};
  const auto count = r.le<std::uint32_t>();
  if (count > q + 2) r.fail("bad weight count " + std::to_string(count));
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto rows = r.le<std::uint32_t>();
    const auto cols = r.le<std::uint32_t>();
    params.weights.push_back(r.matrix(rows, cols));
  }
  for (std::uint32_t t = 0; t < layers; ++t) params.thetas.push_back(r.f64());
  if (params.kind != NetworkKind::Lista) {
    for (std::uint32_t t = 0; t < layers; ++t) params.gammas.push_back(r.f64());
  }
  r.finish();
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  return params;
}

nlohmann::json params_to_json(const NetworkParams& params) {
  nlohmann::json weights = nlohmann::json::array();
  for (const CMatrix& m : params.weights) weights.push_back(matrix_json(m));
  return {{"kind", to_string(params.kind)},
          {"layers", params.layers()},
          {"block_len", params.partition.block_len()},
          {"num_blocks", params.partition.num_blocks()},
          {"n_measurements", params.n_measurements},
          {"thetas", params.thetas},
          {"gammas", params.gammas},
          {"weights", weights}};
}

void write_text(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace blocklista::io
