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

#include <string>

#include <nlohmann/json.hpp>

#include "blocklista/core_types.h"
#include "blocklista/networks.h"

namespace blocklista::io {

// Complex array file, all integers and floats little-endian:
//   "BLCA"  u32 version(1)  u64 rows  u64 cols
//   rows*cols entries in row-major order, each f64 re followed by f64 im.
void write_complex_array(const std::string& path, const CMatrix& m);
CMatrix read_complex_array(const std::string& path);

// Network checkpoint, little-endian:
//   "BLNT"  u32 version(1)  u32 kind  u32 T  u32 P  u32 Q  u32 N
//   u32 weight_count, then per weight: u32 rows  u32 cols  row-major (re, im) f64 pairs
//   T f64 thetas, then T f64 gammas unless kind is LISTA.
// kind: 0 LISTA, 1 AdaLISTA, 2 AdaLISTA (single weight), 3 Ada-BlockLISTA.
void save_checkpoint(const std::string& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::string& path);

// Human-readable export; weights as [[re, im], ...] rows.
nlohmann::json params_to_json(const NetworkParams& params);

void write_text(const std::string& path, const std::string& contents);
std::string read_text(const std::string& path);

}  // namespace blocklista::io
