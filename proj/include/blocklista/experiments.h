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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "blocklista/core_types.h"
#include "blocklista/networks.h"
#include "blocklista/radar.h"
#include "blocklista/theory.h"
#include "blocklista/training.h"

namespace blocklista::experiments {

enum class ExperimentKind { NmseCurve, RecoveryPanel, HitrateGrid, TheoryReport, CoherenceReport };
const char* to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

// Methods: "ista", "block_ista" and the network kinds ("lista", "adalista",
// "adalista_single", "ada_blocklista").
bool is_network_method(const std::string& method);

enum class HitRule {
  TopK,     // the K largest recovered blocks equal the true block support
  PerEntry  // the largest |supp| entries equal the true entry support
};

// Where the dictionary comes from. Scene-based experiments need "radar".
struct DictionarySpec {
  std::string type = "radar";  // radar | gaussian | orthogonal_blocks
  radar::RadarConfig radar;
  int rows = 128;
  int block_len = 2;
  int num_blocks = 8;
  std::uint64_t seed = 1;
};

BlockDictionary make_dictionary(const DictionarySpec& spec);

void to_json(nlohmann::json& j, const DictionarySpec& spec);
void from_json(const nlohmann::json& j, DictionarySpec& spec);

struct ExperimentSpec {
  std::string name;
  ExperimentKind kind = ExperimentKind::CoherenceReport;
  std::vector<std::string> methods;
  DictionarySpec dictionary;
  // Scatterers per target, inclusive; defaults to [1, P].
  std::optional<std::pair<int, int>> scatterers;
  std::vector<double> snr_db;  // empty means noiseless
  std::vector<int> k;
  int trials = 50;
  std::uint64_t seed = 1;
  std::string out_dir;  // relative to the run's output directory; defaults to name
  int layers = 10;        // T for the networks
  int iterations = 1000;  // budget for ISTA / Block-ISTA
  double lambda = 1.0;
  HitRule hit_rule = HitRule::TopK;
  // Networks are loaded from `checkpoints` when listed there, otherwise
  // trained inline if `train_inline` is set.
  std::map<std::string, std::string> checkpoints;
  bool train_inline = true;
  TrainingConfig training;
  // Hit-rate grids train one network per method at this (K, SNR); defaults
  // are the middle entries of the sweep lists.
  std::optional<int> train_k;
  std::optional<double> train_snr_db;
  TheoremOptions theory;

  // Fills kind-dependent defaults and throws std::invalid_argument on an
  // inconsistent spec.
  void resolve();
};

void to_json(nlohmann::json& j, const ExperimentSpec& spec);
void from_json(const nlohmann::json& j, ExperimentSpec& spec);

struct OutputFile {
  std::string name;  // relative to the experiment's directory
  std::string contents;
};

struct ExperimentOutput {
  std::vector<OutputFile> files;
  nlohmann::json summary;
};

struct CachedNetwork {
  NetworkParams params;
  std::string training_log;  // CSV; empty for loaded checkpoints
};

// Trained networks shared between experiments of one run, keyed by the hash
// of everything that determines them.
class NetworkCache {
 public:
  const CachedNetwork* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }
  const CachedNetwork& put(const std::string& key, CachedNetwork net) {
    return entries_.insert_or_assign(key, std::move(net)).first->second;
  }

 private:
  std::map<std::string, CachedNetwork> entries_;
};

struct RunOptions {
  int threads = 1;
  std::string base_dir = ".";  // relative checkpoint paths resolve against this
};

// CSV: method, t, nmse (mean over trials), t = 0 being x = 0.
ExperimentOutput run_nmse_curve(const ExperimentSpec& spec, NetworkCache& cache, const RunOptions& opts);
// Per K: |x_hat| of the first trial scene as a P x Q grid per method, and the
// hit rate of every method over `trials` scenes.
ExperimentOutput run_recovery_panel(const ExperimentSpec& spec, NetworkCache& cache, const RunOptions& opts);
// CSV: method, snr_db, k, trials, hits, hit_rate, std_error.
ExperimentOutput run_hitrate_grid(const ExperimentSpec& spec, NetworkCache& cache, const RunOptions& opts);
ExperimentOutput theory_report(const ExperimentSpec& spec, const RunOptions& opts);
ExperimentOutput coherence_report(const ExperimentSpec& spec, const RunOptions& opts);

ExperimentOutput run_experiment(const ExperimentSpec& spec, NetworkCache& cache, const RunOptions& opts);

// True iff the recovered support matches under `rule`.
bool is_hit(const BlockSignal& x_hat, const BlockSignal& x_true, HitRule rule);

// Parses a manifest {"experiments": [spec, ...]}, runs every spec in order,
// writes each experiment's files under out_dir/<spec.out_dir>/ and a
// summary.json stamped with the manifest hash. A failing spec is recorded and
// the run continues. Returns the process exit code (0 iff all succeeded).
int run_all(const std::string& manifest_path, const std::string& out_dir, const RunOptions& opts);

// Hash of the resolved spec, stamped into every output.
std::string config_hash(const ExperimentSpec& spec);

}  // namespace blocklista::experiments
