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
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "blocklista/core_types.h"

namespace blocklista::radar {

inline constexpr double kSpeedOfLight = 299792458.0;

// Frequency agile radar: pulse n uses carrier f0 + C_n * df.
struct RadarConfig {
  double f0 = 1.0e9;           // initial carrier (Hz)
  double df = 10.0e6;          // frequency step (Hz)
  int n_pulses = 64;           // N
  int range_bins = 16;         // P
  int velocity_bins = 64;      // Q
  double pri = 1.0e-4;         // T_r (s)
  std::vector<int> codes;      // C_n in [0, P-1]; drawn from `seed` when empty
  // Draw codes as a random permutation of a multiset holding every value
  // N/P times (remainder uniform) instead of i.i.d. uniform values. Each
  // velocity block's Gram matrix is circulant with eigenvalues proportional
  // to the code counts, so balanced codes make every block orthonormal.
  bool balanced_codes = false;
  double noise_sigma = 0.0;    // sigma_w
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on a violated invariant.
  void validate() const;
  BlockPartition partition() const { return {velocity_bins, range_bins}; }
};

// Fills `codes` (when empty) with C_n drawn from {0..P-1}, i.i.d. uniform or
// balanced.
RadarConfig with_codes(RadarConfig cfg);

struct Scatterer {
  int range_index = 0;  // p, 0-based
  Complex beta;
};

struct Target {
  int velocity_index = 0;  // q, 0-based
  std::vector<Scatterer> scatterers;
};

struct RadarScene {
  std::vector<Target> targets;
  RadarConfig config;

  void validate() const;
};

struct Grids {
  std::vector<double> ranges;      // R_p = c/(2 df) * p/P
  std::vector<double> velocities;  // v_q = 2c/(f0 T_r) * q/Q
};

Grids grids(const RadarConfig& cfg);

// Raw atom phi_n(R, v) = exp(-j (4 pi / c)(f0 + C_n df)(R + v n T_r)).
Complex atom(const RadarConfig& cfg, int n, double range, double velocity);

// N x (P*Q) dictionary, block q = velocity v_q over all P range cells. Columns
// are normalized (each raw atom has norm sqrt(N)); column_scales() keeps sqrt(N).
BlockDictionary dictionary(const RadarConfig& cfg);
CMatrix raw_dictionary(const RadarConfig& cfg);

// Physical coefficients: x[q*P + p] = beta.
BlockSignal scene_to_signal(const RadarScene& scene);

// Coefficients in the coordinates of the normalized dictionary (beta times the
// column scale), so Phi_normalized * x equals the noiseless echo.
BlockSignal scene_to_normalized_signal(const RadarScene& scene, const BlockDictionary& dict);

// y(n) = sum over scatterers of beta * phi_n(R_p, v_q), plus sigma_w * w.
// The noise stream is derived from `noise_seed`.
Observation observe(const RadarScene& scene, std::uint64_t noise_seed);

// Direct evaluation of the echo double sum without the dictionary.
CVector echo(const RadarScene& scene);

// K targets on distinct velocity blocks; per target a uniform scatterer count
// in [min_scatterers, max_scatterers] on distinct range cells, beta ~ CN(0, 1).
RadarScene random_scene(const RadarConfig& cfg, int num_targets, std::pair<int, int> scatterers_per_target,
                        std::uint64_t seed);

double snr_db_from_sigma(double sigma_w);
double sigma_from_snr_db(double snr_db);

void to_json(nlohmann::json& j, const RadarConfig& cfg);
void from_json(const nlohmann::json& j, RadarConfig& cfg);
void to_json(nlohmann::json& j, const RadarScene& scene);
void from_json(const nlohmann::json& j, RadarScene& scene);

}  // namespace blocklista::radar
