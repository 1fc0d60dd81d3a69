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

#include "blocklista/radar.h"

#include <cmath>
#include <numbers>
#include <set>
#include <utility>
#include <stdexcept>
#include <string>

#include "blocklista/json_util.h"
#include "blocklista/random.h"

namespace blocklista::radar {

void RadarConfig::validate() const {
  if (!(f0 > 0.0) || !(df > 0.0) || !(pri > 0.0)) throw std::invalid_argument("RadarConfig: f0, df and pri must be > 0");
  if (n_pulses < 1 || range_bins < 1 || velocity_bins < 1) {
    throw std::invalid_argument("RadarConfig: N, P and Q must be >= 1");
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("RadarConfig: noise_sigma must be >= 0");
  if (!codes.empty()) {
    if (static_cast<int>(codes.size()) != n_pulses) {
      throw std::invalid_argument("RadarConfig: " + std::to_string(codes.size()) + " codes for " +
                                  std::to_string(n_pulses) + " pulses");
    }
    for (int c : codes) {
      if (c < 0 || c >= range_bins) {
        throw std::invalid_argument("RadarConfig: code " + std::to_string(c) + " outside 0.." +
                                    std::to_string(range_bins - 1));
      }
    }
  }
}

RadarConfig with_codes(RadarConfig cfg) {
  if (cfg.codes.empty()) {
    Rng rng(mix_seed(cfg.seed, 0xC0DE));
    cfg.codes.resize(cfg.n_pulses);
    if (cfg.balanced_codes) {
      const int full = cfg.n_pulses / cfg.range_bins * cfg.range_bins;
      for (int n = 0; n < full; ++n) cfg.codes[n] = n % cfg.range_bins;
      for (int n = full; n < cfg.n_pulses; ++n) {
        cfg.codes[n] = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.range_bins)));
      }
      for (int n = cfg.n_pulses - 1; n > 0; --n) {
        std::swap(cfg.codes[n], cfg.codes[rng.below(static_cast<std::uint64_t>(n + 1))]);
      }
    } else {
      for (int& c : cfg.codes) c = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.range_bins)));
    }
  }
  cfg.validate();
  return cfg;
}

void RadarScene::validate() const {
  config.validate();
  std::set<int> blocks;
  for (const Target& t : targets) {
    if (t.velocity_index < 0 || t.velocity_index >= config.velocity_bins) {
      throw std::invalid_argument("RadarScene: velocity index " + std::to_string(t.velocity_index) + " off grid");
    }
    if (!blocks.insert(t.velocity_index).second) {
      throw std::invalid_argument("RadarScene: two targets share velocity block " + std::to_string(t.velocity_index + 1));
    }
    if (t.scatterers.empty() || static_cast<int>(t.scatterers.size()) > config.range_bins) {
      throw std::invalid_argument("RadarScene: scatterer count must lie in 1..P");
    }
    std::set<int> cells;
    for (const Scatterer& s : t.scatterers) {
      if (s.range_index < 0 || s.range_index >= config.range_bins) {
        throw std::invalid_argument("RadarScene: range index " + std::to_string(s.range_index) + " off grid");
      }
      if (!cells.insert(s.range_index).second) {
        throw std::invalid_argument("RadarScene: duplicate scatterer at (q=" + std::to_string(t.velocity_index + 1) +
                                    ", p=" + std::to_string(s.range_index + 1) + ")");
      }
    }
  }
}

Grids grids(const RadarConfig& cfg) {
  Grids g;
  const double r_max = kSpeedOfLight / (2.0 * cfg.df);
  const double v_span = 2.0 * kSpeedOfLight / (cfg.f0 * cfg.pri);
  for (int p = 0; p < cfg.range_bins; ++p) g.ranges.push_back(r_max * p / cfg.range_bins);
  for (int q = 0; q < cfg.velocity_bins; ++q) g.velocities.push_back(v_span * q / cfg.velocity_bins);
  return g;
}

Complex atom(const RadarConfig& cfg, int n, double range, double velocity) {
  const double fn = cfg.f0 + cfg.codes.at(n) * cfg.df;
  const double phase = -4.0 * std::numbers::pi / kSpeedOfLight * fn * (range + velocity * n * cfg.pri);
  return std::polar(1.0, phase);
}

CMatrix raw_dictionary(const RadarConfig& cfg_in) {
  const RadarConfig cfg = with_codes(cfg_in);
  const Grids g = grids(cfg);
  const int p_len = cfg.range_bins;
  CMatrix phi(cfg.n_pulses, p_len * cfg.velocity_bins);
  for (int q = 0; q < cfg.velocity_bins; ++q) {
    for (int p = 0; p < p_len; ++p) {
      for (int n = 0; n < cfg.n_pulses; ++n) phi(n, q * p_len + p) = atom(cfg, n, g.ranges[p], g.velocities[q]);
    }
  }
  return phi;
}

BlockDictionary dictionary(const RadarConfig& cfg) {
  return BlockDictionary::normalized(raw_dictionary(cfg), cfg.partition());
}

BlockSignal scene_to_signal(const RadarScene& scene) {
  scene.validate();
  const int p_len = scene.config.range_bins;
  BlockSignal x(scene.config.partition());
  for (const Target& t : scene.targets) {
    for (const Scatterer& s : t.scatterers) x.data()[t.velocity_index * p_len + s.range_index] = s.beta;
  }
  return x;
}

BlockSignal scene_to_normalized_signal(const RadarScene& scene, const BlockDictionary& dict) {
  BlockSignal x = scene_to_signal(scene);
  x.data().array() *= dict.column_scales().array().cast<Complex>();
  return x;
}

CVector echo(const RadarScene& scene) {
  scene.validate();
  const RadarConfig cfg = with_codes(scene.config);
  const Grids g = grids(cfg);
  CVector y = CVector::Zero(cfg.n_pulses);
  for (int n = 0; n < cfg.n_pulses; ++n) {
    for (const Target& t : scene.targets) {
      for (const Scatterer& s : t.scatterers) {
        y[n] += s.beta * atom(cfg, n, g.ranges[s.range_index], g.velocities[t.velocity_index]);
      }
    }
  }
  return y;
}

Observation observe(const RadarScene& scene, std::uint64_t noise_seed) {
  Observation obs{echo(scene), scene.config.noise_sigma};
  if (obs.noise_sigma_w > 0.0) {
    Rng rng(noise_seed);
    for (Eigen::Index n = 0; n < obs.y.size(); ++n) obs.y[n] += obs.noise_sigma_w * rng.complex_normal();
  }
  return obs;
}

RadarScene random_scene(const RadarConfig& cfg, int num_targets, std::pair<int, int> scatterers_per_target,
                        std::uint64_t seed) {
  cfg.validate();
  const auto [lo, hi] = scatterers_per_target;
  if (num_targets < 0 || num_targets > cfg.velocity_bins) {
    throw std::invalid_argument("random_scene: K=" + std::to_string(num_targets) + " exceeds Q=" +
                                std::to_string(cfg.velocity_bins));
  }
  if (lo < 1 || hi < lo || hi > cfg.range_bins) throw std::invalid_argument("random_scene: bad scatterer range");
  Rng rng(seed);
  RadarScene scene;
  scene.config = cfg;
  for (int q : rng.choose(cfg.velocity_bins, num_targets)) {
    Target t;
    t.velocity_index = q;
    const int count = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    for (int p : rng.choose(cfg.range_bins, count)) t.scatterers.push_back({p, rng.complex_normal()});
    scene.targets.push_back(std::move(t));
  }
  return scene;
}

double snr_db_from_sigma(double sigma_w) { return 10.0 * std::log10(1.0 / (sigma_w * sigma_w)); }

double sigma_from_snr_db(double snr_db) { return std::sqrt(std::pow(10.0, -snr_db / 10.0)); }

void to_json(nlohmann::json& j, const RadarConfig& cfg) {
  j = nlohmann::json{{"f0", cfg.f0},
                     {"df", cfg.df},
                     {"n_pulses", cfg.n_pulses},
                     {"range_bins", cfg.range_bins},
                     {"velocity_bins", cfg.velocity_bins},
                     {"pri", cfg.pri},
                     {"codes", cfg.codes},
                     {"balanced_codes", cfg.balanced_codes},
                     {"noise_sigma", cfg.noise_sigma},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, RadarConfig& cfg) {
  json_util::check_keys(j, {"f0", "df", "n_pulses", "range_bins", "velocity_bins", "pri", "codes", "balanced_codes", "noise_sigma",
                         "seed"},
                        "radar config");
  RadarConfig out;
  json_util::read(j, "f0", out.f0);
  json_util::read(j, "df", out.df);
  json_util::read(j, "n_pulses", out.n_pulses);
  json_util::read(j, "range_bins", out.range_bins);
  json_util::read(j, "velocity_bins", out.velocity_bins);
  json_util::read(j, "pri", out.pri);
  json_util::read(j, "codes", out.codes);
  json_util::read(j, "balanced_codes", out.balanced_codes);
  json_util::read(j, "noise_sigma", out.noise_sigma);
  json_util::read(j, "seed", out.seed);
  out.validate();
  cfg = std::move(out);
}

void to_json(nlohmann::json& j, const RadarScene& scene) {
  nlohmann::json targets = nlohmann::json::array();
  for (const Target& t : scene.targets) {
    nlohmann::json sc = nlohmann::json::array();
    for (const Scatterer& s : t.scatterers) sc.push_back({{"range_index", s.range_index}, {"beta", {s.beta.real(), s.beta.imag()}}});
    targets.push_back({{"velocity_index", t.velocity_index}, {"scatterers", sc}});
  }
  j = nlohmann::json{{"config", scene.config}, {"targets", targets}};
}

void from_json(const nlohmann::json& j, RadarScene& scene) {
  json_util::check_keys(j, {"config", "targets"}, "radar scene");
  RadarScene out;
  out.config = j.at("config").get<RadarConfig>();
  for (const auto& jt : j.at("targets")) {
    json_util::check_keys(jt, {"velocity_index", "scatterers"}, "target");
    Target t;
    t.velocity_index = jt.at("velocity_index").get<int>();
    for (const auto& js : jt.at("scatterers")) {
      json_util::check_keys(js, {"range_index", "beta"}, "scatterer");
      const auto beta = js.at("beta").get<std::vector<double>>();
      if (beta.size() != 2) throw std::invalid_argument("scatterer beta must be [re, im]");
      t.scatterers.push_back({js.at("range_index").get<int>(), Complex(beta[0], beta[1])});
    }
    out.targets.push_back(std::move(t));
  }
  out.validate();
  scene = std::move(out);
}

}  // namespace blocklista::radar
