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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Tolerances and budgets are pinned here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "blocklista/experiments.h"
#include "blocklista/io.h"
#include "blocklista/iterative.h"
#include "blocklista/networks.h"
#include "blocklista/ops.h"
#include "blocklista/radar.h"
#include "blocklista/theory.h"
#include "blocklista/training.h"
#include "gradcheck.h"
#include "oracles.h"
#include "test_support.h"

namespace {

using namespace blocklista;
namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs <= budget_s;
  const bool pass = out.ok && in_time;
  if (!pass) ++failures;
  std::printf("%s %2d %s: %s [%.1f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              out.detail.c_str(), secs, budget_s, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

json manifest_entry(const std::string& name) {
  const json m = json::parse(io::read_text(BLOCKLISTA_SOURCE_DIR "/manifests/reproduction.json"));
  for (const json& e : m.at("experiments")) {
    if (e.at("name") == name) return e;
  }
  throw std::runtime_error("reproduction manifest has no experiment " + name);
}

std::string file_of(const experiments::ExperimentOutput& out, const std::string& name) {
  for (const auto& f : out.files) {
    if (f.name == name) return f.contents;
  }
  throw std::runtime_error("experiment produced no " + name);
}

// Mean NMSE at (method, k, t) from an nmse_curve CSV.
double curve_value(const std::string& csv, const std::string& method, int k, int t) {
  std::istringstream in(csv);
  std::string line;
  const std::string prefix = method + "," + std::to_string(k) + "," + std::to_string(t) + ",";
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return std::stod(line.substr(prefix.size()));
  }
  throw std::runtime_error("no curve point for " + prefix);
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::read_text(e.path().string());
  }
  return files;
}

Outcome prox_correctness() {
  Rng rng(2024);
  double worst = 0.0;
  int blocks = 0;
  for (int p : {1, 2, 4, 8}) {
    for (int i = 0; i < 2500; ++i, ++blocks) {
      const BlockSignal z(BlockPartition(1, p), testing::random_vector(p, rng));
      const double theta = rng.uniform(0.0, 2.0) * std::sqrt(static_cast<double>(p));
      const CVector got = block_soft_threshold(z, theta).data();
      const CVector expect = testing::bisection_prox(z.data(), theta);
      worst = std::max(worst, (got - expect).norm() / std::max(1.0, expect.norm()));
    }
  }
  double p1 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const CVector u = testing::random_vector(16, rng);
    const double theta = rng.uniform(0.0, 1.5);
    const CVector a = block_soft_threshold(BlockSignal(BlockPartition(16, 1), u), theta).data();
    p1 = std::max(p1, (a - soft_threshold(u, theta)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10 && p1 <= 1e-12,
          std::to_string(blocks) + " blocks, max rel err " + num(worst) + " (<= 1e-10), P=1 max err " + num(p1) +
              " (<= 1e-12)"};
}

Outcome solver_optimality() {
  double worst_ista = 0.0;
  double worst_block = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const int p = seed % 2 == 0 ? 2 : 1;
    const auto in = testing::make_lasso_instance(seed, p);
    IterativeConfig cfg;
    cfg.lambda = in.lambda;
    cfg.max_iters = 200000;
    cfg.tol = 1e-12;
    const SolveResult ista = solve(IterativeKind::Ista, in.obs, in.dict, cfg);
    const BlockSignal cd(in.dict.partition(), testing::coordinate_descent_lasso(in));
    worst_ista = std::max(worst_ista,
                          std::abs(ista.trace.objective.back() - l1_objective(cd, in.obs, in.dict, in.lambda)));

    const double lip = lipschitz_constant(in.dict);
    cfg.max_iters = 20000;
    cfg.tol = 0.0;
    cfg.lipschitz = lip;
    const SolveResult block = solve(IterativeKind::BlockIsta, in.obs, in.dict, cfg);
    const BlockSignal pg(in.dict.partition(), testing::slow_prox_grad_l21(in, lip, 10 * cfg.max_iters));
    worst_block = std::max(worst_block,
                           std::abs(block.trace.objective.back() - l21_objective(pg, in.obs, in.dict, in.lambda)));
  }
  return {worst_ista <= 1e-6 && worst_block <= 1e-6,
          "10 instances, ISTA objective gap " + num(worst_ista) + ", Block-ISTA gap " + num(worst_block) +
              " (<= 1e-6)"};
}

Outcome reduction_identities() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(mix_seed(seed, 3));
    for (int variant = 0; variant < 4; ++variant) {
      const int p = variant == 0 ? 1 : 2;
      const BlockDictionary dict = testing::random_dictionary(6, p, 8 / p, rng.next_u64());
      const BlockSignal x(dict.partition(), testing::random_vector(8, rng));
      const Observation obs{testing::random_vector(6, rng)};
      const double lip = lipschitz_constant(dict);
      const double lambda = rng.uniform(0.05, 0.5);
      CVector a;
      CVector b;
      switch (variant) {
        case 0: {
          const auto prm = NetworkParams::identity_init(NetworkKind::Lista, dict, 1, 1.0 / lip, lambda / lip);
          a = lista_layer(x, obs, prm, 0).data();
          b = ista_step(x, obs, dict, lip, lambda).data();
          break;
        }
        case 1:
        case 2: {
          const NetworkKind kind = variant == 1 ? NetworkKind::AdaLista : NetworkKind::AdaListaSingle;
          const auto prm = NetworkParams::identity_init(kind, dict, 1, 1.0 / lip, lambda / lip);
          a = adalista_layer(x, obs, dict, prm, 0).data();
          b = ista_step(x, obs, dict, lip, lambda).data();
          break;
        }
        default: {
          const auto prm = NetworkParams::identity_init(NetworkKind::AdaBlockLista, dict, 1, 1.0 / lip, lambda);
          a = ada_blocklista_layer(x, obs, dict, prm, 0).data();
          b = block_ista_step(x, obs, dict, lip, lambda).data();
          break;
        }
      }
      worst = std::max(worst, (a - b).norm() / std::max(1.0, b.norm()));
    }
  }
  return {worst <= 1e-12, "100 cases each for LISTA, AdaLISTA (two weights, one weight), Ada-BlockLISTA, max err " +
                              num(worst) + " (<= 1e-12)"};
}

Outcome gradient_check() {
  double worst = 0.0;
  for (NetworkKind kind :
       {NetworkKind::Lista, NetworkKind::AdaLista, NetworkKind::AdaListaSingle, NetworkKind::AdaBlockLista}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto pt = testing::random_grad_point(kind, 5000 + seed, 6, 2, 3, 2);
      const auto analytic = testing::flatten(backward(pt.params, pt.batch, pt.dict).grads);
      const auto numeric = testing::finite_difference_gradient(pt, 1e-5);
      worst = std::max(worst, testing::relative_error(analytic, numeric));
    }
  }
  return {worst <= 1e-5, "50 points x 4 kinds, max rel err " + num(worst) + " (<= 1e-5)"};
}

Outcome theorem_verification() {
  const BlockDictionary dict = orthogonal_block_dictionary(128, 2, 8, 1);
  TheoremOptions o;
  o.s = 2;
  o.layers = 20;
  o.trials = 100;
  const TheoremVerification clean = verify_theorem(dict, o);
  const double c1 = clean.constants.c1;
  const LogSlopeFit fit = fit_log_slope(clean.max_error, 0, o.layers);
  o.sigma_w = 1e-4;
  const TheoremVerification noisy = verify_theorem(dict, o);
  const bool ok = clean.condition.satisfied && clean.containment_rate == 1.0 && clean.max_bound_ratio <= 1.0 &&
                  fit.slope <= -c1 && fit.r_squared >= 0.99 && noisy.max_bound_ratio <= 1.0;
  return {ok, "containment " + num(clean.containment_rate) + ", max error/bound " + num(clean.max_bound_ratio) +
                  ", slope " + num(fit.slope) + " vs -c1 " + num(-c1) + ", R^2 " + num(fit.r_squared) +
                  ", noisy (sigma_w 1e-4) max error/bound " + num(noisy.max_bound_ratio)};
}

Outcome noise_bound() {
  std::string detail;
  bool ok = true;
  for (auto [n, delta] : {std::pair{16, 0.05}, std::pair{64, 0.01}}) {
    const double sigma = noise_norm_bound(n, delta);
    Rng rng(mix_seed(77, static_cast<std::uint64_t>(n)));
    const int draws = 100000;
    int exceed = 0;
    for (int i = 0; i < draws; ++i) {
      double e = 0.0;
      for (int k = 0; k < n; ++k) e += std::norm(rng.complex_normal());
      exceed += std::sqrt(e) >= sigma;
    }
    const double rate = static_cast<double>(exceed) / draws;
    ok = ok && rate <= delta;
    detail += (detail.empty() ? "" : ", ") + std::string("N=") + std::to_string(n) + " exceedance " + num(rate) +
              " (<= " + num(delta) + ")";
  }
  return {ok, detail};
}

// Criteria 7 and 8 share the configured noiseless radar suite.
experiments::NetworkCache suite_cache;

Outcome recovery_panel() {
  json entry = manifest_entry("recovery_noiseless");
  entry["k"] = {2};
  const auto spec = entry.get<experiments::ExperimentSpec>();
  const auto out = experiments::run_recovery_panel(spec, suite_cache, {});
  const json& rates = out.summary.at("hit_rate");
  const double ista = rates.at("ista_k2"), block = rates.at("block_ista_k2");
  const double ada = rates.at("adalista_k2"), ada_block = rates.at("ada_blocklista_k2");
  const bool ok = block >= 0.95 && ada_block >= 0.95 && std::max(ista, ada) < std::min(block, ada_block);
  return {ok, "K=2 over " + std::to_string(spec.trials) + " trials: Block-ISTA " + num(block) + ", Ada-BlockLISTA " +
                  num(ada_block) + " (>= 0.95); ISTA " + num(ista) + ", AdaLISTA " + num(ada) + " (strictly lower)"};
}

Outcome convergence_speed() {
  json entry = manifest_entry("nmse_noiseless");
  entry["k"] = {1};
  entry["methods"] = {"block_ista", "ada_blocklista"};
  const auto spec = entry.get<experiments::ExperimentSpec>();
  const auto out = experiments::run_nmse_curve(spec, suite_cache, {});
  const std::string csv = file_of(out, "nmse_curve.csv");
  const double block = curve_value(csv, "block_ista", 1, 10);
  const double net = curve_value(csv, "ada_blocklista", 1, spec.layers);
  return {net * 10.0 <= block, "K=1 NMSE at t=10: Ada-BlockLISTA " + num(net) + ", Block-ISTA " + num(block) +
                                   " (ratio " + num(block / net) + ", >= 10)"};
}

Outcome radar_consistency() {
  radar::RadarConfig cfg;
  cfg = radar::with_codes(cfg);
  const CMatrix raw = radar::raw_dictionary(cfg);
  const BlockDictionary dict = radar::dictionary(cfg);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const int k = 1 + static_cast<int>(seed % 4);
    const radar::RadarScene scene = radar::random_scene(cfg, k, {1, cfg.range_bins}, seed);
    const CVector y = radar::observe(scene, seed).y;
    const CVector direct = raw * radar::scene_to_signal(scene).data();
    const CVector normalized = dict.matrix() * radar::scene_to_normalized_signal(scene, dict).data();
    worst = std::max({worst, (y - direct).norm() / direct.norm(), (y - normalized).norm() / direct.norm()});
  }
  const double atom_err = (raw.cwiseAbs().array() - 1.0).abs().maxCoeff();
  return {worst <= 1e-12 && atom_err <= 1e-12, "100 scenes, max rel err " + num(worst) +
                                                   " (<= 1e-12), max | |atom| - 1 | " + num(atom_err)};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "blocklista_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string manifest = BLOCKLISTA_SOURCE_DIR "/manifests/smoke.json";
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + BLOCKLISTA_CLI + "\" --out-dir \"" + (dir / run).string() +
                            "\" experiment run \"" + manifest + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
  }
  const auto a = read_tree(dir / "a");
  const auto b = read_tree(dir / "b");
  fs::remove_all(dir);
  return {!a.empty() && a == b,
          std::to_string(a.size()) + " output files from two CLI runs of the smoke manifest, " +
              (a == b ? "byte-identical" : "different")};
}

}  // namespace

int main() {
  criterion(1, "prox correctness", 10, prox_correctness);
  criterion(2, "solver optimality", 60, solver_optimality);
  criterion(3, "reduction identities", 60, reduction_identities);
  criterion(4, "gradient check", 60, gradient_check);
  criterion(5, "linear convergence guarantee", 60, theorem_verification);
  criterion(6, "noise bound", 30, noise_bound);
  criterion(7, "noiseless K=2 recovery panel", 900, recovery_panel);
  criterion(8, "convergence speed", 900, convergence_speed);
  criterion(9, "radar model consistency", 10, radar_consistency);
  criterion(10, "determinism", 600, determinism);
  std::printf("%s: %d failed\n", failures == 0 ? "ALL PASS" : "SOME FAILED", failures);
  return failures == 0 ? 0 : 1;
}
