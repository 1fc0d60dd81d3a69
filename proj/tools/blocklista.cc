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

// Command line front end: dataset generation, solvers, training and the
// experiment runner.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "blocklista/coherence.h"
#include "blocklista/experiments.h"
#include "blocklista/io.h"
#include "blocklista/iterative.h"
#include "blocklista/networks.h"
#include "blocklista/ops.h"
#include "blocklista/radar.h"
#include "blocklista/random.h"
#include "blocklista/solve_result.h"
#include "blocklista/theory.h"
#include "blocklista/training.h"

namespace fs = std::filesystem;
using namespace blocklista;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int threads = 1;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

// A dataset directory as written by `generate`.
struct DataDir {
  nlohmann::json config;
  BlockDictionary dict;
  CMatrix x;  // M x S; empty when the truth is unknown
  CMatrix y;  // N x S
};

DataDir load_data(const std::string& dir) {
  const fs::path root(dir);
  nlohmann::json config = read_json((root / "config.json").string());
  const BlockPartition part{config.at("num_blocks").get<int>(), config.at("block_len").get<int>()};
  BlockDictionary dict(io::read_complex_array((root / "dictionary.bin").string()), part);
  CMatrix x;
  if (fs::exists(root / "x.bin")) x = io::read_complex_array((root / "x.bin").string());
  CMatrix y = io::read_complex_array((root / "y.bin").string());
  if (y.rows() != dict.rows() || (x.size() > 0 && (x.rows() != dict.cols() || x.cols() != y.cols()))) {
    throw std::invalid_argument(dir + ": array shapes do not match the dictionary");
  }
  return {std::move(config), std::move(dict), std::move(x), std::move(y)};
}

BlockDictionary load_dictionary(const std::string& dict_file, const std::string& data_dir) {
  if (!data_dir.empty()) return load_data(data_dir).dict;
  if (dict_file.empty()) throw std::invalid_argument("one of --dict or --data is required");
  return experiments::make_dictionary(read_json(dict_file).get<experiments::DictionarySpec>());
}

std::optional<BlockSignal> truth(const DataDir& d, Eigen::Index i) {
  if (d.x.size() == 0 || d.x.col(i).norm() == 0.0) return std::nullopt;
  return BlockSignal(d.dict.partition(), d.x.col(i));
}

int cmd_generate(const Globals& g, const std::string& dict_file, int samples, int k, std::vector<int> scatterers,
                 std::optional<double> snr_db) {
  const experiments::DictionarySpec spec = read_json(dict_file).get<experiments::DictionarySpec>();
  const BlockDictionary dict = experiments::make_dictionary(spec);
  const std::uint64_t seed = g.seed.value_or(1);
  const double sigma = snr_db ? radar::sigma_from_snr_db(*snr_db) : 0.0;
  const int p = dict.partition().block_len();
  if (scatterers.empty()) scatterers = {1, p};
  if (scatterers.size() != 2) throw std::invalid_argument("--scatterers takes two values");

  CMatrix x(dict.cols(), samples);
  CMatrix y(dict.rows(), samples);
  nlohmann::json scenes = nlohmann::json::array();
  if (spec.type == "radar") {
    radar::RadarConfig cfg = radar::with_codes(spec.radar);
    cfg.noise_sigma = sigma;
    for (int i = 0; i < samples; ++i) {
      const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(i));
      const radar::RadarScene scene = radar::random_scene(cfg, k, {scatterers[0], scatterers[1]}, s);
      x.col(i) = radar::scene_to_normalized_signal(scene, dict).data();
      y.col(i) = radar::observe(scene, mix_seed(s, 1)).y;
      scenes.push_back(nlohmann::json(scene).at("targets"));
    }
  } else {
    TrainingConfig tc;
    tc.sparsity = k;
    tc.noise_sigma_w = sigma;
    tc.coef_dist.min_active = scatterers[0];
    tc.coef_dist.max_active = scatterers[1];
    const std::vector<Sample> drawn = generate_samples(dict, tc, samples, seed);
    for (int i = 0; i < samples; ++i) {
      x.col(i) = drawn[i].x.data();
      y.col(i) = drawn[i].obs.y;
    }
  }
  nlohmann::json config{{"dictionary", spec},
                        {"samples", samples},
                        {"k", k},
                        {"scatterers", scatterers},
                        {"snr_db", snr_db ? nlohmann::json(*snr_db) : nlohmann::json(nullptr)},
                        {"noise_sigma_w", sigma},
                        {"seed", seed},
                        {"rows", dict.rows()},
                        {"block_len", p},
                        {"num_blocks", dict.partition().num_blocks()}};
  if (spec.type == "radar") config["codes"] = radar::with_codes(spec.radar).codes;
  io::write_text(out_path(g, "config.json").string(), config.dump(2) + "\n");
  io::write_complex_array(out_path(g, "dictionary.bin").string(), dict.matrix());
  io::write_complex_array(out_path(g, "x.bin").string(), x);
  io::write_complex_array(out_path(g, "y.bin").string(), y);
  if (spec.type == "radar") io::write_text(out_path(g, "scenes.json").string(), scenes.dump() + "\n");
  return 0;
}

int cmd_coherence(const std::string& dict_file, const std::string& data_dir) {
  const BlockDictionary dict = load_dictionary(dict_file, data_dir);
  const CoherenceReport r = coherence_report(dict);
  const nlohmann::json j{{"mutual", r.mutual},
                         {"sub_coherence", r.sub_coherence},
                         {"block_coherence", r.block_coherence},
                         {"lipschitz", lipschitz_constant(dict)},
                         {"rows", dict.rows()},
                         {"block_len", dict.partition().block_len()},
                         {"num_blocks", dict.partition().num_blocks()}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_solve(const Globals& g, const std::string& data_dir, const std::string& method, double lambda, int iters,
              double tol) {
  const DataDir d = load_data(data_dir);
  IterativeConfig cfg;
  cfg.lambda = lambda;
  cfg.max_iters = iters;
  cfg.tol = tol;
  cfg.lipschitz = lipschitz_constant(d.dict);
  const IterativeKind kind = method == "ista" ? IterativeKind::Ista : IterativeKind::BlockIsta;
  CMatrix x_hat(d.dict.cols(), d.y.cols());
  std::string csv = "sample,iteration,nmse,objective\n";
  for (Eigen::Index i = 0; i < d.y.cols(); ++i) {
    const SolveResult r = solve(kind, Observation{d.y.col(i), 0.0}, d.dict, cfg, truth(d, i));
    x_hat.col(i) = r.x.data();
    for (int t = 0; t < r.trace.iterations_run; ++t) {
      const std::string nm = r.trace.per_iter_nmse.empty() ? "" : fmt(r.trace.per_iter_nmse[t]);
      csv += std::to_string(i) + "," + std::to_string(t + 1) + "," + nm + "," + fmt(r.trace.objective[t]) + "\n";
    }
  }
  io::write_complex_array(out_path(g, "x_hat.bin").string(), x_hat);
  io::write_text(out_path(g, "trace.csv").string(), csv);
  return 0;
}

int cmd_train(const Globals& g, const std::string& dict_file, const std::string& data_dir, const std::string& method,
              int layers, const std::string& config_file) {
  const BlockDictionary dict = load_dictionary(dict_file, data_dir);
  TrainingConfig cfg;
  if (!config_file.empty()) cfg = read_json(config_file).get<TrainingConfig>();
  if (g.seed) cfg.seed = *g.seed;
  cfg.threads = g.threads;
  const TrainingResult r = train_network(network_kind_from_string(method), dict, layers, cfg);
  io::save_checkpoint(out_path(g, "checkpoint.bin").string(), r.params);
  io::write_text(out_path(g, "training_log.csv").string(), training_log_csv(r.log));
  nlohmann::json params = io::params_to_json(r.params);
  params["training"] = cfg;
  params["initial_val_nmse"] = r.initial_val_nmse;
  params["best_val_nmse"] = r.best_val_nmse;
  io::write_text(out_path(g, "params.json").string(), params.dump(2) + "\n");
  std::printf("best validation nmse %.6g (initial %.6g)\n", r.best_val_nmse, r.initial_val_nmse);
  return 0;
}

int cmd_infer(const Globals& g, const std::string& data_dir, const std::string& checkpoint) {
  const DataDir d = load_data(data_dir);
  const NetworkParams params = io::load_checkpoint(checkpoint);
  if (params.partition != d.dict.partition() || params.n_measurements != d.dict.rows()) {
    throw std::invalid_argument(checkpoint + " does not match the dictionary of " + data_dir);
  }
  CMatrix x_hat(d.dict.cols(), d.y.cols());
  std::vector<double> sum(params.layers(), 0.0);
  int counted = 0;
  for (Eigen::Index i = 0; i < d.y.cols(); ++i) {
    const std::optional<BlockSignal> t = truth(d, i);
    const SolveResult r = infer(params, Observation{d.y.col(i), 0.0}, d.dict, t);
    x_hat.col(i) = r.x.data();
    if (t) {
      for (int l = 0; l < params.layers(); ++l) sum[l] += r.trace.per_iter_nmse[l];
      ++counted;
    }
  }
  io::write_complex_array(out_path(g, "x_hat.bin").string(), x_hat);
  std::string csv = "layer,nmse\n";
  for (int l = 0; l < params.layers() && counted > 0; ++l) {
    csv += std::to_string(l + 1) + "," + fmt(sum[l] / counted) + "\n";
  }
  io::write_text(out_path(g, "layer_nmse.csv").string(), csv);
  return 0;
}

int cmd_theory(const Globals& g, const std::string& dict_file, const TheoremOptions& base) {
  experiments::ExperimentSpec spec;
  spec.name = "theory_check";
  spec.kind = experiments::ExperimentKind::TheoryReport;
  spec.dictionary.type = "orthogonal_blocks";
  if (!dict_file.empty()) spec.dictionary = read_json(dict_file).get<experiments::DictionarySpec>();
  spec.theory = base;
  spec.seed = g.seed.value_or(1);
  spec.resolve();
  const experiments::ExperimentOutput out = experiments::theory_report(spec, {g.threads, "."});
  std::cout << out.files.front().contents;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-sparse recovery toolkit: ISTA, Block-ISTA and unfolded networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string dict_file;
  std::string data_dir;

  auto* gen = app.add_subcommand("generate", "Write a dataset of scenes and observations");
  int samples = 100;
  int k = 1;
  std::vector<int> scatterers;
  std::optional<double> snr_db;
  gen->add_option("--dict", dict_file, "Dictionary JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--samples", samples, "Number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--k", k, "Active blocks per sample")->check(CLI::NonNegativeNumber);
  gen->add_option("--scatterers", scatterers, "Min and max nonzero entries per block")->expected(2);
  gen->add_option("--snr-db", snr_db, "SNR in dB; noiseless when absent");

  auto* coh = app.add_subcommand("coherence", "Print coherence measures as JSON");
  coh->add_option("--dict", dict_file, "Dictionary JSON")->check(CLI::ExistingFile);
  coh->add_option("--data", data_dir, "Dataset directory")->check(CLI::ExistingDirectory);

  auto* sol = app.add_subcommand("solve", "Run ISTA or Block-ISTA on a dataset");
  std::string method = "block_ista";
  double lambda = 1.0;
  int iters = 1000;
  double tol = 0.0;
  sol->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  sol->add_option("--method", method, "ista or block_ista")->check(CLI::IsMember({"ista", "block_ista"}));
  sol->add_option("--lambda", lambda, "Regularization weight")->check(CLI::PositiveNumber);
  sol->add_option("--iters", iters, "Iteration budget")->check(CLI::PositiveNumber);
  sol->add_option("--tol", tol, "Stop when the update norm falls below this")->check(CLI::NonNegativeNumber);

  auto* trn = app.add_subcommand("train", "Train an unfolded network on synthetic data");
  std::string net = "ada_blocklista";
  int layers = 10;
  std::string config_file;
  trn->add_option("--dict", dict_file, "Dictionary JSON")->check(CLI::ExistingFile);
  trn->add_option("--data", data_dir, "Dataset directory whose dictionary is used")->check(CLI::ExistingDirectory);
  trn->add_option("--method", net, "lista, adalista, adalista_single or ada_blocklista")
      ->check(CLI::IsMember({"lista", "adalista", "adalista_single", "ada_blocklista"}));
  trn->add_option("--layers", layers, "Number of layers")->check(CLI::PositiveNumber);
  trn->add_option("--config", config_file, "Training config JSON")->check(CLI::ExistingFile);

  auto* inf = app.add_subcommand("infer", "Run a trained network on a dataset");
  std::string checkpoint;
  inf->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  inf->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);

  auto* thy = app.add_subcommand("theory-check", "Check the linear convergence guarantee numerically");
  TheoremOptions topts;
  topts.s = 2;
  thy->add_option("--dict", dict_file, "Dictionary JSON (default: orthogonal blocks, 128 x 2 x 8)")
      ->check(CLI::ExistingFile);
  thy->add_option("--s", topts.s, "Block sparsity")->capture_default_str()->check(CLI::PositiveNumber);
  thy->add_option("--zeta", topts.zeta, "Block norm bound")->check(CLI::PositiveNumber);
  thy->add_option("--sigma-w", topts.sigma_w, "Noise level")->check(CLI::NonNegativeNumber);
  thy->add_option("--delta", topts.delta, "Noise bound failure probability");
  thy->add_option("--layers", topts.layers, "Layers")->check(CLI::PositiveNumber);
  thy->add_option("--trials", topts.trials, "Trials")->check(CLI::PositiveNumber);

  auto* exp = app.add_subcommand("experiment", "Experiment manifests");
  exp->require_subcommand(1);
  auto* run = exp->add_subcommand("run", "Run every experiment of a manifest");
  std::string manifest;
  run->add_option("manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(g, dict_file, samples, k, scatterers, snr_db);
    if (coh->parsed()) return cmd_coherence(dict_file, data_dir);
    if (sol->parsed()) return cmd_solve(g, data_dir, method, lambda, iters, tol);
    if (trn->parsed()) return cmd_train(g, dict_file, data_dir, net, layers, config_file);
    if (inf->parsed()) return cmd_infer(g, data_dir, checkpoint);
    if (thy->parsed()) return cmd_theory(g, dict_file, topts);
    if (run->parsed()) {
      const int code = experiments::run_all(manifest, g.out_dir, {g.threads, "."});
      std::printf("%s\n", (fs::path(g.out_dir) / "summary.json").string().c_str());
      return code;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
