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

#include "blocklista/experiments.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "blocklista/coherence.h"
#include "blocklista/io.h"
#include "blocklista/iterative.h"
#include "blocklista/json_util.h"
#include "blocklista/ops.h"
#include "blocklista/parallel.h"
#include "blocklista/random.h"
#include "blocklista/solve_result.h"

namespace blocklista::experiments {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> kMethods{"ista", "block_ista", "lista", "adalista", "adalista_single",
                                                 "ada_blocklista"};
  return kMethods;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string stamp(const ExperimentSpec& spec) {
  return "# experiment=" + spec.name + " kind=" + to_string(spec.kind) + " config_hash=" + config_hash(spec) +
         " seed=" + std::to_string(spec.seed) + "\n";
}

nlohmann::json json_stamp(const ExperimentSpec& spec) {
  return {{"experiment", spec.name}, {"kind", to_string(spec.kind)}, {"config_hash", config_hash(spec)},
          {"seed", spec.seed}};
}

nlohmann::json dictionary_json(const DictionarySpec& d) {
  nlohmann::json j{{"type", d.type}};
  if (d.type == "radar") {
    j["radar"] = d.radar;
  } else {
    j["rows"] = d.rows;
    j["block_len"] = d.block_len;
    j["num_blocks"] = d.num_blocks;
    j["seed"] = d.seed;
  }
  return j;
}

void dictionary_from_json(const nlohmann::json& j, DictionarySpec& d, ExperimentKind kind) {
  json_util::check_keys(j, {"type", "radar", "rows", "block_len", "num_blocks", "seed"}, "dictionary");
  json_util::read(j, "type", d.type);
  if (d.type != "radar" && d.type != "gaussian" && d.type != "orthogonal_blocks") {
    throw std::invalid_argument("dictionary: unknown type '" + d.type + "'");
  }
  if (auto it = j.find("radar"); it != j.end()) {
    nlohmann::json rj = *it;
    // The noisy suite defaults to P = 4.
    if (kind == ExperimentKind::HitrateGrid && rj.is_object() && !rj.contains("range_bins")) rj["range_bins"] = 4;
    d.radar = rj.get<radar::RadarConfig>();
  }
  json_util::read(j, "rows", d.rows);
  json_util::read(j, "block_len", d.block_len);
  json_util::read(j, "num_blocks", d.num_blocks);
  json_util::read(j, "seed", d.seed);
}

nlohmann::json theory_json(const TheoremOptions& t) {
  return {{"s", t.s},           {"zeta", t.zeta},     {"sigma_w", t.sigma_w},
          {"delta", t.delta},   {"layers", t.layers}, {"trials", t.trials},
          {"threshold_scale", t.threshold_scale}};
}

void theory_from_json(const nlohmann::json& j, TheoremOptions& t) {
  json_util::check_keys(j, {"s", "zeta", "sigma_w", "delta", "layers", "trials", "threshold_scale"}, "theory");
  json_util::read(j, "s", t.s);
  json_util::read(j, "zeta", t.zeta);
  json_util::read(j, "sigma_w", t.sigma_w);
  json_util::read(j, "delta", t.delta);
  json_util::read(j, "layers", t.layers);
  json_util::read(j, "trials", t.trials);
  json_util::read(j, "threshold_scale", t.threshold_scale);
}

const char* to_string(HitRule rule) { return rule == HitRule::TopK ? "top_k" : "per_entry"; }

std::vector<int> top_indices(const RVector& values, std::size_t count) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Ties go to the lower index so the rule stays deterministic.
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return values[a] > values[b]; });
  idx.resize(std::min(count, idx.size()));
  // Zero entries are never selected; a short list then cannot match the truth.
  std::erase_if(idx, [&](int i) { return !(values[i] > 0.0); });
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Everything needed to evaluate one scene.
struct Trial {
  BlockSignal x_true;
  Observation obs;
};

Trial make_trial(const ExperimentSpec& spec, const BlockDictionary& dict, int k, double sigma_w, int index) {
  radar::RadarConfig cfg = spec.dictionary.radar;
  cfg.noise_sigma = sigma_w;
  // Scenes depend on (K, trial) only, so every SNR sees the same scenes.
  const std::uint64_t scene_seed = mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(k)), index);
  const radar::RadarScene scene = radar::random_scene(cfg, k, *spec.scatterers, scene_seed);
  return {radar::scene_to_normalized_signal(scene, dict), radar::observe(scene, mix_seed(scene_seed, 1))};
}

struct MethodRun {
  BlockSignal x;
  std::vector<double> nmse;  // t = 0..budget; empty when x* = 0
};

MethodRun run_method(const std::string& method, const Trial& trial, const BlockDictionary& dict,
                     const ExperimentSpec& spec, const NetworkParams* net, double lipschitz) {
  const bool has_truth = trial.x_true.data().norm() > 0.0;
  const std::optional<BlockSignal> truth = has_truth ? std::optional<BlockSignal>(trial.x_true) : std::nullopt;
  SolveResult r{BlockSignal(dict.partition()), {}};
  if (net) {
    r = infer(*net, trial.obs, dict, truth);
  } else {
    IterativeConfig cfg;
    cfg.lambda = spec.lambda;
    cfg.max_iters = spec.iterations;
    cfg.tol = 0.0;
    cfg.lipschitz = lipschitz;
    r = solve(method == "ista" ? IterativeKind::Ista : IterativeKind::BlockIsta, trial.obs, dict, cfg, truth);
  }
  MethodRun out{std::move(r.x), {}};
  if (has_truth) {
    out.nmse.push_back(1.0);
    out.nmse.insert(out.nmse.end(), r.trace.per_iter_nmse.begin(), r.trace.per_iter_nmse.end());
  }
  return out;
}

// Networks for every network method of an experiment, trained or loaded at (k, sigma_w).
class Networks {
 public:
  Networks(const ExperimentSpec& spec, const BlockDictionary& dict, NetworkCache& cache, const RunOptions& opts)
      : spec_(spec), dict_(dict), cache_(cache), opts_(opts) {}

  const NetworkParams* get(const std::string& method, int k, double sigma_w, std::vector<OutputFile>& files) {
    if (!is_network_method(method)) return nullptr;
    const NetworkKind kind = network_kind_from_string(method);
    if (auto it = spec_.checkpoints.find(method); it != spec_.checkpoints.end()) {
      fs::path path(it->second);
      if (path.is_relative()) path = fs::path(opts_.base_dir) / path;
      const std::string key = "file:" + path.string();
      if (const CachedNetwork* hit = cache_.find(key)) return &hit->params;
      if (!fs::exists(path)) throw std::runtime_error("missing checkpoint for " + method + ": " + path.string());
      NetworkParams params = io::load_checkpoint(path.string());
      if (params.kind != kind) throw std::runtime_error("checkpoint " + path.string() + " is not a " + method);
      if (params.partition != dict_.partition() || params.n_measurements != dict_.rows()) {
        throw std::runtime_error("checkpoint " + path.string() + " does not match the dictionary");
      }
      if (params.layers() != spec_.layers) {
        throw std::runtime_error("checkpoint " + path.string() + " has " + std::to_string(params.layers()) +
                                 " layers, expected " + std::to_string(spec_.layers));
      }
      return &cache_.put(key, {std::move(params), ""}).params;
    }
    if (!spec_.train_inline) throw std::runtime_error("missing checkpoint for " + method + " and train_inline is off");

    TrainingConfig tc = spec_.training;
    tc.sparsity = k;
    tc.noise_sigma_w = sigma_w;
    tc.coef_dist.min_active = spec_.scatterers->first;
    tc.coef_dist.max_active = spec_.scatterers->second;
    // Radar coefficients live in normalized coordinates: beta ~ CN(0, 1) times the column scale.
    tc.coef_dist.scale = dict_.column_scales()[0];
    const nlohmann::json key_json{{"method", method},      {"dictionary", dictionary_json(spec_.dictionary)},
                                  {"training", tc},        {"layers", spec_.layers}};
    const std::string key = "train:" + json_util::hash_hex(key_json);
    const std::string log_name =
        "train_" + method + "_k" + std::to_string(k) + "_sigma" + fmt(sigma_w) + ".csv";
    const CachedNetwork* net = cache_.find(key);
    if (!net) {
      tc.threads = opts_.threads;
      TrainingResult result = train_network(kind, dict_, spec_.layers, tc);
      net = &cache_.put(key, {std::move(result.params), training_log_csv(result.log)});
    }
    files.push_back({log_name, stamp(spec_) + net->training_log});
    return &net->params;
  }

 private:
  const ExperimentSpec& spec_;
  const BlockDictionary& dict_;
  NetworkCache& cache_;
  const RunOptions& opts_;
};

double sigma_for(double snr_db) { return radar::sigma_from_snr_db(snr_db); }

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::NmseCurve: return "nmse_curve";
    case ExperimentKind::RecoveryPanel: return "recovery_panel";
    case ExperimentKind::HitrateGrid: return "hitrate_grid";
    case ExperimentKind::TheoryReport: return "theory_report";
    case ExperimentKind::CoherenceReport: return "coherence_report";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (ExperimentKind k : {ExperimentKind::NmseCurve, ExperimentKind::RecoveryPanel, ExperimentKind::HitrateGrid,
                           ExperimentKind::TheoryReport, ExperimentKind::CoherenceReport}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

bool is_network_method(const std::string& method) { return method != "ista" && method != "block_ista"; }

BlockDictionary make_dictionary(const DictionarySpec& spec) {
  if (spec.type == "radar") return radar::dictionary(spec.radar);
  if (spec.rows < 1 || spec.block_len < 1 || spec.num_blocks < 1) {
    throw std::invalid_argument("dictionary: rows, block_len and num_blocks must be >= 1");
  }
  if (spec.type == "gaussian") return gaussian_dictionary(spec.rows, spec.block_len, spec.num_blocks, spec.seed);
  if (spec.type == "orthogonal_blocks") {
    return orthogonal_block_dictionary(spec.rows, spec.block_len, spec.num_blocks, spec.seed);
  }
  throw std::invalid_argument("dictionary: unknown type '" + spec.type + "'");
}

void to_json(nlohmann::json& j, const DictionarySpec& spec) { j = dictionary_json(spec); }

void from_json(const nlohmann::json& j, DictionarySpec& spec) {
  dictionary_from_json(j, spec, ExperimentKind::CoherenceReport);
}

void ExperimentSpec::resolve() {
  if (name.empty()) throw std::invalid_argument("experiment: name is required");
  if (out_dir.empty()) out_dir = name;
  if (fs::path(out_dir).is_absolute() || out_dir.find("..") != std::string::npos) {
    throw std::invalid_argument("experiment " + name + ": out_dir must be a relative path without '..'");
  }
  if (trials < 1) throw std::invalid_argument("experiment " + name + ": trials must be >= 1");
  if (layers < 1 || iterations < 1) throw std::invalid_argument("experiment " + name + ": layers/iterations < 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("experiment " + name + ": lambda must be > 0");
  training.validate();
  dictionary.radar.validate();

  const bool scene_based = kind == ExperimentKind::NmseCurve || kind == ExperimentKind::RecoveryPanel ||
                           kind == ExperimentKind::HitrateGrid;
  if (!scene_based) return;
  if (dictionary.type != "radar") {
    throw std::invalid_argument("experiment " + name + ": " + to_string(kind) + " needs a radar dictionary");
  }
  if (methods.empty()) methods = {"ista", "block_ista", "adalista", "ada_blocklista"};
  for (const std::string& m : methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw std::invalid_argument("experiment " + name + ": unknown method '" + m + "'");
    }
  }
  if (k.empty()) {
    switch (kind) {
      case ExperimentKind::NmseCurve: k = {1}; break;
      case ExperimentKind::RecoveryPanel: k = {1, 2}; break;
      default: k = {1, 2, 3, 4, 5, 6, 7, 8}; break;
    }
  }
  if (kind == ExperimentKind::HitrateGrid && snr_db.empty()) snr_db = {-10, -5, 0, 5, 10, 15, 20};
  const int p = dictionary.radar.range_bins;
  const int q = dictionary.radar.velocity_bins;
  if (!scatterers) scatterers = std::make_pair(1, p);
  if (scatterers->first < 1 || scatterers->second < scatterers->first || scatterers->second > p) {
    throw std::invalid_argument("experiment " + name + ": scatterers must satisfy 1 <= lo <= hi <= P");
  }
  for (int kk : k) {
    if (kk < 0 || kk > q) {
      throw std::invalid_argument("experiment " + name + ": K=" + std::to_string(kk) + " outside 0..Q=" +
                                  std::to_string(q));
    }
  }
  if (kind == ExperimentKind::HitrateGrid) {
    if (!train_k) train_k = k[k.size() / 2];
    if (!train_snr_db) train_snr_db = snr_db[snr_db.size() / 2];
    if (*train_k < 1 || *train_k > q) throw std::invalid_argument("experiment " + name + ": train_k outside 1..Q");
  }
  for (const std::string& m : methods) {
    if (is_network_method(m) && !checkpoints.count(m) && !train_inline) {
      throw std::invalid_argument("experiment " + name + ": no checkpoint for " + m + " and train_inline is off");
    }
  }
}

void to_json(nlohmann::json& j, const ExperimentSpec& spec) {
  j = nlohmann::json{{"name", spec.name},
                     {"kind", to_string(spec.kind)},
                     {"methods", spec.methods},
                     {"dictionary", dictionary_json(spec.dictionary)},
                     {"snr_db", spec.snr_db},
                     {"k", spec.k},
                     {"trials", spec.trials},
                     {"seed", spec.seed},
                     {"out_dir", spec.out_dir},
                     {"layers", spec.layers},
                     {"iterations", spec.iterations},
                     {"lambda", spec.lambda},
                     {"hit_rule", to_string(spec.hit_rule)},
                     {"checkpoints", spec.checkpoints},
                     {"train_inline", spec.train_inline},
                     {"training", spec.training},
                     {"theory", theory_json(spec.theory)}};
  if (spec.scatterers) j["scatterers"] = {spec.scatterers->first, spec.scatterers->second};
  if (spec.train_k) j["train_k"] = *spec.train_k;
  if (spec.train_snr_db) j["train_snr_db"] = *spec.train_snr_db;
}

void from_json(const nlohmann::json& j, ExperimentSpec& spec) {
  json_util::check_keys(j,
                        {"name", "kind", "methods", "dictionary", "scatterers", "snr_db", "k", "trials", "seed",
                         "out_dir", "layers", "iterations", "lambda", "hit_rule", "checkpoints", "train_inline",
                         "training", "train_k", "train_snr_db", "theory"},
                        "experiment");
  ExperimentSpec out;
  json_util::read(j, "name", out.name);
  out.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
  if (out.kind == ExperimentKind::TheoryReport) out.dictionary.type = "orthogonal_blocks";
  if (out.kind == ExperimentKind::HitrateGrid) out.dictionary.radar.range_bins = 4;
  json_util::read(j, "methods", out.methods);
  if (auto it = j.find("dictionary"); it != j.end()) dictionary_from_json(*it, out.dictionary, out.kind);
  if (auto it = j.find("scatterers"); it != j.end()) {
    const auto v = it->get<std::vector<int>>();
    if (v.size() != 2) throw std::invalid_argument("scatterers must be [lo, hi]");
    out.scatterers = std::make_pair(v[0], v[1]);
  }
  json_util::read(j, "snr_db", out.snr_db);
  json_util::read(j, "k", out.k);
  json_util::read(j, "trials", out.trials);
  json_util::read(j, "seed", out.seed);
  json_util::read(j, "out_dir", out.out_dir);
  json_util::read(j, "layers", out.layers);
  json_util::read(j, "iterations", out.iterations);
  json_util::read(j, "lambda", out.lambda);
  if (auto it = j.find("hit_rule"); it != j.end()) {
    const auto rule = it->get<std::string>();
    if (rule == "top_k") {
      out.hit_rule = HitRule::TopK;
    } else if (rule == "per_entry") {
      out.hit_rule = HitRule::PerEntry;
    } else {
      throw std::invalid_argument("hit_rule must be top_k or per_entry");
    }
  }
  json_util::read(j, "checkpoints", out.checkpoints);
  json_util::read(j, "train_inline", out.train_inline);
  if (auto it = j.find("training"); it != j.end()) out.training = it->get<TrainingConfig>();
  if (auto it = j.find("train_k"); it != j.end()) out.train_k = it->get<int>();
  if (auto it = j.find("train_snr_db"); it != j.end()) out.train_snr_db = it->get<double>();
  if (auto it = j.find("theory"); it != j.end()) theory_from_json(*it, out.theory);
  out.resolve();
  spec = std::move(out);
}

std::string config_hash(const ExperimentSpec& spec) { return json_util::hash_hex(nlohmann::json(spec)); }

bool is_hit(const BlockSignal& x_hat, const BlockSignal& x_true, HitRule rule) {
  if (rule == HitRule::TopK) {
    const std::vector<int> truth = x_true.support();
    return top_indices(x_hat.block_norms(), truth.size()) == truth;
  }
  std::vector<int> truth;
  for (Eigen::Index i = 0; i < x_true.data().size(); ++i) {
    if (x_true.data()[i] != Complex(0.0, 0.0)) truth.push_back(static_cast<int>(i));
  }
  return top_indices(x_hat.data().cwiseAbs(), truth.size()) == truth;
}

ExperimentOutput run_nmse_curve(const ExperimentSpec& spec, NetworkCache& cache, const RunOptions& opts) {
  const BlockDictionary dict = make_dictionary(spec.dictionary);
  const double lip = lipschitz_constant(dict);
  Networks nets(spec, dict, cache, opts);
  ExperimentOutput out;
  std::string csv = stamp(spec) + "method,k,t,nmse\n";
  nlohmann::json final_nmse = nlohmann::json::object();
  for (int k : spec.k) {
    if (k == 0) throw std::invalid_argument("nmse_curve: K = 0 has no NMSE (x* = 0)");
    for (const std::string& method : spec.methods) {
      const NetworkParams* net = nets.get(method, k, 0.0, out.files);
      std::vector<std::vector<double>> curves(spec.trials);
      parallel_for(spec.trials, opts.threads, [&](int i) {
        curves[i] = run_method(method, make_trial(spec, dict, k, 0.0, i), dict, spec, net, lip).nmse;
      });
      std::vector<double> mean(curves[0].size(), 0.0);
      for (const auto& c : curves) {
        for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += c[t];
      }
      for (std::size_t t = 0; t < mean.size(); ++t) {
        mean[t] /= spec.trials;
        csv += method + "," + std::to_string(k) + "," + std::to_string(t) + "," + fmt(mean[t]) + "\n";
      }
      final_nmse[method + "_k" + std::to_string(k)] = mean.back();
    }
  }
  out.files.push_back({"nmse_curve.csv", csv});
  out.summary = {{"final_nmse", final_nmse}};
  return out;
}

ExperimentOutput run_recovery_panel(const ExperimentSpec& spec, NetworkCache& cache, const RunOptions& opts) {
  const BlockDictionary dict = make_dictionary(spec.dictionary);
  const double lip = lipschitz_constant(dict);
  const int p_len = dict.partition().block_len();
  Networks nets(spec, dict, cache, opts);
  ExperimentOutput out;
  std::string grid = stamp(spec) + "method,k,p,q,magnitude\n";
  std::string hits_csv = stamp(spec) + "method,k,trials,hits,hit_rate,std_error\n";
  nlohmann::json rates = nlohmann::json::object();
  auto emit_grid = [&](const std::string& label, int k, const BlockSignal& x) {
    for (int q = 0; q < dict.partition().num_blocks(); ++q) {
      for (int p = 0; p < p_len; ++p) {
        const int idx = q * p_len + p;
        // Physical |beta|: undo the column normalization.
        const double mag = std::abs(x.data()[idx]) / dict.column_scales()[idx];
        grid += label + "," + std::to_string(k) + "," + std::to_string(p) + "," + std::to_string(q) + "," + fmt(mag) +
                "\n";
      }
    }
  };
  for (int k : spec.k) {
    std::vector<Trial> trials;
    trials.reserve(spec.trials);
    for (int i = 0; i < spec.trials; ++i) trials.push_back(make_trial(spec, dict, k, 0.0, i));
    emit_grid("truth", k, trials[0].x_true);
    for (const std::string& method : spec.methods) {
      const NetworkParams* net = k > 0 ? nets.get(method, k, 0.0, out.files) : nullptr;
      if (k == 0 && is_network_method(method)) {
        // Every network maps y = 0 to x = 0; no training data exists for K = 0.
        emit_grid(method, k, BlockSignal(dict.partition()));
        hits_csv += method + ",0," + std::to_string(spec.trials) + "," + std::to_string(spec.trials) + ",1,0\n";
        continue;
      }
      std::vector<BlockSignal> xs(spec.trials, BlockSignal(dict.partition()));
      parallel_for(spec.trials, opts.threads,
                   [&](int i) { xs[i] = run_method(method, trials[i], dict, spec, net, lip).x; });
      emit_grid(method, k, xs[0]);
      int hits = 0;
      for (int i = 0; i < spec.trials; ++i) hits += is_hit(xs[i], trials[i].x_true, spec.hit_rule);
      const double rate = static_cast<double>(hits) / spec.trials;
      const double se = std::sqrt(rate * (1.0 - rate) / spec.trials);
      hits_csv += method + "," + std::to_string(k) + "," + std::to_string(spec.trials) + "," + std::to_string(hits) +
                  "," + fmt(rate) + "," + fmt(se) + "\n";
      rates[method + "_k" + std::to_string(k)] = rate;
    }
  }
  out.files.push_back({"recovery_panel.csv", grid});
  out.files.push_back({"recovery_hits.csv", hits_csv});
  out.summary = {{"hit_rate", rates}, {"hit_rule", to_string(spec.hit_rule)}};
  return out;
}

ExperimentOutput run_hitrate_grid(const ExperimentSpec& spec, NetworkCache& cache, const RunOptions& opts) {
  const BlockDictionary dict = make_dictionary(spec.dictionary);
  const double lip = lipschitz_constant(dict);
  Networks nets(spec, dict, cache, opts);
  ExperimentOutput out;
  std::vector<const NetworkParams*> trained;
  for (const std::string& method : spec.methods) {
    trained.push_back(nets.get(method, *spec.train_k, sigma_for(*spec.train_snr_db), out.files));
  }
  std::string csv = stamp(spec) + "method,snr_db,k,trials,hits,hit_rate,std_error\n";
  // hits[method][snr][k]
  const std::size_t nm = spec.methods.size();
  std::vector<int> hits(nm * spec.snr_db.size() * spec.k.size(), 0);
  for (std::size_t si = 0; si < spec.snr_db.size(); ++si) {
    const double sigma = sigma_for(spec.snr_db[si]);
    for (std::size_t ki = 0; ki < spec.k.size(); ++ki) {
      std::vector<std::vector<char>> cell(spec.trials, std::vector<char>(nm, 0));
      parallel_for(spec.trials, opts.threads, [&](int i) {
        const Trial trial = make_trial(spec, dict, spec.k[ki], sigma, i);
        for (std::size_t m = 0; m < nm; ++m) {
          const MethodRun r = run_method(spec.methods[m], trial, dict, spec, trained[m], lip);
          cell[i][m] = is_hit(r.x, trial.x_true, spec.hit_rule);
        }
      });
      for (std::size_t m = 0; m < nm; ++m) {
        int h = 0;
        for (const auto& c : cell) h += c[m];
        hits[(m * spec.snr_db.size() + si) * spec.k.size() + ki] = h;
      }
    }
  }
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t si = 0; si < spec.snr_db.size(); ++si) {
      for (std::size_t ki = 0; ki < spec.k.size(); ++ki) {
        const int h = hits[(m * spec.snr_db.size() + si) * spec.k.size() + ki];
        const double rate = static_cast<double>(h) / spec.trials;
        csv += spec.methods[m] + "," + fmt(spec.snr_db[si]) + "," + std::to_string(spec.k[ki]) + "," +
               std::to_string(spec.trials) + "," + std::to_string(h) + "," + fmt(rate) + "," +
               fmt(std::sqrt(rate * (1.0 - rate) / spec.trials)) + "\n";
      }
    }
  }
  out.files.push_back({"hitrate_grid.csv", csv});
  out.summary = {{"train_k", *spec.train_k}, {"train_snr_db", *spec.train_snr_db},
                 {"hit_rule", to_string(spec.hit_rule)}};
  return out;
}

nlohmann::json coherence_json(const CoherenceReport& c) {
  return {{"mutual", c.mutual}, {"sub_coherence", c.sub_coherence}, {"block_coherence", c.block_coherence}};
}

nlohmann::json condition_json(const ConditionCheck& c) {
  // +inf margins (zero coherence) are written as null.
  return {{"satisfied", c.satisfied}, {"margin", std::isfinite(c.margin) ? nlohmann::json(c.margin) : nlohmann::json(nullptr)}};
}

ExperimentOutput theory_report(const ExperimentSpec& spec, const RunOptions& opts) {
  const BlockDictionary dict = make_dictionary(spec.dictionary);
  TheoremOptions topts = spec.theory;
  topts.seed = spec.seed;
  topts.threads = opts.threads;
  const CoherenceReport coh = blocklista::coherence_report(dict);
  const TheoremVerification v = verify_theorem(dict, topts);
  nlohmann::json j = json_stamp(spec);
  j["dictionary"] = {{"rows", dict.rows()},
                     {"block_len", dict.partition().block_len()},
                     {"num_blocks", dict.partition().num_blocks()},
                     {"coherence", coherence_json(coh)}};
  j["block_condition"] = condition_json(check_block_yonina(coh, topts.s, dict.partition().block_len()));
  j["generalized"] = {{"nu_tilde", v.coherences.nu_tilde},
                      {"mu_tilde", v.coherences.mu_tilde},
                      {"c_w", v.coherences.c_w}};
  j["condition"] = condition_json(v.condition);
  j["c1"] = std::isfinite(v.constants.c1) ? nlohmann::json(v.constants.c1) : nlohmann::json(nullptr);
  j["c2"] = v.constants.c2;
  j["sigma"] = v.sigma;
  j["thresholds"] = v.schedule.thetas;
  j["error_bounds"] = v.schedule.error_bounds;
  j["trials"] = v.trials;
  j["containment_rate"] = v.containment_rate;
  j["max_error"] = v.max_error;
  j["bound_ratio"] = v.bound_ratio;
  j["max_bound_ratio"] = v.max_bound_ratio;
  if (topts.layers >= 1) {
    int positive = 0;
    for (double e : v.max_error) positive += e > 0.0;
    if (positive >= 2) {
      const LogSlopeFit fit = fit_log_slope(v.max_error, 0, topts.layers);
      j["log_error_fit"] = {{"slope", fit.slope}, {"r_squared", fit.r_squared}, {"points", fit.points}};
    }
  }
  ExperimentOutput out;
  out.files.push_back({"theory_report.json", j.dump(2) + "\n"});
  out.summary = {{"containment_rate", v.containment_rate}, {"max_bound_ratio", v.max_bound_ratio}};
  return out;
}

ExperimentOutput coherence_report(const ExperimentSpec& spec, const RunOptions&) {
  const BlockDictionary dict = make_dictionary(spec.dictionary);
  const CoherenceReport coh = blocklista::coherence_report(dict);
  nlohmann::json j = json_stamp(spec);
  j["rows"] = dict.rows();
  j["block_len"] = dict.partition().block_len();
  j["num_blocks"] = dict.partition().num_blocks();
  j["coherence"] = coherence_json(coh);
  j["lipschitz"] = lipschitz_constant(dict);
  int max_s = 0;
  if (dict.partition().num_blocks() >= 2) {
    while (max_s < dict.partition().num_blocks() &&
           check_block_yonina(coh, max_s + 1, dict.partition().block_len()).satisfied) {
      ++max_s;
    }
  }
  j["max_block_sparsity_certified"] = max_s;
  ExperimentOutput out;
  out.files.push_back({"coherence_report.json", j.dump(2) + "\n"});
  out.summary = coherence_json(coh);
  return out;
}

ExperimentOutput run_experiment(const ExperimentSpec& spec, NetworkCache& cache, const RunOptions& opts) {
  switch (spec.kind) {
    case ExperimentKind::NmseCurve: return run_nmse_curve(spec, cache, opts);
    case ExperimentKind::RecoveryPanel: return run_recovery_panel(spec, cache, opts);
    case ExperimentKind::HitrateGrid: return run_hitrate_grid(spec, cache, opts);
    case ExperimentKind::TheoryReport: return theory_report(spec, opts);
    case ExperimentKind::CoherenceReport: return coherence_report(spec, opts);
  }
  throw std::logic_error("unreachable");
}

int run_all(const std::string& manifest_path, const std::string& out_dir, const RunOptions& opts) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(manifest_path + ": " + e.what());
  }
  json_util::check_keys(manifest, {"experiments"}, "manifest");
  const nlohmann::json specs = manifest.value("experiments", nlohmann::json::array());
  if (!specs.is_array()) throw std::invalid_argument("manifest: experiments must be an array");

  RunOptions run_opts = opts;
  if (run_opts.base_dir == ".") run_opts.base_dir = fs::path(manifest_path).parent_path().string();
  if (run_opts.base_dir.empty()) run_opts.base_dir = ".";
  fs::create_directories(out_dir);
  NetworkCache cache;
  std::set<std::string> used_dirs;
  nlohmann::json entries = nlohmann::json::array();
  bool all_ok = true;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    nlohmann::json entry{{"index", i}};
    if (specs[i].is_object() && specs[i].contains("name")) entry["name"] = specs[i]["name"];
    try {
      ExperimentSpec spec = specs[i].get<ExperimentSpec>();
      entry["name"] = spec.name;
      entry["kind"] = to_string(spec.kind);
      entry["config_hash"] = config_hash(spec);
      entry["seed"] = spec.seed;
      if (!used_dirs.insert(spec.out_dir).second) {
        throw std::invalid_argument("out_dir '" + spec.out_dir + "' is used by an earlier experiment");
      }
      const ExperimentOutput result = run_experiment(spec, cache, run_opts);
      const fs::path dir = fs::path(out_dir) / spec.out_dir;
      fs::create_directories(dir);
      nlohmann::json names = nlohmann::json::array();
      for (const OutputFile& f : result.files) {
        io::write_text((dir / f.name).string(), f.contents);
        names.push_back((fs::path(spec.out_dir) / f.name).generic_string());
      }
      entry["status"] = "ok";
      entry["files"] = names;
      entry["results"] = result.summary;
    } catch (const std::exception& e) {
      all_ok = false;
      entry["status"] = "error";
      entry["error"] = e.what();
    }
    entries.push_back(std::move(entry));
  }
  const nlohmann::json summary{{"manifest", fs::path(manifest_path).filename().string()},
                               {"manifest_hash", json_util::hash_hex(manifest)},
                               {"experiments", entries}};
  io::write_text((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
  return all_ok ? 0 : 1;
}

}  // namespace blocklista::experiments
