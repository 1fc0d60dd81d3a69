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

#include <filesystem>
#include <map>

#include <gtest/gtest.h>

#include "blocklista/coherence.h"
#include "blocklista/experiments.h"
#include "blocklista/io.h"

namespace blocklista::experiments {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json small_radar() {
  return {{"type", "radar"}, {"radar", {{"n_pulses", 32}, {"range_bins", 4}, {"velocity_bins", 8}, {"balanced_codes", true}}}};
}

json tiny_training() {
  return {{"n_train", 40}, {"n_val", 10}, {"n_test", 5}, {"epochs", 1}, {"batch_size", 20}};
}

class RunTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("blocklista_exp_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const json& manifest, const std::string& out = "out") {
    io::write_text((dir_ / "manifest.json").string(), manifest.dump(2));
    RunOptions opts;
    opts.base_dir = dir_.string();
    return run_all((dir_ / "manifest.json").string(), (dir_ / out).string(), opts);
  }
  json summary(const std::string& out = "out") const {
    return json::parse(io::read_text((dir_ / out / "summary.json").string()));
  }

  fs::path dir_;
};

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::read_text(e.path().string());
  }
  return files;
}

TEST(ExperimentSpec, ResolvesDefaults) {
  const ExperimentSpec s = json{{"name", "panel"}, {"kind", "recovery_panel"}, {"dictionary", small_radar()}}
                               .get<ExperimentSpec>();
  EXPECT_EQ(s.out_dir, "panel");
  EXPECT_EQ(s.k, (std::vector<int>{1, 2}));
  EXPECT_EQ(s.methods, (std::vector<std::string>{"ista", "block_ista", "adalista", "ada_blocklista"}));
  EXPECT_EQ(s.scatterers, std::make_pair(1, 4));
  EXPECT_TRUE(s.snr_db.empty());

  const ExperimentSpec g = json{{"name", "grid"}, {"kind", "hitrate_grid"}}.get<ExperimentSpec>();
  EXPECT_EQ(g.dictionary.radar.range_bins, 4);
  EXPECT_EQ(g.snr_db.size(), 7u);
  EXPECT_EQ(g.k.size(), 8u);
  EXPECT_EQ(*g.train_k, 5);
  EXPECT_EQ(*g.train_snr_db, 5.0);

  const ExperimentSpec t = json{{"name", "thy"}, {"kind", "theory_report"}}.get<ExperimentSpec>();
  EXPECT_EQ(t.dictionary.type, "orthogonal_blocks");
}

TEST(ExperimentSpec, RejectsInvalidSpecs) {
  const json base = {{"name", "x"}, {"kind", "recovery_panel"}, {"dictionary", small_radar()}};
  auto with = [&](const std::string& key, const json& value) {
    json j = base;
    j[key] = value;
    return j;
  };
  EXPECT_THROW(with("unknown", 1).get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("kind", "fig9").get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("scatterers", json::array({1, 5})).get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("k", json::array({9})).get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("out_dir", "../escape").get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("methods", json::array({"fista"})).get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("trials", 0).get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("hit_rule", "majority").get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("dictionary", json{{"type", "gaussian"}}).get<ExperimentSpec>(), std::invalid_argument);
  EXPECT_THROW(with("name", "").get<ExperimentSpec>(), std::invalid_argument);
  json no_train = with("train_inline", false);
  EXPECT_THROW(no_train.get<ExperimentSpec>(), std::invalid_argument);
}

TEST(ExperimentSpec, JsonRoundTripKeepsHash) {
  const ExperimentSpec s = json{{"name", "n"},        {"kind", "nmse_curve"},  {"dictionary", small_radar()},
                                {"k", {1, 3}},        {"snr_db", {10.0}},      {"training", tiny_training()},
                                {"hit_rule", "per_entry"}}
                               .get<ExperimentSpec>();
  const ExperimentSpec back = json(s).get<ExperimentSpec>();
  EXPECT_EQ(config_hash(back), config_hash(s));
  ExperimentSpec other = s;
  other.seed = 2;
  EXPECT_NE(config_hash(other), config_hash(s));
}

TEST(IsHit, TopKAndPerEntry) {
  const BlockPartition part(4, 2);
  BlockSignal truth(part);
  truth.block(1) << Complex(1, 0), Complex(0, 0);
  truth.block(3) << Complex(0, 1), Complex(1, 0);
  BlockSignal est(part);
  est.block(1) << Complex(0.5, 0), Complex(0.1, 0);
  est.block(3) << Complex(0.4, 0), Complex(0, 0);
  est.block(0) << Complex(0.2, 0), Complex(0, 0);
  EXPECT_TRUE(is_hit(est, truth, HitRule::TopK));
  EXPECT_FALSE(is_hit(est, truth, HitRule::PerEntry));
  est.block(0) << Complex(0.6, 0), Complex(0, 0);
  EXPECT_FALSE(is_hit(est, truth, HitRule::TopK));
  EXPECT_TRUE(is_hit(BlockSignal(part), BlockSignal(part), HitRule::TopK));
}

TEST_F(RunTest, EmptyManifestSucceeds) {
  EXPECT_EQ(run({{"experiments", json::array()}}), 0);
  const json s = summary();
  EXPECT_TRUE(s.at("experiments").empty());
  EXPECT_FALSE(s.at("manifest_hash").get<std::string>().empty());
}

TEST_F(RunTest, ManifestRequiresExperimentList) {
  EXPECT_THROW(run({{"runs", json::array()}}), std::invalid_argument);
}

TEST_F(RunTest, CoherenceReportMatchesLibrary) {
  const json spec = {{"name", "coh"}, {"kind", "coherence_report"}, {"dictionary", small_radar()}};
  ASSERT_EQ(run({{"experiments", {spec}}}), 0);
  const json report = json::parse(io::read_text((dir_ / "out/coh/coherence_report.json").string()));
  const CoherenceReport expect = coherence_report(make_dictionary(spec.get<ExperimentSpec>().dictionary));
  EXPECT_DOUBLE_EQ(report.at("coherence").at("mutual").get<double>(), expect.mutual);
  EXPECT_DOUBLE_EQ(report.at("coherence").at("sub_coherence").get<double>(), expect.sub_coherence);
  EXPECT_DOUBLE_EQ(report.at("coherence").at("block_coherence").get<double>(), expect.block_coherence);
}

TEST_F(RunTest, FailingSpecIsRecordedAndRunContinues) {
  const json bad = {{"name", "bad"}, {"kind", "nmse_curve"}, {"dictionary", small_radar()}, {"k", {0}},
                    {"methods", {"ista"}}, {"iterations", 5}, {"trials", 2}};
  const json good = {{"name", "coh"}, {"kind", "coherence_report"}, {"dictionary", small_radar()}};
  EXPECT_EQ(run({{"experiments", {bad, good}}}), 1);
  const json s = summary();
  ASSERT_EQ(s.at("experiments").size(), 2u);
  EXPECT_EQ(s["experiments"][0].at("name"), "bad");
  EXPECT_EQ(s["experiments"][0].at("status"), "error");
  EXPECT_NE(s["experiments"][0].at("error").get<std::string>().find("K = 0"), std::string::npos);
  EXPECT_EQ(s["experiments"][1].at("status"), "ok");
  EXPECT_TRUE(fs::exists(dir_ / "out/coh/coherence_report.json"));
}

TEST_F(RunTest, DuplicateOutDirsAreRejected) {
  const json a = {{"name", "a"}, {"kind", "coherence_report"}, {"dictionary", small_radar()}, {"out_dir", "same"}};
  json b = a;
  b["name"] = "b";
  EXPECT_NE(run({{"experiments", {a, b}}}), 0);
}

TEST_F(RunTest, MissingCheckpointIsAnError) {
  const json spec = {{"name", "panel"},          {"kind", "recovery_panel"}, {"dictionary", small_radar()},
                     {"methods", {"ada_blocklista"}}, {"train_inline", false},
                     {"checkpoints", {{"ada_blocklista", "missing.bin"}}}, {"trials", 2}};
  EXPECT_EQ(run({{"experiments", {spec}}}), 1);
  EXPECT_NE(summary()["experiments"][0].at("error").get<std::string>().find("missing.bin"), std::string::npos);
}

TEST_F(RunTest, LoadsCheckpointRelativeToManifest) {
  ExperimentSpec probe = json{{"name", "p"}, {"kind", "coherence_report"}, {"dictionary", small_radar()}}
                             .get<ExperimentSpec>();
  const BlockDictionary dict = make_dictionary(probe.dictionary);
  io::save_checkpoint((dir_ / "net.bin").string(),
                      NetworkParams::identity_init(NetworkKind::AdaBlockLista, dict, 3, 0.5, 1e9));
  const json spec = {{"name", "panel"},          {"kind", "recovery_panel"}, {"dictionary", small_radar()},
                     {"methods", {"ada_blocklista"}}, {"train_inline", false}, {"layers", 3},
                     {"checkpoints", {{"ada_blocklista", "net.bin"}}}, {"trials", 3}, {"k", {1}}};
  ASSERT_EQ(run({{"experiments", {spec}}}), 0);
  // A threshold of 1e9 zeroes everything, so nothing is ever hit.
  EXPECT_EQ(summary()["experiments"][0]["results"]["hit_rate"]["ada_blocklista_k1"], 0.0);
}

TEST_F(RunTest, CheckpointWithWrongLayerCountIsAnError) {
  ExperimentSpec probe = json{{"name", "p"}, {"kind", "coherence_report"}, {"dictionary", small_radar()}}
                             .get<ExperimentSpec>();
  const BlockDictionary dict = make_dictionary(probe.dictionary);
  io::save_checkpoint((dir_ / "net.bin").string(),
                      NetworkParams::identity_init(NetworkKind::AdaBlockLista, dict, 2, 0.5, 0.1));
  const json spec = {{"name", "panel"},          {"kind", "recovery_panel"}, {"dictionary", small_radar()},
                     {"methods", {"ada_blocklista"}}, {"train_inline", false}, {"layers", 3},
                     {"checkpoints", {{"ada_blocklista", "net.bin"}}}, {"trials", 3}, {"k", {1}}};
  EXPECT_EQ(run({{"experiments", {spec}}}), 1);
}

TEST_F(RunTest, ZeroSceneGivesZeroPanel) {
  const json spec = {{"name", "panel"}, {"kind", "recovery_panel"}, {"dictionary", small_radar()},
                     {"methods", {"ista", "block_ista"}}, {"k", {0}}, {"trials", 3}, {"iterations", 10}};
  ASSERT_EQ(run({{"experiments", {spec}}}), 0);
  const std::string panel = io::read_text((dir_ / "out/panel/recovery_panel.csv").string());
  std::istringstream in(panel);
  std::string line;
  std::getline(in, line);  // stamp
  std::getline(in, line);  // header
  const auto col = std::count(line.begin(), line.end(), ',');
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "0") << line;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), col);
  }
  EXPECT_EQ(rows, 3 * 4 * 8);  // truth plus two methods
}

TEST_F(RunTest, OutputsAreStampedAndDeterministic) {
  const json manifest = json::parse(io::read_text(BLOCKLISTA_SOURCE_DIR "/manifests/smoke.json"));
  ASSERT_EQ(run(manifest, "a"), 0);
  ASSERT_EQ(run(manifest, "b"), 0);
  const auto a = read_tree(dir_ / "a");
  const auto b = read_tree(dir_ / "b");
  EXPECT_EQ(a, b);
  EXPECT_GE(a.size(), 10u);
  for (const auto& [name, contents] : a) {
    if (name.ends_with(".csv")) {
      EXPECT_EQ(contents.rfind("# experiment=", 0), 0u) << name;
      EXPECT_NE(contents.find("config_hash="), std::string::npos) << name;
    }
  }
  for (const json& e : summary("a").at("experiments")) EXPECT_EQ(e.at("status"), "ok") << e.dump();
}

TEST_F(RunTest, ThreadsDoNotChangeOutputs) {
  const json manifest = json::parse(io::read_text(BLOCKLISTA_SOURCE_DIR "/manifests/smoke.json"));
  io::write_text((dir_ / "manifest.json").string(), manifest.dump());
  RunOptions one;
  RunOptions four;
  four.threads = 4;
  ASSERT_EQ(run_all((dir_ / "manifest.json").string(), (dir_ / "one").string(), one), 0);
  ASSERT_EQ(run_all((dir_ / "manifest.json").string(), (dir_ / "four").string(), four), 0);
  EXPECT_EQ(read_tree(dir_ / "one"), read_tree(dir_ / "four"));
}

}  // namespace
}  // namespace blocklista::experiments
