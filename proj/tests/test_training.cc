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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "blocklista/networks.h"
#include "blocklista/ops.h"
#include "blocklista/solve_result.h"
#include "blocklista/training.h"
#include "gradcheck.h"
#include "test_support.h"

namespace blocklista {
namespace {

using testing::finite_difference_gradient;
using testing::flatten;
using testing::random_dictionary;
using testing::random_grad_point;
using testing::relative_error;

class GradientCheck : public ::testing::TestWithParam<NetworkKind> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto pt = random_grad_point(GetParam(), 100 + seed);
    const auto analytic = flatten(backward(pt.params, pt.batch, pt.dict).grads);
    const auto numeric = finite_difference_gradient(pt, 1e-5);
    ASSERT_EQ(analytic.size(), numeric.size());
    EXPECT_LE(relative_error(analytic, numeric), 1e-5) << "seed " << seed;
  }
}

TEST_P(GradientCheck, SplicedLayerMatchesFullBackward) {
  const auto pt = random_grad_point(GetParam(), 7, 6, 2, 3, 3);
  UnfoldedGraph full(pt.params, pt.dict);
  ForwardTape tape;
  const CMatrix out = full.forward(pt.batch.y, &tape);
  const CMatrix g_out = out - pt.batch.x_true;
  CMatrix g_in_full;
  const Gradients expected = full.backward(pt.batch.y, tape, g_out, &g_in_full);

  // Last layer by hand, then the shorter network for the rest.
  Gradients acc = full.start_accumulation();
  const CMatrix g_mid = full.layer_backward(2, pt.batch.y, tape, g_out, acc);
  const Gradients last = full.finalize(acc);

  NetworkParams head = pt.params;
  head.thetas.resize(2);
  if (!head.gammas.empty()) head.gammas.resize(2);
  UnfoldedGraph shorter(head, pt.dict);
  ForwardTape head_tape;
  shorter.forward(pt.batch.y, &head_tape);
  CMatrix g_in;
  const Gradients rest = shorter.backward(pt.batch.y, head_tape, g_mid, &g_in);

  EXPECT_LT((g_in - g_in_full).norm(), 1e-12 * (1.0 + g_in_full.norm()));
  for (std::size_t k = 0; k < expected.weights.size(); ++k) {
    const CMatrix sum = rest.weights[k] + last.weights[k];
    EXPECT_LT((sum - expected.weights[k]).norm(), 1e-12 * (1.0 + expected.weights[k].norm()));
  }
  for (int t = 0; t < 2; ++t) EXPECT_NEAR(rest.thetas[t], expected.thetas[t], 1e-12);
  EXPECT_NEAR(last.thetas[2], expected.thetas[2], 1e-12);
}

TEST_P(GradientCheck, HugeThresholdsGiveZeroGradient) {
  auto pt = random_grad_point(GetParam(), 3);
  for (double& th : pt.params.thetas) th = 1e6;
  const auto lg = backward(pt.params, pt.batch, pt.dict);
  EXPECT_DOUBLE_EQ(lg.loss, 1.0);
  for (const CMatrix& w : lg.grads.weights) EXPECT_EQ(w.norm(), 0.0);
  for (double g : lg.grads.gammas) EXPECT_EQ(g, 0.0);
}

TEST_P(GradientCheck, IndependentOfThreadCount) {
  const auto pt = random_grad_point(GetParam(), 11, 6, 2, 3, 2, 9);
  const auto one = backward(pt.params, pt.batch, pt.dict, 1);
  const auto three = backward(pt.params, pt.batch, pt.dict, 3);
  EXPECT_EQ(one.loss, three.loss);
  EXPECT_EQ(flatten(one.grads), flatten(three.grads));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, GradientCheck,
                         ::testing::Values(NetworkKind::Lista, NetworkKind::AdaLista, NetworkKind::AdaListaSingle,
                                           NetworkKind::AdaBlockLista),
                         [](const auto& info) { return std::string(to_string(info.param)); });

// One-layer LISTA from x = 0: x1 = soft(W_e y). The oracle differentiates in
// real coordinates with the 2x2 Jacobian of each soft-thresholded entry.
TEST(ListaOneLayer, MatchesRealCoordinateFormula) {
  Rng rng(5);
  const BlockDictionary dict = random_dictionary(4, 1, 5, 9);
  NetworkParams params = NetworkParams::identity_init(NetworkKind::Lista, dict, 1, 0.5, 0.3);
  params.weights[0] += 0.3 * testing::random_matrix(5, 4, rng);
  const CVector x_true = testing::random_vector(5, rng);
  const CVector y = dict.matrix() * x_true;
  Batch batch{x_true, y};

  const CVector u = params.weights[0] * y;
  CVector x1 = soft_threshold(u, params.thetas[0]);
  const double err = (x1 - x_true).norm();
  const double ref = x_true.norm();
  CMatrix g_we = CMatrix::Zero(5, 4);
  double g_theta = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double r = std::abs(u[i]);
    if (r <= params.thetas[0]) continue;
    const double a = u[i].real();
    const double b = u[i].imag();
    const double gx_re = (x1[i] - x_true[i]).real() / (err * ref);
    const double gx_im = (x1[i] - x_true[i]).imag() / (err * ref);
    const double th = params.thetas[0];
    const double s = 1.0 - th / r;
    const double k = th / (r * r * r);
    const double gu_re = (s + k * a * a) * gx_re + k * a * b * gx_im;
    const double gu_im = k * a * b * gx_re + (s + k * b * b) * gx_im;
    g_theta += -(a * gx_re + b * gx_im) / r;
    for (int j = 0; j < 4; ++j) {
      const double d_re = gu_re * y[j].real() + gu_im * y[j].imag();
      const double d_im = -gu_re * y[j].imag() + gu_im * y[j].real();
      g_we(i, j) = Complex(d_re, d_im);
    }
  }
  const auto lg = backward(params, batch, dict);
  EXPECT_LT((lg.grads.weights[0] - g_we).norm(), 1e-12);
  EXPECT_EQ(lg.grads.weights[1].norm(), 0.0);
  EXPECT_NEAR(lg.grads.thetas[0], g_theta, 1e-12);
}

TrainingConfig small_config() {
  TrainingConfig cfg;
  cfg.n_train = 64;
  cfg.n_val = 16;
  cfg.n_test = 8;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.lr0 = 1e-2;
  return cfg;
}

TEST(Dataset, ZeroSparsityGivesNoiseOnly) {
  const BlockDictionary dict = random_dictionary(6, 2, 4, 1);
  TrainingConfig cfg = small_config();
  cfg.sparsity = 0;
  cfg.noise_sigma_w = 0.1;
  const Dataset d = generate_dataset(dict, cfg);
  for (const Sample& s : d.train) {
    EXPECT_EQ(s.x.data().norm(), 0.0);
    EXPECT_GT(s.obs.y.norm(), 0.0);
  }
}

TEST(Dataset, NoiselessIsExactAndHasSparsityBlocks) {
  const BlockDictionary dict = random_dictionary(6, 2, 5, 2);
  TrainingConfig cfg = small_config();
  cfg.sparsity = 2;
  const Dataset d = generate_dataset(dict, cfg);
  EXPECT_EQ(static_cast<int>(d.train.size()), cfg.n_train);
  EXPECT_EQ(static_cast<int>(d.val.size()), cfg.n_val);
  EXPECT_EQ(static_cast<int>(d.test.size()), cfg.n_test);
  for (const Sample& s : d.train) {
    EXPECT_EQ(s.x.norm_20(), 2);
    EXPECT_EQ((s.obs.y - dict.apply(s.x)).norm(), 0.0);
  }
}

TEST(Dataset, DeterministicUnderSeed) {
  const BlockDictionary dict = random_dictionary(6, 2, 5, 2);
  TrainingConfig cfg = small_config();
  cfg.noise_sigma_w = 0.2;
  const Dataset a = generate_dataset(dict, cfg);
  const Dataset b = generate_dataset(dict, cfg);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train[i].x.data(), b.train[i].x.data());
    EXPECT_EQ(a.train[i].obs.y, b.train[i].obs.y);
  }
  cfg.seed = 2;
  const Dataset c = generate_dataset(dict, cfg);
  EXPECT_NE(a.train[0].obs.y, c.train[0].obs.y);
}

TEST(Dataset, ZetaCapsBlockNorms) {
  const BlockDictionary dict = random_dictionary(6, 3, 5, 2);
  TrainingConfig cfg = small_config();
  cfg.coef_dist.scale = 10.0;
  cfg.coef_dist.zeta = 0.5;
  for (const Sample& s : generate_dataset(dict, cfg).train) EXPECT_LE(s.x.block_norms().maxCoeff(), 0.5 + 1e-12);
}

TEST(Dataset, RejectsSparsityAboveBlockCount) {
  const BlockDictionary dict = random_dictionary(6, 2, 3, 2);
  TrainingConfig cfg = small_config();
  cfg.sparsity = 4;
  EXPECT_THROW(generate_dataset(dict, cfg), std::invalid_argument);
}

TEST(Nmse, Examples) {
  Rng rng(1);
  const CVector x = testing::random_vector(8, rng);
  EXPECT_EQ(nmse(x, x), 0.0);
  EXPECT_DOUBLE_EQ(nmse(CVector(CVector::Zero(8)), x), 1.0);
  EXPECT_DOUBLE_EQ(nmse(CVector(2.0 * x), x), 1.0);
  EXPECT_THROW(nmse(x, CVector(CVector::Zero(8))), std::invalid_argument);
}

TEST(TrainingConfig, JsonRoundTripAndStrictKeys) {
  TrainingConfig cfg = small_config();
  cfg.coef_dist.zeta = 2.0;
  const nlohmann::json j = cfg;
  const TrainingConfig back = j.get<TrainingConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  nlohmann::json bad = j;
  bad["learning_rate"] = 1.0;
  EXPECT_THROW(bad.get<TrainingConfig>(), std::invalid_argument);
  TrainingConfig neg = small_config();
  neg.n_train = 0;
  EXPECT_THROW(neg.validate(), std::invalid_argument);
}

struct TrainFixture {
  BlockDictionary dict = random_dictionary(8, 2, 6, 3);
  TrainingConfig cfg = small_config();
  Dataset data = generate_dataset(dict, cfg);

  NetworkParams init(NetworkKind kind = NetworkKind::AdaBlockLista) const {
    NetworkParams p = NetworkParams::identity_init(kind, dict, 4, 1.0 / lipschitz_constant(dict), 1.0);
    const double theta = calibrate_initial_threshold(p, dict, data.val);
    for (double& th : p.thetas) th = theta;
    return p;
  }
};

TEST(Train, ZeroLearningRateKeepsParameters) {
  TrainFixture f;
  f.cfg.lr0 = 0.0;
  const NetworkParams p0 = f.init();
  const TrainingResult r = train(p0, f.dict, f.data, f.cfg);
  for (std::size_t k = 0; k < p0.weights.size(); ++k) EXPECT_EQ(r.params.weights[k], p0.weights[k]);
  EXPECT_EQ(r.params.thetas, p0.thetas);
  EXPECT_EQ(r.params.gammas, p0.gammas);
  EXPECT_EQ(static_cast<int>(r.log.size()), f.cfg.epochs);
}

TEST(Train, ImprovesValidationNmseOverSeeds) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainFixture f;
    f.cfg.seed = seed;
    f.data = generate_dataset(f.dict, f.cfg);
    const TrainingResult r = train(f.init(), f.dict, f.data, f.cfg);
    EXPECT_LT(r.best_val_nmse, r.initial_val_nmse) << "seed " << seed;
    for (double th : r.params.thetas) EXPECT_GT(th, 0.0);
  }
}

TEST(Train, Deterministic) {
  TrainFixture f;
  const TrainingResult a = train(f.init(), f.dict, f.data, f.cfg);
  const TrainingResult b = train(f.init(), f.dict, f.data, f.cfg);
  for (std::size_t k = 0; k < a.params.weights.size(); ++k) EXPECT_EQ(a.params.weights[k], b.params.weights[k]);
  EXPECT_EQ(a.params.thetas, b.params.thetas);
  EXPECT_EQ(training_log_csv(a.log), training_log_csv(b.log));
}

TEST(Train, AbortsOnNaN) {
  TrainFixture f;
  f.data.train[3].obs.y[0] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  EXPECT_THROW(train(f.init(), f.dict, f.data, f.cfg), std::runtime_error);
}

TEST(Train, LearningRateHalvesOnPlateau) {
  TrainFixture f;
  f.cfg.patience = 2;
  f.cfg.epochs = 5;
  // Every block culled: the loss is flat at 1, so validation never improves.
  NetworkParams p = f.init();
  for (double& th : p.thetas) th = 1e6;
  const TrainingResult r = train(p, f.dict, f.data, f.cfg);
  ASSERT_EQ(r.log.size(), 5u);
  const double lr = f.cfg.lr0;
  EXPECT_EQ(r.log[0].lr, lr);
  EXPECT_EQ(r.log[1].lr, lr);
  EXPECT_EQ(r.log[2].lr, lr / 2);
  EXPECT_EQ(r.log[3].lr, lr / 2);
  EXPECT_EQ(r.log[4].lr, lr / 4);
  EXPECT_EQ(r.best_val_nmse, 1.0);
}

TEST(Calibration, AboutHalfOfTrueBlocksSurvive) {
  TrainFixture f;
  const NetworkParams p = f.init();
  UnfoldedGraph graph(p, f.dict);
  const Batch val = Batch::from_samples(f.data.val);
  ForwardTape tape;
  graph.forward(val.y, &tape);
  int active = 0;
  int alive = 0;
  for (Eigen::Index b = 0; b < val.x_true.cols(); ++b) {
    for (int q = 0; q < 6; ++q) {
      if (val.x_true.col(b).segment(2 * q, 2).norm() == 0.0) continue;
      ++active;
      alive += tape.x[1].col(b).segment(2 * q, 2).norm() > 0.0;
    }
  }
  EXPECT_NEAR(static_cast<double>(alive) / active, 0.5, 0.1);
}

}  // namespace
}  // namespace blocklista
