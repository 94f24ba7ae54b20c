// Copyright 2026 The Camflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "camflow/model.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "camflow/common.h"
#include "oracles.h"
#include "test_util.h"

namespace camflow {
namespace {

using testing::TempDir;

TEST(LayerNorm, ConstantInputGivesBias) {
  const std::vector<double> x(5, 3.0), g(5, 1.0), b = {0.1, 0.2, 0.3, 0.4, 0.5};
  const auto y = LayerNorm(x, g, b);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(y[i], b[i]);
}

TEST(LayerNorm, StandardizedPairAndZeroMean) {
  const std::vector<double> one(2, 1.0), zero(2, 0.0);
  const auto y = LayerNorm(std::vector<double>{1.0, -1.0}, one, zero, 0.0);
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], -1.0);
  Rng rng(2);
  for (int c = 0; c < 50; ++c) {
    std::vector<double> x(9);
    for (double& v : x) v = rng.Uniform(-3, 3);
    const auto z = LayerNorm(x, std::vector<double>(9, 1.0), std::vector<double>(9, 0.0));
    EXPECT_NEAR(std::accumulate(z.begin(), z.end(), 0.0) / 9, 0.0, 1e-9);
  }
}

TEST(Softmax, PositiveNormalizedShiftInvariant) {
  Rng rng(3);
  for (int c = 0; c < 100; ++c) {
    std::vector<double> l(5);
    for (double& v : l) v = rng.Uniform(-50, 50);
    const auto p = Softmax(l);
    double sum = 0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    const double k = rng.Uniform(-100, 100);
    for (double& v : l) v += k;
    const auto q = Softmax(l);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(p[i], q[i], 1e-9);
  }
}

TEST(Fusion, ZeroWeightsGiveUniform) {
  FusionHeadParams p = FusionHeadParams::Init({"a", "b", "c", "d", "e"}, 3, 4, 1);
  std::fill(p.weights.begin(), p.weights.end(), 0.0);
  const auto probs = FusionForward(std::vector<double>{1, 2, 3}, std::vector<double>{0.1, 0.5, 0.2, 0.9}, p);
  for (double v : probs) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(Fusion, AlphaZeroAndConstantDescriptorIgnoreDescriptor) {
  FusionHeadParams p = FusionHeadParams::Init({"a", "b", "c"}, 3, 4, 7);
  const std::vector<double> e = {0.3, -1.0, 2.0};
  const std::vector<double> d1 = {0.1, 0.5, 0.2, 0.9}, d2 = {0.7, 0.0, 0.4, 0.3};
  FusionHeadParams gated = p;
  gated.alpha = 0.0;
  EXPECT_EQ(FusionForward(e, d1, gated), FusionForward(e, d2, gated));
  // ln_bias is zero at init, so a constant descriptor contributes nothing.
  const auto c = FusionForward(e, std::vector<double>(4, 0.25), p);
  const auto g = FusionForward(e, d1, gated);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(c[i], g[i], 1e-12);
  EXPECT_THROW(FusionForward(e, std::vector<double>{1, 2}, p), DataError);
}

TEST(Fusion, ArgmaxInvariantToPositiveScaling) {
  Rng rng(9);
  for (int c = 0; c < 50; ++c) {
    auto [p, batch] = testing::RandomHeadInstance(100 + c);
    const int before = PredictClass(batch[0], p);
    const double k = rng.Uniform(0.1, 10);
    for (double& w : p.weights) w *= k;
    for (double& b : p.bias) b *= k;
    EXPECT_EQ(PredictClass(batch[0], p), before);
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(CrossEntropy(std::vector<double>(5, 0.2), 3), std::log(5.0), 1e-12);
  EXPECT_EQ(CrossEntropy(std::vector<double>{0, 1, 0}, 1), 0.0);
  EXPECT_NEAR(CrossEntropy(std::vector<double>{1, 0}, 1), 27.631021115928547, 1e-9);
  EXPECT_THROW(CrossEntropy(std::vector<double>{1, 0}, 2), DataError);
}

TEST(Gradients, MatchCentralDifferences) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto [p, batch] = testing::RandomHeadInstance(seed);
    const auto r = testing::CheckGradients(p, batch);
    EXPECT_LE(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst;
  }
}

TEST(Gradients, AlphaGradientVanishesWithZeroDescriptorWeights) {
  auto [p, batch] = testing::RandomHeadInstance(5);
  for (int k = 0; k < p.num_classes(); ++k)
    for (int j = p.embed_dim; j < p.input_dim(); ++j) p.weights[k * p.input_dim() + j] = 0.0;
  HeadGradients g;
  BatchLoss(batch, p, &g);
  EXPECT_EQ(g.alpha, 0.0);
}

TEST(Gradients, BiasGradientSumsToZeroPerSample) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto [p, batch] = testing::RandomHeadInstance(seed);
    batch.resize(1);
    HeadGradients g;
    BatchLoss(batch, p, &g);
    EXPECT_NEAR(std::accumulate(g.bias.begin(), g.bias.end(), 0.0), 0.0, 1e-12);
  }
}

TEST(AdamW, FirstStepMatchesHandComputation) {
  // After one step with bias correction, the update is lr * g / (|g| + eps').
  std::vector<double> params = {1.0, -2.0};
  const std::vector<double> grads = {0.5, -0.25};
  AdamW opt(2, AdamWConfig{}, {1, 0});
  opt.Step(params, grads, 0.1);
  const double p0 = 1.0 * (1 - 0.1 * 0.01) - 0.1 * 0.5 / (0.5 + 1e-8);
  const double p1 = -2.0 + 0.1 * 0.25 / (0.25 + 1e-8);
  EXPECT_NEAR(params[0], p0, 1e-12);
  EXPECT_NEAR(params[1], p1, 1e-12);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(CosineLr, Endpoints) {
  EXPECT_DOUBLE_EQ(CosineLr(0, 100, 1e-3, 1e-5), 1e-3);
  EXPECT_DOUBLE_EQ(CosineLr(100, 100, 1e-3, 1e-5), 1e-5);
  EXPECT_NEAR(CosineLr(50, 100, 1e-3, 1e-5), (1e-3 + 1e-5) / 2, 1e-15);
}

std::vector<Sample> SeparableToy(uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.clip_id = "t" + std::to_string(i);
    s.label = i % 2;
    for (int j = 0; j < 8; ++j) s.descriptor.push_back(rng.Uniform(0, 0.3));
    s.descriptor[s.label == 0 ? 1 : 6] += 1.0;
    for (int j = 0; j < 4; ++j) s.embedding.push_back(rng.Normal());
    out.push_back(std::move(s));
  }
  return out;
}

TEST(Train, SeparableToyReachesFullTrainAccuracy) {
  const auto train = SeparableToy(1, 512), val = SeparableToy(2, 64);
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.early_stop_patience = 12;
  const auto r = Train(HeadKind::kDgmeOnly, train, val, {"x", "y"}, cfg);
  ASSERT_EQ(r.log.size(), 12u);
  EXPECT_LT(r.log.back().train_loss, r.log.front().train_loss);
  int correct = 0;
  for (auto s : train) {
    s.embedding.clear();
    correct += PredictClass(s, r.params) == s.label;
  }
  EXPECT_EQ(correct, 512);
  EXPECT_NE(r.params.alpha, 1.0);
  EXPECT_EQ(r.params.embed_dim, 0);
}

TEST(Train, DeterministicGivenSeed) {
  const auto train = SeparableToy(4, 40), val = SeparableToy(5, 20);
  TrainConfig cfg;
  cfg.seed = 9;
  cfg.batch_size = 8;
  const auto a = Train(HeadKind::kFusion, train, val, {"x", "y"}, cfg);
  const auto b = Train(HeadKind::kFusion, train, val, {"x", "y"}, cfg);
  EXPECT_EQ(FlattenParams(a.params), FlattenParams(b.params));
  ASSERT_EQ(a.log.size(), b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
  cfg.seed = 10;
  const auto c = Train(HeadKind::kFusion, train, val, {"x", "y"}, cfg);
  EXPECT_NE(FlattenParams(a.params), FlattenParams(c.params));
}

TEST(Train, Errors) {
  const auto toy = SeparableToy(1, 4);
  EXPECT_THROW(Train(HeadKind::kDgmeOnly, {}, toy, {"x", "y"}, {}), DataError);
  TrainConfig bad;
  bad.epochs = 0;
  EXPECT_THROW(Train(HeadKind::kDgmeOnly, toy, toy, {"x", "y"}, bad), UsageError);
  auto ragged = toy;
  ragged[1].descriptor.pop_back();
  EXPECT_THROW(Train(HeadKind::kDgmeOnly, ragged, toy, {"x", "y"}, {}), DataError);
}

TEST(StubEmbedding, BlackClipProjectsBinZero) {
  FrameSequence black;
  black.frames = {GrayImage(12, 12, 0), GrayImage(12, 12, 0)};
  const auto raw = StubEmbedding::RawFeatures(black);
  ASSERT_EQ(raw.size(), 41u);
  EXPECT_DOUBLE_EQ(raw[0], 1.0);
  for (size_t i = 1; i < raw.size(); ++i) EXPECT_EQ(raw[i], 0.0);
  const StubEmbedding stub(4, 64);
  const auto e = stub.Embed(black);
  ASSERT_EQ(e.size(), 64u);
  for (int r = 0; r < 64; ++r) EXPECT_DOUBLE_EQ(e[r], stub.projection()[r * 41]);
}

TEST(StubEmbedding, PureAndSeeded) {
  Rng rng(6);
  const FrameSequence clip = testing::RandomSequence(rng, 30, 24, 3);
  EXPECT_EQ(StubEmbedding(1).Embed(clip), StubEmbedding(1).Embed(clip));
  EXPECT_EQ(StubEmbedding(1).projection(), StubEmbedding(1).projection());
  EXPECT_NE(StubEmbedding(1).projection(), StubEmbedding(2).projection());
}

TEST(ModelJson, RoundTripIsExact) {
  TempDir dir("model");
  auto [p, batch] = testing::RandomHeadInstance(12);
  p.alpha = 1.0 / 3.0;
  ModelFile m;
  m.kind = HeadKind::kFusion;
  m.params = p;
  m.meta = {{"seed", "4"}, {"config_hash", "abc"}};
  WriteModelJson(m, dir / "m.json");
  const ModelFile back = ReadModelJson(dir / "m.json");
  EXPECT_EQ(back.kind, HeadKind::kFusion);
  EXPECT_EQ(FlattenParams(back.params), FlattenParams(p));
  EXPECT_EQ(back.params.class_names, p.class_names);
  EXPECT_EQ(back.meta, m.meta);
  WriteModelJson(back, dir / "n.json");
  EXPECT_EQ(testing::ReadFile(dir / "m.json"), testing::ReadFile(dir / "n.json"));
}

}  // namespace
}  // namespace camflow
