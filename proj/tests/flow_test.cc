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

#include "camflow/flow.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "camflow/common.h"
#include "test_util.h"

namespace camflow {
namespace {

using testing::TempDir;
using testing::TextureImage;
using testing::WrapShift;

double MedianInteriorEpe(const FlowField& f, double tu, double tv, int margin) {
  std::vector<double> e;
  for (int y = margin; y < f.height - margin; ++y)
    for (int x = margin; x < f.width - margin; ++x)
      e.push_back(std::hypot(f.u[f.index(x, y)] - tu, f.v[f.index(x, y)] - tv));
  std::nth_element(e.begin(), e.begin() + e.size() / 2, e.end());
  return e[e.size() / 2];
}

TEST(CartToPolar, SpecExamples) {
  FlowField f(3, 1);
  f.u = {1.f, 3.f, 0.f};
  f.v = {0.f, 4.f, 0.f};
  const PolarFlow p = CartToPolar(f);
  EXPECT_DOUBLE_EQ(p.magnitude[0], 1.0);
  EXPECT_DOUBLE_EQ(p.angle_deg[0], 0.0);
  EXPECT_NEAR(p.magnitude[1], 5.0, 1e-12);
  EXPECT_NEAR(p.angle_deg[1], 53.130102354, 1e-6);
  EXPECT_EQ(p.magnitude[2], 0.0);
  EXPECT_EQ(p.angle_deg[2], 0.0);
}

TEST(CartToPolar, RoundTripAndRotationCovariance) {
  Rng rng(21);
  for (int c = 0; c < 100; ++c) {
    FlowField f(8, 8);
    for (size_t i = 0; i < f.u.size(); ++i) {
      f.u[i] = static_cast<float>(rng.Uniform(-5, 5));
      f.v[i] = static_cast<float>(rng.Uniform(-5, 5));
    }
    const double phi = rng.Uniform(0, 360);
    FlowField r = f;
    const double cr = std::cos(phi * M_PI / 180), sr = std::sin(phi * M_PI / 180);
    for (size_t i = 0; i < f.u.size(); ++i) {
      r.u[i] = static_cast<float>(f.u[i] * cr - f.v[i] * sr);
      r.v[i] = static_cast<float>(f.u[i] * sr + f.v[i] * cr);
    }
    const PolarFlow p = CartToPolar(f), q = CartToPolar(r);
    for (size_t i = 0; i < f.u.size(); ++i) {
      ASSERT_GE(p.angle_deg[i], 0.0);
      ASSERT_LT(p.angle_deg[i], 360.0);
      const double m = p.magnitude[i];
      if (m > 0) {
        const double a = p.angle_deg[i] * M_PI / 180;
        ASSERT_NEAR(m * std::cos(a), f.u[i], 1e-6 * std::max(1.0, m));
        ASSERT_NEAR(m * std::sin(a), f.v[i], 1e-6 * std::max(1.0, m));
      }
      // float storage of the rotated field limits agreement to ~1e-5 relative
      ASSERT_NEAR(q.magnitude[i], m, 1e-5 * std::max(1.0, m));
      double d = std::fmod(q.angle_deg[i] - p.angle_deg[i] - phi + 720.0, 360.0);
      d = std::min(d, 360.0 - d);
      if (m > 0.05) ASSERT_LT(d, 1e-3);
    }
  }
}

TEST(BlockMatch, IntegerShiftInsideRadius) {
  const GrayImage a = TextureImage(64, 3);
  const GrayImage b = WrapShift(a, 3, -1);
  const FlowField f = BlockMatchFlow(a, b, 8, 4);
  for (int y = 8; y < 56; ++y)
    for (int x = 8; x < 56; ++x) {
      ASSERT_EQ(f.u[f.index(x, y)], 3.f);
      ASSERT_EQ(f.v[f.index(x, y)], -1.f);
    }
}

TEST(BlockMatch, IdenticalFramesGiveZero) {
  GrayImage flat(32, 32, 100);
  const FlowField f = BlockMatchFlow(flat, flat, 8, 3);
  for (size_t i = 0; i < f.u.size(); ++i) {
    ASSERT_EQ(f.u[i], 0.f);
    ASSERT_EQ(f.v[i], 0.f);
  }
}

TEST(BlockMatch, LargeShiftIsDeterministic) {
  const GrayImage a = TextureImage(48, 4);
  const GrayImage b = WrapShift(a, 9, 0);
  EXPECT_EQ(BlockMatchFlow(a, b, 8, 2), BlockMatchFlow(a, b, 8, 2));
}

TEST(BlockMatch, Errors) {
  GrayImage a(16, 16), b(16, 8);
  EXPECT_THROW(BlockMatchFlow(a, b, 4, 2), DataError);
  EXPECT_THROW(BlockMatchFlow(a, a, 0, 2), UsageError);
}

TEST(Farneback, IdenticalFramesNearZero) {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const GrayImage a = TextureImage(96, seed);
    const FlowField f = FarnebackFlow(a, a);
    double mx = 0;
    for (size_t i = 0; i < f.u.size(); ++i) mx = std::max(mx, double(std::hypot(f.u[i], f.v[i])));
    EXPECT_LT(mx, 0.05);
  }
}

TEST(Farneback, FlatFramesGiveZero) {
  GrayImage a(40, 40, 90), b(40, 40, 130);
  const FlowField f = FarnebackFlow(a, b);
  for (size_t i = 0; i < f.u.size(); ++i) {
    ASSERT_LT(std::fabs(f.u[i]), 1e-12);
    ASSERT_LT(std::fabs(f.v[i]), 1e-12);
  }
}

TEST(Farneback, TwoPixelShift) {
  const GrayImage a = TextureImage(128, 42);
  const FlowField f = FarnebackFlow(a, WrapShift(a, 2, 0));
  EXPECT_LT(MedianInteriorEpe(f, 2, 0, 16), 0.3);
}

TEST(Farneback, AgreesWithBlockMatchOracle) {
  for (uint64_t seed = 0; seed < 4; ++seed) {
    const GrayImage a = TextureImage(96, 100 + seed);
    const int dx = static_cast<int>(seed % 3) - 1, dy = 2 - static_cast<int>(seed);
    const GrayImage b = WrapShift(a, dx, dy);
    const FlowField fb = FarnebackFlow(a, b), bm = BlockMatchFlow(a, b, 8, 4);
    std::vector<double> e;
    for (int y = 16; y < 80; ++y)
      for (int x = 16; x < 80; ++x) {
        const size_t i = fb.index(x, y);
        e.push_back(std::hypot(fb.u[i] - bm.u[i], fb.v[i] - bm.v[i]));
      }
    std::nth_element(e.begin(), e.begin() + e.size() / 2, e.end());
    EXPECT_LT(e[e.size() / 2], 0.5) << "seed " << seed;
  }
}

TEST(Farneback, DeterministicAndValidated) {
  const GrayImage a = TextureImage(64, 1), b = WrapShift(a, 1, 1);
  EXPECT_EQ(FarnebackFlow(a, b), FarnebackFlow(a, b));
  EXPECT_THROW(FarnebackFlow(a, GrayImage(32, 64)), DataError);
  EXPECT_THROW(FarnebackFlow(GrayImage(4, 4), GrayImage(4, 4)), DataError);
  FarnebackConfig bad;
  bad.window_size = 4;
  EXPECT_THROW(bad.Validate(), UsageError);
  bad = {};
  bad.pyramid_scale = 1.0;
  EXPECT_THROW(bad.Validate(), UsageError);
}

TEST(FlowDump, RoundTripAndHeader) {
  TempDir dir("flo");
  FlowField f(3, 2);
  for (size_t i = 0; i < f.u.size(); ++i) {
    f.u[i] = 0.5f * i;
    f.v[i] = -1.25f * i;
  }
  WriteFlowDump(f, dir / "f.flo");
  const std::string bytes = testing::ReadFile(dir / "f.flo");
  EXPECT_EQ(bytes.size(), 16u + 2 * 6 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "FLO1");
  EXPECT_EQ(ReadFlowDump(dir / "f.flo"), f);
}

}  // namespace
}  // namespace camflow
