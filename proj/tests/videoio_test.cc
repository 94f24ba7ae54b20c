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

#include "camflow/videoio.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "camflow/common.h"
#include "test_util.h"

namespace camflow {
namespace {

using testing::RandomSequence;
using testing::TempDir;

// Straightforward bilinear reference: half-pixel centers, clamped taps.
uint8_t RefBilinear(const GrayImage& src, int w, int h, int x, int y) {
  const double sx = (x + 0.5) * src.width / w - 0.5;
  const double sy = (y + 0.5) * src.height / h - 0.5;
  const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  auto px = [&](int xx, int yy) {
    xx = std::clamp(xx, 0, src.width - 1);
    yy = std::clamp(yy, 0, src.height - 1);
    return static_cast<double>(src.at(xx, yy));
  };
  const double v = (1 - fy) * ((1 - fx) * px(x0, y0) + fx * px(x0 + 1, y0)) +
                   fy * ((1 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1));
  return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

TEST(Y8Seq, AllZeroTwoByTwoLayout) {
  FrameSequence seq;
  seq.frames = {GrayImage(2, 2), GrayImage(2, 2)};
  const auto bytes = EncodeY8Seq(seq);
  ASSERT_EQ(bytes.size(), 24u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "Y8SQ");
  const uint8_t header[12] = {2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0};
  EXPECT_TRUE(std::equal(header, header + 12, bytes.begin() + 4));
  EXPECT_TRUE(std::all_of(bytes.begin() + 16, bytes.end(), [](uint8_t b) { return b == 0; }));
}

TEST(Y8Seq, RoundTripProperty) {
  Rng rng(11);
  TempDir dir("y8");
  for (int i = 0; i < 100; ++i) {
    const int w = 1 + static_cast<int>(rng.Below(17));
    const int h = 1 + static_cast<int>(rng.Below(17));
    const int n = 2 + static_cast<int>(rng.Below(5));
    FrameSequence seq = RandomSequence(rng, w, h, n);
    seq.clip_id = "";
    const auto bytes = EncodeY8Seq(seq);
    FrameSequence back = DecodeY8Seq(bytes, "mem");
    back.clip_id = "";
    ASSERT_EQ(back, seq) << "case " << i;
    if (i % 10 == 0) {
      WriteY8Seq(seq, dir / "c.y8seq");
      FrameSequence disk = ReadY8Seq(dir / "c.y8seq");
      disk.clip_id = "";
      ASSERT_EQ(disk, seq);
    }
  }
}

TEST(Y8Seq, TruncatedFileNamesByteCounts) {
  FrameSequence seq;
  seq.frames = {GrayImage(2, 2, 7), GrayImage(2, 2, 9)};
  auto bytes = EncodeY8Seq(seq);
  bytes.resize(bytes.size() - 3);
  try {
    DecodeY8Seq(bytes, "clip");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 24 bytes, got 21"), std::string::npos) << e.what();
  }
  bytes.resize(10);
  EXPECT_THROW(DecodeY8Seq(bytes, "clip"), DataError);
}

TEST(Netpbm, PgmRoundTripAndPpmConversion) {
  TempDir dir("pbm");
  GrayImage img(3, 2);
  for (size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<uint8_t>(40 * i);
  WritePgm(img, dir / "a.pgm");
  EXPECT_EQ(ReadNetpbm(dir / "a.pgm"), img);

  // One pure-red, one pure-green, one white pixel.
  std::string ppm = "P6\n3 1\n255\n";
  ppm += std::string("\xff\x00\x00\x00\xff\x00\xff\xff\xff", 9);
  testing::WriteFile(dir / "b.ppm", ppm);
  const GrayImage g = ReadNetpbm(dir / "b.ppm");
  EXPECT_EQ(g.at(0, 0), 76);   // round(0.299 * 255)
  EXPECT_EQ(g.at(1, 0), 150);  // round(0.587 * 255)
  EXPECT_EQ(g.at(2, 0), 255);
}

TEST(Netpbm, DirectoryIsSortedByName) {
  TempDir dir("frames");
  for (int i : {2, 0, 1}) WritePgm(GrayImage(4, 4, static_cast<uint8_t>(i * 10)), dir / ("f" + std::to_string(i) + ".pgm"));
  const FrameSequence seq = ReadFrameDirectory(dir.path());
  ASSERT_EQ(seq.frame_count(), 3);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(seq.frames[i].at(0, 0), i * 10);
}

TEST(Sampling, StrideFromFrameZero) {
  FrameSequence src;
  for (int i = 0; i < 70; ++i) src.frames.push_back(GrayImage(2, 2, static_cast<uint8_t>(i)));
  const FrameSequence s = SampleFrames(src, SamplingSpec{});
  ASSERT_EQ(s.frame_count(), 12);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(s.frames[i].at(0, 0), 6 * i);
}

TEST(Sampling, InsufficientFrames) {
  FrameSequence src;
  for (int i = 0; i < 10; ++i) src.frames.push_back(GrayImage(2, 2));
  try {
    SampleFrames(src, SamplingSpec{});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("need 67, have 10"), std::string::npos) << e.what();
  }
}

TEST(Sampling, InvalidSpec) {
  SamplingSpec s;
  s.frames_per_clip = 1;
  EXPECT_THROW(s.Validate(), UsageError);
  s = {};
  s.frame_interval = 0;
  EXPECT_THROW(s.Validate(), UsageError);
}

TEST(Resize, MatchesReferenceBilinear) {
  Rng rng(5);
  for (int c = 0; c < 20; ++c) {
    GrayImage src = RandomSequence(rng, 5 + static_cast<int>(rng.Below(30)),
                                   5 + static_cast<int>(rng.Below(30)), 1).frames[0];
    const int w = 3 + static_cast<int>(rng.Below(40)), h = 3 + static_cast<int>(rng.Below(40));
    const GrayImage out = ResizeBilinear(src, w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) ASSERT_NEAR(out.at(x, y), RefBilinear(src, w, h, x, y), 1);
  }
}

TEST(Resize, SameSizeIsIdentity) {
  Rng rng(6);
  const GrayImage img = RandomSequence(rng, 13, 9, 1).frames[0];
  EXPECT_EQ(ResizeBilinear(img, 13, 9), img);
}

TEST(Preprocess, EvalCenterCropIsExact) {
  Rng rng(8);
  FrameSequence seq = RandomSequence(rng, 320, 240, 2);
  const FrameSequence out = PreprocessEval(seq, 224, 224);
  // Shorter side 240 -> 224; width 320 -> round(320 * 224 / 240).
  int rw, rh;
  CoverSize(320, 240, 224, 224, 1.0, &rw, &rh);
  ASSERT_EQ(rh, 224);
  const GrayImage resized = ResizeBilinear(seq.frames[1], rw, rh);
  const int ox = (rw - 224) / 2, oy = (rh - 224) / 2;
  for (int y = 0; y < 224; y += 7)
    for (int x = 0; x < 224; x += 5) ASSERT_EQ(out.frames[1].at(x, y), resized.at(x + ox, y + oy));
}

TEST(Preprocess, ZeroJitterUnitScaleEqualsEval) {
  Rng rng(9);
  FrameSequence seq = RandomSequence(rng, 150, 100, 3);
  seq.clip_id = "a/b.y8seq";
  AugmentSpec aug;
  aug.enabled = true;
  aug.scale_low = aug.scale_high = 1.0;
  aug.brightness_jitter = aug.contrast_jitter = 0.0;
  aug.rng_seed = 77;
  EXPECT_EQ(PreprocessTrain(seq, 64, 64, aug), PreprocessEval(seq, 64, 64));
}

TEST(Preprocess, TrainJitterFollowsSeededTrace) {
  // Unit scale, so only the intensity transform varies; recompute it from the
  // documented draw order.
  Rng rng(10);
  FrameSequence seq = RandomSequence(rng, 64, 64, 2);
  seq.clip_id = "clip_7";
  AugmentSpec aug;
  aug.enabled = true;
  aug.scale_low = aug.scale_high = 1.0;
  aug.brightness_jitter = 0.2;
  aug.contrast_jitter = 0.1;
  aug.rng_seed = 3;
  Rng trace(DeriveSeed(3, "clip_7"));
  trace.Uniform(1.0, 1.0);
  trace.Uniform();
  trace.Uniform();
  const double c = 1.0 + 0.1 * (2.0 * trace.Uniform() - 1.0);
  const double b = 255.0 * 0.2 * (2.0 * trace.Uniform() - 1.0);
  const FrameSequence out = PreprocessTrain(seq, 64, 64, aug);
  for (int f = 0; f < 2; ++f) {
    for (size_t i = 0; i < out.frames[f].pixels.size(); ++i) {
      const double p = seq.frames[f].pixels[i];
      const long want = std::clamp(std::lround((p - 128.0) * c + 128.0 + b), 0L, 255L);
      ASSERT_EQ(out.frames[f].pixels[i], want);
    }
  }
  EXPECT_EQ(PreprocessTrain(seq, 64, 64, aug), out);
}

TEST(Preprocess, TrainCropKeepsShapeAndDependsOnClipId) {
  Rng rng(12);
  FrameSequence seq = RandomSequence(rng, 96, 80, 2);
  AugmentSpec aug;
  aug.enabled = true;
  aug.scale_low = 0.5;
  aug.scale_high = 0.9;
  seq.clip_id = "x";
  const auto a = PreprocessTrain(seq, 48, 48, aug);
  seq.clip_id = "y";
  const auto b = PreprocessTrain(seq, 48, 48, aug);
  EXPECT_EQ(a.width(), 48);
  EXPECT_EQ(a.height(), 48);
  EXPECT_NE(a.frames, b.frames);
}

TEST(LoadClip, ReadsSamplesAndCrops) {
  TempDir dir("load");
  Rng rng(13);
  FrameSequence src = RandomSequence(rng, 40, 30, 67);
  WriteY8Seq(src, dir / "c.y8seq");
  SamplingSpec spec;
  spec.target_width = spec.target_height = 24;
  const FrameSequence a = LoadClip(dir / "c.y8seq", spec);
  EXPECT_EQ(a.frame_count(), 12);
  EXPECT_EQ(a.width(), 24);
  EXPECT_EQ(LoadClip(dir / "c.y8seq", spec), a);
  EXPECT_THROW(LoadClip(dir / "missing.y8seq", spec), DataError);
}

}  // namespace
}  // namespace camflow
