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

#include "camflow/viz.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "camflow/synth.h"
#include "oracles.h"

namespace camflow {
namespace {

size_t Occurrences(const std::string& s, const std::string& needle) {
  size_t n = 0;
  for (size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

std::vector<double> PanRightDescriptor() {
  SynthSpec s;
  s.motion = MotionClass::kPan;
  s.magnitude = 2.0;
  s.texture_seed = 12;
  return ComputeDgme(MakeClip(s), DgmeConfig{}).values;
}

TEST(Rose, PanRightDominantWedgeAtZero) {
  const DgmeConfig cfg;
  const auto mass = RoseMass({PanRightDescriptor()}, cfg);
  ASSERT_EQ(mass.size(), 12u);
  // Rightward flow straddles the bin 0 / bin 11 boundary.
  const size_t top = std::max_element(mass.begin(), mass.end()) - mass.begin();
  EXPECT_TRUE(top == 0u || top == 11u);
  double rest = 0;
  for (size_t b = 1; b < 11; ++b) rest = std::max(rest, mass[b]);
  EXPECT_GT(mass[0] + mass[11], 4 * rest);
  const std::string svg = RoseSvg({PanRightDescriptor()}, cfg);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("data-bin=\"0\""), std::string::npos);
}

TEST(Rose, EmptySelectionRejected) {
  EXPECT_THROW(RoseSvg({}, DgmeConfig{}), DataError);
}

TEST(Grid, AllStaticIsUnfilledWithoutArrows) {
  const DgmeConfig cfg;
  std::vector<double> d(117, 0.0);
  for (int c = 0; c < 9; ++c) d[c * 13 + 12] = 1.0 / 3.0;
  const std::string svg = GridSvg(d, cfg);
  EXPECT_EQ(Occurrences(svg, "class=\"cell\""), 9u);
  EXPECT_EQ(Occurrences(svg, "fill=\"none\" />"), 0u);
  EXPECT_EQ(Occurrences(svg, "class=\"arrow\""), 0u);
  size_t unfilled = 0;
  for (size_t p = svg.find("class=\"cell\""); p != std::string::npos;
       p = svg.find("class=\"cell\"", p + 1)) {
    const size_t end = svg.find("/>", p);
    unfilled += svg.substr(p, end - p).find("fill=\"none\"") != std::string::npos;
  }
  EXPECT_EQ(unfilled, 9u);
}

TEST(Grid, PanRightArrowsPointRight) {
  const auto glyphs = GridGlyphs(PanRightDescriptor(), DgmeConfig{});
  ASSERT_EQ(glyphs.size(), 9u);
  for (const auto& g : glyphs) {
    ASSERT_TRUE(g.has_arrow);
    const double a = std::min(g.angle_deg, 360.0 - g.angle_deg);
    EXPECT_LT(a, 15.0);
  }
  EXPECT_THROW(GridGlyphs(std::vector<double>(10, 0.0), DgmeConfig{}), DataError);
}

TEST(Svg, DeterministicBytes) {
  const auto d = PanRightDescriptor();
  EXPECT_EQ(GridSvg(d, DgmeConfig{}, {{"seed", "1"}}), GridSvg(d, DgmeConfig{}, {{"seed", "1"}}));
  EXPECT_EQ(RoseSvg({d, d}, DgmeConfig{}), RoseSvg({d, d}, DgmeConfig{}));
}

}  // namespace
}  // namespace camflow
