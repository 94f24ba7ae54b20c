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

#ifndef CAMFLOW_FLOW_H_
#define CAMFLOW_FLOW_H_

#include <filesystem>
#include <string>
#include <vector>

#include "camflow/videoio.h"

namespace camflow {

// Dense displacement field. u is positive rightward and v positive downward
// (image coordinates): prev(x, y) ~ next(x + u, y + v).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h), u(static_cast<size_t>(w) * h, 0.f),
        v(static_cast<size_t>(w) * h, 0.f) {}

  size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  bool operator==(const FlowField&) const = default;
};

// Magnitude and angle in degrees within [0, 360). Angle is 0 where m == 0.
struct PolarFlow {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
  std::vector<double> angle_deg;

  size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

struct FarnebackConfig {
  int pyramid_levels = 3;
  double pyramid_scale = 0.5;
  int window_size = 15;  // Gaussian averaging window for the displacement solve
  int iterations = 3;
  int poly_n = 5;        // polynomial expansion neighborhood (full width)
  double poly_sigma = 1.1;

  void Validate() const;
  // Canonical text used for config hashing.
  std::string Canonical() const;
};

// Coarse-to-fine Farneback estimate. 64-bit arithmetic internally.
FlowField FarnebackFlow(const GrayImage& prev, const GrayImage& next,
                        const FarnebackConfig& cfg = {});

// Exhaustive SAD block matching over integer displacements in
// [-search_radius, search_radius]^2. Ties go to the smallest |d|, then the
// lexicographically smallest (dy, dx). Each block's vector fills its pixels.
FlowField BlockMatchFlow(const GrayImage& prev, const GrayImage& next, int block,
                         int search_radius);

PolarFlow CartToPolar(const FlowField& field);

// Debug dump: "FLO1", width, height, plane count (2) as u32 LE, then the u
// plane and the v plane as f32 LE.
void WriteFlowDump(const FlowField& field, const std::filesystem::path& path);
FlowField ReadFlowDump(const std::filesystem::path& path);

}  // namespace camflow

#endif  // CAMFLOW_FLOW_H_
