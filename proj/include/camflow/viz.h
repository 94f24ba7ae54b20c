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

#ifndef CAMFLOW_VIZ_H_
#define CAMFLOW_VIZ_H_

#include <map>
#include <string>
#include <vector>

#include "camflow/dgme.h"

namespace camflow {

// Directional mass per bin, summed over every cell of every descriptor.
std::vector<double> RoseMass(const std::vector<std::vector<double>>& descriptors,
                             const DgmeConfig& cfg);

// Rose diagram: one wedge per directional bin, radius proportional to its
// summed mass. Angles follow image coordinates (0 deg right, 90 deg down).
std::string RoseSvg(const std::vector<std::vector<double>>& descriptors, const DgmeConfig& cfg,
                    const std::map<std::string, std::string>& meta = {});

struct CellGlyph {
  double directional_mass = 0.0;
  double static_mass = 0.0;
  bool has_arrow = false;
  double angle_deg = 0.0;  // circular mean of the directional bins
};

// Per-cell summary used by the grid map. No arrow when the static bin
// holds at least as much mass as all directional bins together.
std::vector<CellGlyph> GridGlyphs(const std::vector<double>& descriptor, const DgmeConfig& cfg);

// grid x grid map: fill luminance scales with directional mass (cells with
// none stay unfilled), one arrow per moving cell.
std::string GridSvg(const std::vector<double>& descriptor, const DgmeConfig& cfg,
                    const std::map<std::string, std::string>& meta = {});

}  // namespace camflow

#endif  // CAMFLOW_VIZ_H_
