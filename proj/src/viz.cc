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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "camflow/common.h"

namespace camflow {
namespace {

std::string F3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  // Avoid "-0.000" so output does not depend on rounding direction.
  if (std::string(buf) == "-0.000") return "0.000";
  return buf;
}

std::string MetaComment(const std::map<std::string, std::string>& meta) {
  std::string s = "<!-- camflow";
  for (const auto& [k, v] : meta) s += " " + k + "=" + v;
  return s + " -->\n";
}

void CheckLength(const std::vector<double>& d, const DgmeConfig& cfg) {
  if (d.size() != static_cast<size_t>(cfg.length())) {
    throw DataError("descriptor length " + std::to_string(d.size()) + " does not match grid " +
                    std::to_string(cfg.grid) + " x bins " + std::to_string(cfg.directional_bins));
  }
}

}  // namespace

std::vector<double> RoseMass(const std::vector<std::vector<double>>& descriptors,
                             const DgmeConfig& cfg) {
  if (descriptors.empty()) throw DataError("no descriptors selected");
  const int k = cfg.directional_bins;
  std::vector<double> mass(k, 0.0);
  for (const auto& d : descriptors) {
    CheckLength(d, cfg);
    for (int c = 0; c < cfg.grid * cfg.grid; ++c)
      for (int b = 0; b < k; ++b) mass[b] += d[static_cast<size_t>(c) * cfg.bins_per_cell() + b];
  }
  return mass;
}

std::string RoseSvg(const std::vector<std::vector<double>>& descriptors, const DgmeConfig& cfg,
                    const std::map<std::string, std::string>& meta) {
  const auto mass = RoseMass(descriptors, cfg);
  const double peak = *std::max_element(mass.begin(), mass.end());
  constexpr double kCenter = 110.0, kRadius = 100.0;
  const double width = 360.0 / cfg.directional_bins;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"220\" height=\"220\" "
        "viewBox=\"0 0 220 220\">\n";
  os << MetaComment(meta);
  os << "<circle cx=\"110\" cy=\"110\" r=\"100\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  for (int b = 0; b < cfg.directional_bins; ++b) {
    const double r = peak > 0.0 ? kRadius * mass[b] / peak : 0.0;
    if (r <= 0.0) continue;
    const double a0 = b * width * M_PI / 180.0, a1 = (b + 1) * width * M_PI / 180.0;
    os << "<path class=\"wedge\" data-bin=\"" << b << "\" d=\"M " << F3(kCenter) << " "
       << F3(kCenter) << " L " << F3(kCenter + r * std::cos(a0)) << " "
       << F3(kCenter + r * std::sin(a0)) << " A " << F3(r) << " " << F3(r) << " 0 0 1 "
       << F3(kCenter + r * std::cos(a1)) << " " << F3(kCenter + r * std::sin(a1))
       << " Z\" fill=\"#3b6ea5\" fill-opacity=\"0.8\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<CellGlyph> GridGlyphs(const std::vector<double>& descriptor, const DgmeConfig& cfg) {
  CheckLength(descriptor, cfg);
  const int k = cfg.directional_bins;
  const double width = 360.0 / k;
  std::vector<CellGlyph> glyphs(static_cast<size_t>(cfg.grid) * cfg.grid);
  for (size_t c = 0; c < glyphs.size(); ++c) {
    const double* h = &descriptor[c * cfg.bins_per_cell()];
    CellGlyph& g = glyphs[c];
    double sx = 0.0, sy = 0.0;
    for (int b = 0; b < k; ++b) {
      g.directional_mass += h[b];
      const double center = (b + 0.5) * width * M_PI / 180.0;
      sx += h[b] * std::cos(center);
      sy += h[b] * std::sin(center);
    }
    g.static_mass = h[k];
    g.has_arrow = g.directional_mass > g.static_mass && (sx != 0.0 || sy != 0.0);
    if (g.has_arrow) {
      double a = std::atan2(sy, sx) * 180.0 / M_PI;
      if (a < 0) a += 360.0;
      g.angle_deg = a;
    }
  }
  return glyphs;
}

std::string GridSvg(const std::vector<double>& descriptor, const DgmeConfig& cfg,
                    const std::map<std::string, std::string>& meta) {
  const auto glyphs = GridGlyphs(descriptor, cfg);
  double peak = 0.0;
  for (const auto& g : glyphs) peak = std::max(peak, g.directional_mass);
  constexpr double kCell = 80.0;
  const double size = kCell * cfg.grid;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << F3(size) << "\" height=\""
     << F3(size) << "\" viewBox=\"0 0 " << F3(size) << " " << F3(size) << "\">\n";
  os << MetaComment(meta);
  for (int r = 0; r < cfg.grid; ++r) {
    for (int c = 0; c < cfg.grid; ++c) {
      const CellGlyph& g = glyphs[static_cast<size_t>(r) * cfg.grid + c];
      const double x = c * kCell, y = r * kCell;
      os << "<rect class=\"cell\" x=\"" << F3(x) << "\" y=\"" << F3(y) << "\" width=\""
         << F3(kCell) << "\" height=\"" << F3(kCell) << "\" stroke=\"#444444\"";
      if (peak > 0.0 && g.directional_mass > 0.0) {
        // Brighter cells carry more motion.
        const int level = static_cast<int>(std::lround(255.0 * g.directional_mass / peak));
        char color[8];
        std::snprintf(color, sizeof(color), "#%02x%02x%02x", level, level / 2, 0);
        os << " fill=\"" << color << "\"";
      } else {
        os << " fill=\"none\"";
      }
      os << "/>\n";
      if (g.has_arrow) {
        const double cx = x + kCell / 2, cy = y + kCell / 2, len = kCell * 0.35;
        const double a = g.angle_deg * M_PI / 180.0;
        const double ex = cx + len * std::cos(a), ey = cy + len * std::sin(a);
        const double h1 = a + M_PI * 0.85, h2 = a - M_PI * 0.85;
        os << "<path class=\"arrow\" d=\"M " << F3(cx - len * std::cos(a)) << " "
           << F3(cy - len * std::sin(a)) << " L " << F3(ex) << " " << F3(ey) << " M "
           << F3(ex + 10 * std::cos(h1)) << " " << F3(ey + 10 * std::sin(h1)) << " L "
           << F3(ex) << " " << F3(ey) << " L " << F3(ex + 10 * std::cos(h2)) << " "
           << F3(ey + 10 * std::sin(h2)) << "\" stroke=\"#ffffff\" stroke-width=\"3\" "
           << "fill=\"none\"/>\n";
      }
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace camflow
