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

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <Eigen/Dense>

#include "camflow/common.h"

namespace camflow {
namespace {

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> d;

  Plane() = default;
  Plane(int w_, int h_) : w(w_), h(h_), d(static_cast<size_t>(w_) * h_, 0.0) {}
  double& at(int x, int y) { return d[static_cast<size_t>(y) * w + x]; }
  double at(int x, int y) const { return d[static_cast<size_t>(y) * w + x]; }

  // Bilinear sample with coordinates clamped to the plane.
  double Sample(double x, double y) const {
    x = std::clamp(x, 0.0, w - 1.0);
    y = std::clamp(y, 0.0, h - 1.0);
    const int x0 = std::min(static_cast<int>(x), w - 1);
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    return (at(x0, y0) * (1 - fx) + at(x1, y0) * fx) * (1 - fy) +
           (at(x0, y1) * (1 - fx) + at(x1, y1) * fx) * fy;
  }
};

// Reflect-101 index into [0, n).
inline int Reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// Correlates rows with kernel kx (centered), reflective borders.
Plane FilterRows(const Plane& src, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  Plane dst(src.w, src.h);
  std::vector<double> row(src.w + 2 * r);
  for (int y = 0; y < src.h; ++y) {
    for (int i = -r; i < src.w + r; ++i) row[i + r] = src.at(Reflect(i, src.w), y);
    double* out = &dst.d[static_cast<size_t>(y) * src.w];
    for (int x = 0; x < src.w; ++x) {
      double s = 0.0;
      for (int j = 0; j <= 2 * r; ++j) s += k[j] * row[x + j];
      out[x] = s;
    }
  }
  return dst;
}

Plane FilterCols(const Plane& src, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  Plane dst(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    double* out = &dst.d[static_cast<size_t>(y) * src.w];
    for (int j = 0; j <= 2 * r; ++j) {
      const double* in = &src.d[static_cast<size_t>(Reflect(y + j - r, src.h)) * src.w];
      const double kj = k[j];
      for (int x = 0; x < src.w; ++x) out[x] += kj * in[x];
    }
  }
  return dst;
}

std::vector<double> GaussianKernel(int size, double sigma) {
  std::vector<double> k(size);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + r];
  }
  for (auto& v : k) v /= sum;
  return k;
}

Plane GaussianBlur(const Plane& src, int size, double sigma) {
  const auto k = GaussianKernel(size, sigma);
  return FilterCols(FilterRows(src, k), k);
}

Plane ToPlane(const GrayImage& img) {
  Plane p(img.width, img.height);
  for (size_t i = 0; i < img.pixels.size(); ++i) p.d[i] = img.pixels[i];
  return p;
}

Plane ResizePlane(const Plane& src, int w, int h) {
  Plane dst(w, h);
  const double sx = static_cast<double>(src.w) / w;
  const double sy = static_cast<double>(src.h) / h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      dst.at(x, y) = src.Sample((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
    }
  }
  return dst;
}

// Quadratic model f(x) ~ x^T A x + b^T x + c fitted per pixel.
struct PolyCoeffs {
  Plane bx, by;      // linear terms
  Plane axx, ayy;    // diagonal of A
  Plane axy;         // off-diagonal of A (half the xy coefficient)
};

// Gaussian-weighted least squares fit of {1, x, y, x^2, y^2, xy} over a
// poly_n x poly_n neighborhood, computed with separable correlations.
PolyCoeffs PolyExpand(const Plane& img, int poly_n, double sigma) {
  const int r = poly_n / 2;
  std::vector<double> g(poly_n), xg(poly_n), xxg(poly_n);
  for (int i = -r; i <= r; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    g[i + r] = w;
    xg[i + r] = i * w;
    xxg[i + r] = i * i * w;
  }

  // Normal matrix over basis {1, x, y, xx, yy, xy}.
  Eigen::Matrix<double, 6, 6> G = Eigen::Matrix<double, 6, 6>::Zero();
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double w = g[x + r] * g[y + r];
      const std::array<double, 6> b = {1.0, double(x), double(y), double(x * x),
                                       double(y * y), double(x * y)};
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) G(i, j) += w * b[i] * b[j];
    }
  }
  const Eigen::Matrix<double, 6, 6> Ginv = G.inverse();

  const Plane rg = FilterRows(img, g);
  const Plane rxg = FilterRows(img, xg);
  const Plane rxxg = FilterRows(img, xxg);
  const std::array<Plane, 6> moments = {
      FilterCols(rg, g),  FilterCols(rxg, g),  FilterCols(rg, xg),
      FilterCols(rxxg, g), FilterCols(rg, xxg), FilterCols(rxg, xg)};

  PolyCoeffs pc{Plane(img.w, img.h), Plane(img.w, img.h), Plane(img.w, img.h),
                Plane(img.w, img.h), Plane(img.w, img.h)};
  for (size_t i = 0; i < img.d.size(); ++i) {
    Eigen::Matrix<double, 6, 1> m;
    for (int k = 0; k < 6; ++k) m(k) = moments[k].d[i];
    const Eigen::Matrix<double, 6, 1> c = Ginv * m;
    pc.bx.d[i] = c(1);
    pc.by.d[i] = c(2);
    pc.axx.d[i] = c(3);
    pc.ayy.d[i] = c(4);
    pc.axy.d[i] = 0.5 * c(5);
  }
  return pc;
}

constexpr double kSolveRegularizer = 1e-3;

// One displacement-refinement pass. flow_u/flow_v are read and overwritten.
void RefineFlow(const PolyCoeffs& p1, const PolyCoeffs& p2, int window, Plane& flow_u,
                Plane& flow_v) {
  const int w = flow_u.w, h = flow_u.h;
  Plane g11(w, h), g12(w, h), g22(w, h), h1(w, h), h2(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const double du = flow_u.d[i], dv = flow_v.d[i];
      const double sx = x + du, sy = y + dv;
      const double a11 = 0.5 * (p1.axx.d[i] + p2.axx.Sample(sx, sy));
      const double a22 = 0.5 * (p1.ayy.d[i] + p2.ayy.Sample(sx, sy));
      const double a12 = 0.5 * (p1.axy.d[i] + p2.axy.Sample(sx, sy));
      const double db1 = -0.5 * (p2.bx.Sample(sx, sy) - p1.bx.d[i]) + a11 * du + a12 * dv;
      const double db2 = -0.5 * (p2.by.Sample(sx, sy) - p1.by.d[i]) + a12 * du + a22 * dv;
      g11.d[i] = a11 * a11 + a12 * a12;
      g12.d[i] = a11 * a12 + a12 * a22;
      g22.d[i] = a12 * a12 + a22 * a22;
      h1.d[i] = a11 * db1 + a12 * db2;
      h2.d[i] = a12 * db1 + a22 * db2;
    }
  }
  const double sigma = 0.3 * ((window - 1) * 0.5 - 1) + 0.8;
  g11 = GaussianBlur(g11, window, sigma);
  g12 = GaussianBlur(g12, window, sigma);
  g22 = GaussianBlur(g22, window, sigma);
  h1 = GaussianBlur(h1, window, sigma);
  h2 = GaussianBlur(h2, window, sigma);
  for (size_t i = 0; i < flow_u.d.size(); ++i) {
    const double a = g11.d[i] + kSolveRegularizer;
    const double c = g22.d[i] + kSolveRegularizer;
    const double b = g12.d[i];
    const double det = a * c - b * b;
    flow_u.d[i] = (c * h1.d[i] - b * h2.d[i]) / det;
    flow_v.d[i] = (a * h2.d[i] - b * h1.d[i]) / det;
  }
}

void PutU32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void PutF32(std::ostream& out, float f) { PutU32(out, std::bit_cast<uint32_t>(f)); }

uint32_t GetU32(const std::vector<uint8_t>& b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) |
         (static_cast<uint32_t>(b[off + 3]) << 24);
}

}  // namespace

void FarnebackConfig::Validate() const {
  if (pyramid_levels < 1) throw UsageError("pyramid_levels must be >= 1");
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0))
    throw UsageError("pyramid_scale must lie in (0, 1)");
  if (window_size < 3 || window_size % 2 == 0) throw UsageError("window_size must be odd >= 3");
  if (poly_n < 3 || poly_n % 2 == 0) throw UsageError("poly_n must be odd >= 3");
  if (iterations < 1) throw UsageError("iterations must be >= 1");
  if (!(poly_sigma > 0.0)) throw UsageError("poly_sigma must be positive");
}

std::string FarnebackConfig::Canonical() const {
  std::ostringstream os;
  os << "farneback(levels=" << pyramid_levels << ",scale=" << FormatG(pyramid_scale, 17)
     << ",win=" << window_size << ",iters=" << iterations << ",poly_n=" << poly_n
     << ",poly_sigma=" << FormatG(poly_sigma, 17) << ")";
  return os.str();
}

FlowField FarnebackFlow(const GrayImage& prev, const GrayImage& next,
                        const FarnebackConfig& cfg) {
  cfg.Validate();
  if (prev.width != next.width || prev.height != next.height) {
    throw DataError("frame size mismatch: " + std::to_string(prev.width) + "x" +
                    std::to_string(prev.height) + " vs " + std::to_string(next.width) + "x" +
                    std::to_string(next.height));
  }
  if (prev.width < cfg.poly_n || prev.height < cfg.poly_n) {
    throw DataError("frame smaller than polynomial support (" + std::to_string(cfg.poly_n) +
                    " px)");
  }

  const Plane p0 = ToPlane(prev);
  const Plane n0 = ToPlane(next);

  // Coarse levels stop once they would be smaller than a few kernel widths.
  const int min_side = std::max(2 * cfg.poly_n, 16);
  std::vector<std::pair<int, int>> sizes = {{prev.width, prev.height}};
  for (int level = 1; level < cfg.pyramid_levels; ++level) {
    const double s = std::pow(cfg.pyramid_scale, level);
    const int w = static_cast<int>(std::lround(prev.width * s));
    const int h = static_cast<int>(std::lround(prev.height * s));
    if (std::min(w, h) < min_side) break;
    sizes.emplace_back(w, h);
  }

  Plane flow_u, flow_v;
  for (int level = static_cast<int>(sizes.size()) - 1; level >= 0; --level) {
    const auto [w, h] = sizes[level];
    Plane a = p0, b = n0;
    if (level > 0) {
      const double s = std::pow(cfg.pyramid_scale, level);
      const double sigma = (1.0 / s - 1.0) * 0.5;
      const int ksize = std::max(3, static_cast<int>(std::lround(sigma * 5)) | 1);
      a = ResizePlane(GaussianBlur(p0, ksize, sigma), w, h);
      b = ResizePlane(GaussianBlur(n0, ksize, sigma), w, h);
    }
    if (flow_u.d.empty()) {
      flow_u = Plane(w, h);
      flow_v = Plane(w, h);
    } else {
      const double fx = static_cast<double>(w) / flow_u.w;
      const double fy = static_cast<double>(h) / flow_u.h;
      flow_u = ResizePlane(flow_u, w, h);
      flow_v = ResizePlane(flow_v, w, h);
      for (auto& d : flow_u.d) d *= fx;
      for (auto& d : flow_v.d) d *= fy;
    }
    const PolyCoeffs pa = PolyExpand(a, cfg.poly_n, cfg.poly_sigma);
    const PolyCoeffs pb = PolyExpand(b, cfg.poly_n, cfg.poly_sigma);
    for (int it = 0; it < cfg.iterations; ++it) {
      RefineFlow(pa, pb, cfg.window_size, flow_u, flow_v);
    }
  }

  FlowField out(prev.width, prev.height);
  for (size_t i = 0; i < out.u.size(); ++i) {
    out.u[i] = static_cast<float>(flow_u.d[i]);
    out.v[i] = static_cast<float>(flow_v.d[i]);
    if (!std::isfinite(out.u[i]) || !std::isfinite(out.v[i])) {
      throw NumericError("non-finite flow value");
    }
  }
  return out;
}

FlowField BlockMatchFlow(const GrayImage& prev, const GrayImage& next, int block,
                         int search_radius) {
  if (block <= 0 || search_radius <= 0) {
    throw UsageError("block size and search radius must be positive");
  }
  if (prev.width != next.width || prev.height != next.height) {
    throw DataError("frame size mismatch");
  }
  const int w = prev.width, h = prev.height;

  // Candidate order encodes the tie-break: smaller |d|, then (dy, dx).
  struct Cand {
    int dy, dx;
  };
  std::vector<Cand> cands;
  for (int dy = -search_radius; dy <= search_radius; ++dy)
    for (int dx = -search_radius; dx <= search_radius; ++dx) cands.push_back({dy, dx});
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    const int na = a.dx * a.dx + a.dy * a.dy, nb = b.dx * b.dx + b.dy * b.dy;
    if (na != nb) return na < nb;
    if (a.dy != b.dy) return a.dy < b.dy;
    return a.dx < b.dx;
  });

  FlowField out(w, h);
  for (int by = 0; by < h; by += block) {
    const int bh = std::min(block, h - by);
    for (int bx = 0; bx < w; bx += block) {
      const int bw = std::min(block, w - bx);
      long best = -1;
      Cand best_d{0, 0};
      for (const Cand& c : cands) {
        if (bx + c.dx < 0 || by + c.dy < 0 || bx + c.dx + bw > w || by + c.dy + bh > h) {
          continue;
        }
        long sad = 0;
        for (int y = 0; y < bh && (best < 0 || sad < best); ++y) {
          const uint8_t* a = &prev.pixels[static_cast<size_t>(by + y) * w + bx];
          const uint8_t* b = &next.pixels[static_cast<size_t>(by + y + c.dy) * w + bx + c.dx];
          for (int x = 0; x < bw; ++x) sad += std::abs(int(a[x]) - int(b[x]));
        }
        if (best < 0 || sad < best) {
          best = sad;
          best_d = c;
        }
      }
      for (int y = by; y < by + bh; ++y) {
        for (int x = bx; x < bx + bw; ++x) {
          out.u[out.index(x, y)] = static_cast<float>(best_d.dx);
          out.v[out.index(x, y)] = static_cast<float>(best_d.dy);
        }
      }
    }
  }
  return out;
}

PolarFlow CartToPolar(const FlowField& field) {
  PolarFlow p;
  p.width = field.width;
  p.height = field.height;
  p.magnitude.resize(field.u.size());
  p.angle_deg.resize(field.u.size());
  for (size_t i = 0; i < field.u.size(); ++i) {
    const double u = field.u[i], v = field.v[i];
    const double m = std::hypot(u, v);
    p.magnitude[i] = m;
    if (m == 0.0) {
      p.angle_deg[i] = 0.0;
      continue;
    }
    double a = std::atan2(v, u) * (180.0 / M_PI);
    if (a < 0.0) a += 360.0;
    if (a >= 360.0) a -= 360.0;
    p.angle_deg[i] = a;
  }
  return p;
}

void WriteFlowDump(const FlowField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("FLO1", 4);
  PutU32(out, static_cast<uint32_t>(field.width));
  PutU32(out, static_cast<uint32_t>(field.height));
  PutU32(out, 2);
  for (float f : field.u) PutF32(out, f);
  for (float f : field.v) PutF32(out, f);
}

FlowField ReadFlowDump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<uint8_t> b(std::istreambuf_iterator<char>(in), {});
  if (b.size() < 16 || std::memcmp(b.data(), "FLO1", 4) != 0) {
    throw DataError(path.string() + ": not a FLO1 dump");
  }
  const uint32_t w = GetU32(b, 4), h = GetU32(b, 8);
  const size_t n = static_cast<size_t>(w) * h;
  if (GetU32(b, 12) != 2 || b.size() != 16 + 8 * n) {
    throw DataError(path.string() + ": expected " + std::to_string(16 + 8 * n) +
                    " bytes, got " + std::to_string(b.size()));
  }
  FlowField f(static_cast<int>(w), static_cast<int>(h));
  for (size_t i = 0; i < n; ++i) {
    f.u[i] = std::bit_cast<float>(GetU32(b, 16 + 4 * i));
    f.v[i] = std::bit_cast<float>(GetU32(b, 16 + 4 * (n + i)));
  }
  return f;
}

}  // namespace camflow
