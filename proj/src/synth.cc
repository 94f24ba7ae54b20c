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

#include "camflow/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "camflow/common.h"
#include "json.hpp"

namespace camflow {
namespace fs = std::filesystem;

namespace {

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Lattice value in [0, 1) for one noise octave.
double LatticeValue(uint64_t seed, int octave, int64_t i, int64_t j) {
  uint64_t h = SplitMix(seed ^ (static_cast<uint64_t>(octave) * 0x632be59bd9b4e019ULL));
  h = SplitMix(h ^ static_cast<uint64_t>(i));
  h = SplitMix(h ^ (static_cast<uint64_t>(j) * 0x9e3779b97f4a7c15ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double SmoothStep(double t) { return t * t * (3.0 - 2.0 * t); }

double ValueNoise(uint64_t seed, int octave, double x, double y, double spacing) {
  const double gx = x / spacing, gy = y / spacing;
  const auto i = static_cast<int64_t>(std::floor(gx));
  const auto j = static_cast<int64_t>(std::floor(gy));
  const double fx = SmoothStep(gx - i), fy = SmoothStep(gy - j);
  const double v00 = LatticeValue(seed, octave, i, j);
  const double v10 = LatticeValue(seed, octave, i + 1, j);
  const double v01 = LatticeValue(seed, octave, i, j + 1);
  const double v11 = LatticeValue(seed, octave, i + 1, j + 1);
  return (v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy;
}

uint8_t Quantize(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<uint8_t>(std::floor(v + 0.5));
}

inline int Reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

std::vector<double> GaussianBlur(const std::vector<double>& src, int w, int h, double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-(i * i) / (2 * sigma * sigma));
  for (auto& v : k) v /= sum;
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int j = -r; j <= r; ++j) s += k[j + r] * src[static_cast<size_t>(y) * w + Reflect(x + j, w)];
      tmp[static_cast<size_t>(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int j = -r; j <= r; ++j) s += k[j + r] * tmp[static_cast<size_t>(Reflect(y + j, h)) * w + x];
      out[static_cast<size_t>(y) * w + x] = s;
    }
  return out;
}

}  // namespace

const std::vector<std::string>& MotionClassNames() {
  static const std::vector<std::string> names = {"static", "tilt", "pan", "zoom", "track"};
  return names;
}

std::string ToString(MotionClass c) { return MotionClassNames()[static_cast<size_t>(c)]; }

MotionClass ParseMotionClass(const std::string& name) {
  const auto& names = MotionClassNames();
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<MotionClass>(i);
  }
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ",") + n;
  throw UsageError("unknown class '" + name + "' (valid: " + valid + ")");
}

std::string ToString(Domain d) { return d == Domain::kModern ? "modern" : "historical"; }

Domain ParseDomain(const std::string& name) {
  if (name == "modern") return Domain::kModern;
  if (name == "historical") return Domain::kHistorical;
  throw UsageError("unknown domain '" + name + "' (valid: modern,historical)");
}

void SynthSpec::Validate() const {
  if (frames < 2) throw UsageError("synth clip needs at least 2 frames");
  if (size < 16) throw UsageError("synth clip size must be >= 16");
  if (motion != MotionClass::kStatic && !(magnitude > 0.0)) {
    throw UsageError("motion magnitude must be positive for moving classes");
  }
  if (direction_sign != 1 && direction_sign != -1) throw UsageError("direction_sign must be +1 or -1");
  if (jitter < 0.0) throw UsageError("jitter must be >= 0");
}

void DegradeSpec::Validate() const {
  if (noise_sigma < 0.0 || blur_sigma < 0.0 || flicker_amp < 0.0) {
    throw UsageError("degradation sigmas and amplitudes must be >= 0");
  }
  if (!(contrast_scale > 0.0 && contrast_scale <= 1.0)) {
    throw UsageError("contrast_scale must lie in (0, 1]");
  }
  if (drop_prob < 0.0 || drop_prob >= 1.0) throw UsageError("drop_prob must lie in [0, 1)");
}

double Texture::Sample(double x, double y) const {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  const int xa = Reflect(x0, width), xb = Reflect(x0 + 1, width);
  const int ya = Reflect(y0, height), yb = Reflect(y0 + 1, height);
  return (at(xa, ya) * (1 - fx) + at(xb, ya) * fx) * (1 - fy) +
         (at(xa, yb) * (1 - fx) + at(xb, yb) * fx) * fy;
}

Texture RenderTexture(int width, int height, uint64_t seed) {
  Texture t;
  t.width = width;
  t.height = height;
  t.values.assign(static_cast<size_t>(width) * height, 0.0);
  constexpr double kSpacing[] = {32.0, 16.0, 8.0, 4.0};
  constexpr double kAmplitude[] = {1.0, 0.6, 0.4, 0.25};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.0;
      for (int o = 0; o < 4; ++o) v += kAmplitude[o] * ValueNoise(seed, o, x, y, kSpacing[o]);
      t.values[static_cast<size_t>(y) * width + x] = v;
    }
  }
  Rng rng(DeriveSeed(seed, "blobs"));
  const int blobs = std::max(8, width * height / 2000);
  for (int b = 0; b < blobs; ++b) {
    const double cx = rng.Uniform(0, width), cy = rng.Uniform(0, height);
    const double radius = rng.Uniform(3.0, 10.0);
    const double amp = rng.Uniform(-1.0, 1.0);
    const int r = static_cast<int>(std::ceil(3 * radius));
    for (int y = std::max(0, int(cy) - r); y < std::min(height, int(cy) + r + 1); ++y) {
      for (int x = std::max(0, int(cx) - r); x < std::min(width, int(cx) + r + 1); ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        t.values[static_cast<size_t>(y) * width + x] +=
            amp * std::exp(-d2 / (2 * radius * radius));
      }
    }
  }
  const auto [lo, hi] = std::minmax_element(t.values.begin(), t.values.end());
  const double mn = *lo, span = std::max(*hi - *lo, 1e-12);
  for (auto& v : t.values) v = 20.0 + 215.0 * (v - mn) / span;
  return t;
}

FrameSequence MakeClip(const SynthSpec& spec) {
  spec.Validate();
  const int s = spec.size;
  const double c = (s - 1) / 2.0;
  const int steps = spec.frames - 1;
  const bool moving = spec.motion != MotionClass::kStatic;
  const double mag = moving ? spec.magnitude : 0.0;
  const double sign = spec.direction_sign;

  // Background texture large enough that no frame samples past its border.
  double extent = spec.jitter + 2.0;
  double zoom_rate = 0.0;
  if (spec.motion == MotionClass::kZoom) {
    zoom_rate = mag / (s / 2.0);
    const double min_scale = std::pow(1.0 + sign * zoom_rate, sign > 0 ? 0 : steps);
    extent += (s / 2.0) * (1.0 / std::max(min_scale, 0.05) - 1.0);
  } else {
    extent += mag * steps;
  }
  const int margin = static_cast<int>(std::ceil(extent)) + 2;
  const Texture bg = RenderTexture(s + 2 * margin, s + 2 * margin, spec.texture_seed);
  const double bc = c + margin;

  Texture fg;
  const double fg_radius = s / 6.0;
  if (spec.motion == MotionClass::kTrack) {
    fg = RenderTexture(s, s, SplitMix(spec.texture_seed ^ 0x7472616bULL));
    // Stretch the foreground to full range so it reads as a distinct object.
    for (auto& v : fg.values) v = std::clamp((v - 127.5) * 1.6 + 127.5, 0.0, 255.0);
  }

  Rng jitter_rng(DeriveSeed(spec.texture_seed, "jitter"));
  FrameSequence seq;
  seq.clip_id = ToString(spec.motion);
  for (int t = 0; t < spec.frames; ++t) {
    const double jx = spec.jitter > 0 ? jitter_rng.Uniform(-spec.jitter, spec.jitter) : 0.0;
    const double jy = spec.jitter > 0 ? jitter_rng.Uniform(-spec.jitter, spec.jitter) : 0.0;
    double dx = 0.0, dy = 0.0, scale = 1.0;
    switch (spec.motion) {
      case MotionClass::kPan:
      case MotionClass::kTrack:
        dx = sign * mag * t;
        break;
      case MotionClass::kTilt:
        dy = sign * mag * t;
        break;
      case MotionClass::kZoom:
        scale = std::pow(1.0 + sign * zoom_rate, t);
        break;
      case MotionClass::kStatic:
        break;
    }
    GrayImage img(s, s);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        // Content at frame position p came from background position
        // (p - c - d - j) / scale + c.
        const double bx = (x - c - dx - jx) / scale + bc;
        const double by = (y - c - dy - jy) / scale + bc;
        double v = bg.Sample(bx, by);
        if (spec.motion == MotionClass::kTrack) {
          const double r = std::hypot(x - c, y - c);
          const double w = std::clamp(fg_radius + 0.5 - r, 0.0, 1.0);
          if (w > 0.0) v = (1 - w) * v + w * fg.Sample(x - jx, y - jy);
        }
        img.at(x, y) = Quantize(v);
      }
    }
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

FrameSequence DegradeClip(const FrameSequence& seq, const DegradeSpec& spec) {
  spec.Validate();
  seq.Validate();
  const int w = seq.width(), h = seq.height();
  Rng flicker_rng(DeriveSeed(spec.rng_seed, "flicker"));
  Rng noise_rng(DeriveSeed(spec.rng_seed, "noise"));
  Rng drop_rng(DeriveSeed(spec.rng_seed, "drop"));

  FrameSequence out;
  out.clip_id = seq.clip_id;
  for (const auto& frame : seq.frames) {
    std::vector<double> px(frame.pixels.begin(), frame.pixels.end());
    for (auto& p : px) p = 128.0 + spec.contrast_scale * (p - 128.0);
    if (spec.blur_sigma > 0.0) px = GaussianBlur(px, w, h, spec.blur_sigma);
    const double flicker =
        spec.flicker_amp > 0.0 ? flicker_rng.Uniform(-spec.flicker_amp, spec.flicker_amp) : 0.0;
    GrayImage img(w, h);
    for (size_t i = 0; i < px.size(); ++i) {
      double v = px[i] + flicker;
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise_rng.Normal();
      img.pixels[i] = Quantize(std::clamp(v, 0.0, 255.0));
    }
    out.frames.push_back(std::move(img));
  }
  if (spec.drop_prob > 0.0) {
    for (size_t i = 1; i < out.frames.size(); ++i) {
      if (drop_rng.Uniform() < spec.drop_prob) out.frames[i] = out.frames[i - 1];
    }
  }
  return out;
}

std::vector<CorpusEntry> PlanCorpus(const CorpusOptions& opts) {
  if (opts.per_class < 1) throw UsageError("per_class must be >= 1");
  if (opts.classes.empty()) throw UsageError("no classes requested");
  std::vector<CorpusEntry> plan;
  for (MotionClass mc : opts.classes) {
    const std::string label = ToString(mc);
    for (int i = 0; i < opts.per_class; ++i) {
      Rng rng(DeriveSeed(opts.seed, label + "/" + std::to_string(i)));
      CorpusEntry e;
      char name[64];
      std::snprintf(name, sizeof(name), "clips/%s_%04d.y8seq", label.c_str(), i);
      e.clip_path = name;
      e.label = label;
      e.spec.motion = mc;
      e.spec.frames = opts.frames;
      e.spec.size = opts.size;
      e.spec.magnitude = rng.Uniform(opts.min_magnitude, opts.max_magnitude);
      e.spec.direction_sign = rng.Uniform() < 0.5 ? -1 : 1;
      e.spec.texture_seed = rng.NextU64();
      e.spec.jitter = rng.Uniform(0.0, mc == MotionClass::kStatic ? 0.2 : 0.1);
      if (opts.domain == Domain::kHistorical) {
        e.degraded = true;
        e.degrade.noise_sigma = rng.Uniform(2.0, 8.0);
        e.degrade.blur_sigma = rng.Uniform(0.3, 1.2);
        e.degrade.contrast_scale = rng.Uniform(0.5, 0.9);
        e.degrade.flicker_amp = rng.Uniform(0.0, 8.0);
        e.degrade.drop_prob = rng.Uniform(0.05, 0.2);
        e.degrade.rng_seed = rng.NextU64();
      }
      plan.push_back(e);
    }
  }
  return plan;
}

std::vector<CorpusEntry> MakeCorpus(const CorpusOptions& opts, const fs::path& out_dir) {
  auto plan = PlanCorpus(opts);
  fs::create_directories(out_dir / "clips");
  ParallelFor(plan.size(), opts.jobs, [&](size_t i) {
    FrameSequence clip = MakeClip(plan[i].spec);
    if (plan[i].degraded) clip = DegradeClip(clip, plan[i].degrade);
    WriteY8Seq(clip, out_dir / plan[i].clip_path);
  });

  std::ofstream ann(out_dir / "annotations.csv", std::ios::binary | std::ios::trunc);
  if (!ann) throw DataError("cannot write " + (out_dir / "annotations.csv").string());
  ann << "clip_path,label\n";
  for (const auto& e : plan) ann << e.clip_path << "," << e.label << "\n";

  nlohmann::ordered_json meta;
  meta["tool"] = "camflow";
  meta["version"] = kVersion;
  meta["seed"] = opts.seed;
  meta["domain"] = ToString(opts.domain);
  std::vector<std::string> names;
  for (auto c : opts.classes) names.push_back(ToString(c));
  meta["classes"] = names;
  meta["per_class"] = opts.per_class;
  meta["frames"] = opts.frames;
  meta["size"] = opts.size;
  std::ofstream mj(out_dir / "corpus.json", std::ios::binary | std::ios::trunc);
  mj << meta.dump(2) << "\n";
  return plan;
}

}  // namespace camflow
