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

#ifndef CAMFLOW_SYNTH_H_
#define CAMFLOW_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "camflow/videoio.h"

namespace camflow {

enum class MotionClass { kStatic, kTilt, kPan, kZoom, kTrack };

const std::vector<std::string>& MotionClassNames();
std::string ToString(MotionClass c);
// Throws UsageError listing the valid names.
MotionClass ParseMotionClass(const std::string& name);

struct SynthSpec {
  MotionClass motion = MotionClass::kStatic;
  int frames = 12;
  int size = 128;
  // px/frame for translations; for zoom, the displacement per frame at the
  // midpoint of the frame edge (scale rate = magnitude / (size / 2)).
  double magnitude = 2.0;
  int direction_sign = 1;  // +1: rightward / downward / zoom in
  uint64_t texture_seed = 0;
  double jitter = 0.0;     // per-frame random offset bound, px

  void Validate() const;
};

struct DegradeSpec {
  double noise_sigma = 0.0;
  double blur_sigma = 0.0;
  double contrast_scale = 1.0;
  double flicker_amp = 0.0;
  double drop_prob = 0.0;
  uint64_t rng_seed = 0;

  void Validate() const;
};

// Procedural texture (multi-octave value noise plus random blobs) rendered
// as doubles in [20, 235].
struct Texture {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  // Bilinear sample with reflective borders.
  double Sample(double x, double y) const;
};

Texture RenderTexture(int width, int height, uint64_t seed);

FrameSequence MakeClip(const SynthSpec& spec);

// Contrast compression about 128, Gaussian blur, per-frame flicker,
// additive Gaussian noise, then frame drops (replaced by the previous
// frame). Each stochastic stage draws from its own seeded stream.
FrameSequence DegradeClip(const FrameSequence& seq, const DegradeSpec& spec);

enum class Domain { kModern, kHistorical };
std::string ToString(Domain d);
Domain ParseDomain(const std::string& name);

struct CorpusOptions {
  std::vector<MotionClass> classes;
  int per_class = 10;
  Domain domain = Domain::kModern;
  uint64_t seed = 0;
  int frames = 12;
  int size = 128;
  double min_magnitude = 1.0;
  double max_magnitude = 4.0;
  int jobs = 1;
};

struct CorpusEntry {
  std::string clip_path;  // relative to the corpus directory
  std::string label;
  SynthSpec spec;
  bool degraded = false;
  DegradeSpec degrade;
};

// Per-clip parameters, drawn deterministically from (seed, class, index).
std::vector<CorpusEntry> PlanCorpus(const CorpusOptions& opts);

// Writes clips/<label>_<index>.y8seq, annotations.csv (clip_path,label) and
// corpus.json into out_dir. Returns the plan that was rendered.
std::vector<CorpusEntry> MakeCorpus(const CorpusOptions& opts,
                                    const std::filesystem::path& out_dir);

}  // namespace camflow

#endif  // CAMFLOW_SYNTH_H_
