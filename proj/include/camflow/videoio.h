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

#ifndef CAMFLOW_VIDEOIO_H_
#define CAMFLOW_VIDEOIO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace camflow {

// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

  uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

// A sampled grayscale clip; the unit every downstream stage consumes.
struct FrameSequence {
  std::string clip_id;
  std::vector<GrayImage> frames;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int frame_count() const { return static_cast<int>(frames.size()); }

  // Throws DataError when frames disagree in size or fewer than two exist.
  void Validate() const;

  bool operator==(const FrameSequence&) const = default;
};

struct SamplingSpec {
  int frames_per_clip = 12;
  int frame_interval = 6;
  int target_width = 224;
  int target_height = 224;

  // Number of source frames the spec needs.
  int RequiredFrames() const { return (frames_per_clip - 1) * frame_interval + 1; }
  void Validate() const;
};

// Train-time augmentation. Scale is the fraction of the resized frame the
// random crop covers; jitters are fractions of full range.
struct AugmentSpec {
  bool enabled = false;
  double scale_low = 0.8;
  double scale_high = 1.0;
  double brightness_jitter = 0.1;
  double contrast_jitter = 0.1;
  uint64_t rng_seed = 0;

  void Validate() const;
};

// .y8seq container: "Y8SQ", width, height, frame_count as u32 LE, then
// frames concatenated row-major.
void WriteY8Seq(const FrameSequence& seq, const std::filesystem::path& path);
std::vector<uint8_t> EncodeY8Seq(const FrameSequence& seq);
FrameSequence ReadY8Seq(const std::filesystem::path& path);
FrameSequence DecodeY8Seq(std::span<const uint8_t> bytes, const std::string& name);

// P5 (gray) or P6 (converted with BT.601 weights) Netpbm image.
GrayImage ReadNetpbm(const std::filesystem::path& path);
void WritePgm(const GrayImage& image, const std::filesystem::path& path);

// All .pgm/.ppm files in a directory, sorted by filename.
FrameSequence ReadFrameDirectory(const std::filesystem::path& dir);

// Reads a .y8seq file or a frame directory without sampling.
FrameSequence ReadSource(const std::filesystem::path& path);

// Picks frames_per_clip frames at stride frame_interval from frame 0.
FrameSequence SampleFrames(const FrameSequence& source, const SamplingSpec& spec);

// Bilinear resize with half-pixel centers and edge clamping.
GrayImage ResizeBilinear(const GrayImage& src, int width, int height);

// Output size after scaling so that both sides cover the target while
// preserving aspect ratio (the shorter side lands on the target).
void CoverSize(int src_w, int src_h, int target_w, int target_h, double scale,
               int* out_w, int* out_h);

GrayImage CropImage(const GrayImage& src, int x0, int y0, int width, int height);

// Evaluation path: resize then center crop to the target size.
FrameSequence PreprocessEval(const FrameSequence& seq, int target_w, int target_h);

// Training path: one clip-consistent multi-scale crop and one brightness /
// contrast jitter, seeded by (aug.rng_seed, seq.clip_id). Draw order from
// Rng(DeriveSeed(aug.rng_seed, clip_id)): scale, crop shift x, crop shift y,
// contrast factor, brightness offset. Each pixel maps to
// clamp(round((p - 128) * contrast + 128 + brightness)).
FrameSequence PreprocessTrain(const FrameSequence& seq, int target_w, int target_h,
                              const AugmentSpec& aug);

// Read + sample + eval preprocessing.
FrameSequence LoadClip(const std::filesystem::path& path, const SamplingSpec& spec);

}  // namespace camflow

#endif  // CAMFLOW_VIDEOIO_H_
