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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "camflow/common.h"

namespace camflow {
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'Y', '8', 'S', 'Q'};
constexpr size_t kHeaderBytes = 16;

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t GetU32(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) |
         (static_cast<uint32_t>(b[off + 3]) << 24);
}

std::vector<uint8_t> ReadAllBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

uint8_t ClampRound(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<uint8_t>(std::floor(v + 0.5));
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string NextToken(const std::vector<uint8_t>& b, size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok.push_back(b[pos++]);
  return tok;
}

}  // namespace

void FrameSequence::Validate() const {
  if (frames.size() < 2) {
    throw DataError("clip " + clip_id + ": need at least 2 frames, have " +
                    std::to_string(frames.size()));
  }
  const int w = frames.front().width;
  const int h = frames.front().height;
  if (w <= 0 || h <= 0) throw DataError("clip " + clip_id + ": empty frame");
  for (const auto& f : frames) {
    if (f.width != w || f.height != h ||
        f.pixels.size() != static_cast<size_t>(w) * h) {
      throw DataError("clip " + clip_id + ": frames differ in size");
    }
  }
}

void SamplingSpec::Validate() const {
  if (frames_per_clip < 2) throw UsageError("frames_per_clip must be >= 2");
  if (frame_interval < 1) throw UsageError("frame_interval must be >= 1");
  if (target_width < 1 || target_height < 1) throw UsageError("target size must be positive");
}

void AugmentSpec::Validate() const {
  if (brightness_jitter < 0.0 || brightness_jitter >= 1.0 || contrast_jitter < 0.0 ||
      contrast_jitter >= 1.0) {
    throw UsageError("jitter fractions must lie in [0, 1)");
  }
  if (scale_low > scale_high || scale_low <= 0.0 || scale_high > 1.0) {
    throw UsageError("scale range must satisfy 0 < low <= high <= 1");
  }
}

std::vector<uint8_t> EncodeY8Seq(const FrameSequence& seq) {
  seq.Validate();
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  PutU32(out, static_cast<uint32_t>(seq.width()));
  PutU32(out, static_cast<uint32_t>(seq.height()));
  PutU32(out, static_cast<uint32_t>(seq.frame_count()));
  for (const auto& f : seq.frames) out.insert(out.end(), f.pixels.begin(), f.pixels.end());
  return out;
}

void WriteY8Seq(const FrameSequence& seq, const fs::path& path) {
  const auto bytes = EncodeY8Seq(seq);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

FrameSequence DecodeY8Seq(std::span<const uint8_t> bytes, const std::string& name) {
  if (bytes.size() < kHeaderBytes) {
    throw DataError(name + ": truncated header: expected " + std::to_string(kHeaderBytes) +
                    " bytes, got " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError(name + ": bad magic");
  const uint32_t w = GetU32(bytes, 4);
  const uint32_t h = GetU32(bytes, 8);
  const uint32_t n = GetU32(bytes, 12);
  if (w == 0 || h == 0) throw DataError(name + ": zero frame size");
  const uint64_t frame_bytes = static_cast<uint64_t>(w) * h;
  const uint64_t expected = kHeaderBytes + frame_bytes * n;
  if (bytes.size() != expected) {
    throw DataError(name + ": expected " + std::to_string(expected) + " bytes, got " +
                    std::to_string(bytes.size()));
  }
  FrameSequence seq;
  seq.clip_id = name;
  seq.frames.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    const auto* src = bytes.data() + kHeaderBytes + frame_bytes * i;
    std::copy(src, src + frame_bytes, img.pixels.begin());
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

FrameSequence ReadY8Seq(const fs::path& path) {
  const auto bytes = ReadAllBytes(path);
  return DecodeY8Seq(bytes, path.string());
}

GrayImage ReadNetpbm(const fs::path& path) {
  const auto b = ReadAllBytes(path);
  size_t pos = 0;
  const std::string magic = NextToken(b, pos);
  if (magic != "P5" && magic != "P6") {
    throw DataError(path.string() + ": unsupported image format '" + magic + "'");
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(NextToken(b, pos));
    h = std::stoi(NextToken(b, pos));
    maxval = std::stoi(NextToken(b, pos));
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw DataError(path.string() + ": malformed header");
  }
  ++pos;  // single whitespace after maxval
  const size_t channels = magic == "P6" ? 3 : 1;
  const size_t need = static_cast<size_t>(w) * h * channels;
  if (b.size() < pos + need) {
    throw DataError(path.string() + ": expected " + std::to_string(need) +
                    " pixel bytes, got " + std::to_string(b.size() - std::min(pos, b.size())));
  }
  GrayImage img(w, h);
  const double scale = 255.0 / maxval;
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    double v;
    if (channels == 1) {
      v = b[pos + i];
    } else {
      const uint8_t* p = &b[pos + 3 * i];
      v = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
    img.pixels[i] = ClampRound(v * scale);
  }
  return img;
}

void WritePgm(const GrayImage& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

FrameSequence ReadFrameDirectory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  FrameSequence seq;
  seq.clip_id = dir.string();
  for (const auto& f : files) seq.frames.push_back(ReadNetpbm(f));
  if (seq.frames.empty()) throw DataError(dir.string() + ": no frames found");
  for (const auto& f : seq.frames) {
    if (f.width != seq.width() || f.height != seq.height()) {
      throw DataError(dir.string() + ": frames differ in size");
    }
  }
  return seq;
}

FrameSequence ReadSource(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing file: " + path.string());
  if (fs::is_directory(path)) return ReadFrameDirectory(path);
  return ReadY8Seq(path);
}

FrameSequence SampleFrames(const FrameSequence& source, const SamplingSpec& spec) {
  spec.Validate();
  const int need = spec.RequiredFrames();
  if (source.frame_count() < need) {
    throw DataError("insufficient frames: need " + std::to_string(need) + ", have " +
                    std::to_string(source.frame_count()));
  }
  FrameSequence out;
  out.clip_id = source.clip_id;
  out.frames.reserve(spec.frames_per_clip);
  for (int i = 0; i < spec.frames_per_clip; ++i) {
    out.frames.push_back(source.frames[static_cast<size_t>(i) * spec.frame_interval]);
  }
  return out;
}

GrayImage ResizeBilinear(const GrayImage& src, int width, int height) {
  if (width == src.width && height == src.height) return src;
  GrayImage dst(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  std::vector<int> x0(width), x1(width);
  std::vector<double> fx(width);
  for (int x = 0; x < width; ++x) {
    double s = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
    x0[x] = static_cast<int>(s);
    x1[x] = std::min(x0[x] + 1, src.width - 1);
    fx[x] = s - x0[x];
  }
  for (int y = 0; y < height; ++y) {
    const double s = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(s);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = s - y0;
    for (int x = 0; x < width; ++x) {
      const double top = src.at(x0[x], y0) * (1 - fx[x]) + src.at(x1[x], y0) * fx[x];
      const double bot = src.at(x0[x], y1) * (1 - fx[x]) + src.at(x1[x], y1) * fx[x];
      dst.at(x, y) = ClampRound(top * (1 - fy) + bot * fy);
    }
  }
  return dst;
}

void CoverSize(int src_w, int src_h, int target_w, int target_h, double scale, int* out_w,
               int* out_h) {
  const double f = std::max(static_cast<double>(target_w) / src_w,
                            static_cast<double>(target_h) / src_h) *
                   scale;
  *out_w = std::max(static_cast<int>(std::lround(src_w * f)),
                    static_cast<int>(std::ceil(target_w * scale - 1e-9)));
  *out_h = std::max(static_cast<int>(std::lround(src_h * f)),
                    static_cast<int>(std::ceil(target_h * scale - 1e-9)));
  *out_w = std::max(*out_w, target_w);
  *out_h = std::max(*out_h, target_h);
}

GrayImage CropImage(const GrayImage& src, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || x0 + width > src.width || y0 + height > src.height) {
    throw DataError("crop window outside image");
  }
  GrayImage dst(width, height);
  for (int y = 0; y < height; ++y) {
    std::copy_n(&src.pixels[static_cast<size_t>(y + y0) * src.width + x0], width,
                &dst.pixels[static_cast<size_t>(y) * width]);
  }
  return dst;
}

FrameSequence PreprocessEval(const FrameSequence& seq, int target_w, int target_h) {
  seq.Validate();
  int rw, rh;
  CoverSize(seq.width(), seq.height(), target_w, target_h, 1.0, &rw, &rh);
  const int ox = (rw - target_w) / 2;
  const int oy = (rh - target_h) / 2;
  FrameSequence out;
  out.clip_id = seq.clip_id;
  out.frames.reserve(seq.frames.size());
  for (const auto& f : seq.frames) {
    out.frames.push_back(CropImage(ResizeBilinear(f, rw, rh), ox, oy, target_w, target_h));
  }
  return out;
}

FrameSequence PreprocessTrain(const FrameSequence& seq, int target_w, int target_h,
                              const AugmentSpec& aug) {
  aug.Validate();
  seq.Validate();
  if (!aug.enabled) return PreprocessEval(seq, target_w, target_h);
  Rng rng(DeriveSeed(aug.rng_seed, seq.clip_id));
  const double scale = rng.Uniform(aug.scale_low, aug.scale_high);
  const double shift_u = rng.Uniform();
  const double shift_v = rng.Uniform();
  const double contrast = 1.0 + aug.contrast_jitter * (2.0 * rng.Uniform() - 1.0);
  const double brightness = 255.0 * aug.brightness_jitter * (2.0 * rng.Uniform() - 1.0);

  // A crop covering `scale` of the frame equals a resize by 1/scale followed
  // by a target-size crop.
  int base_w, base_h, rw, rh;
  CoverSize(seq.width(), seq.height(), target_w, target_h, 1.0, &base_w, &base_h);
  CoverSize(seq.width(), seq.height(), target_w, target_h, 1.0 / scale, &rw, &rh);
  const double dx = (shift_u - 0.5) * (rw - base_w);
  const double dy = (shift_v - 0.5) * (rh - base_h);
  const int ox = std::clamp(static_cast<int>(std::floor((rw - target_w) / 2 + dx)), 0,
                            rw - target_w);
  const int oy = std::clamp(static_cast<int>(std::floor((rh - target_h) / 2 + dy)), 0,
                            rh - target_h);

  uint8_t lut[256];
  for (int p = 0; p < 256; ++p) lut[p] = ClampRound((p - 128.0) * contrast + 128.0 + brightness);

  FrameSequence out;
  out.clip_id = seq.clip_id;
  for (const auto& f : seq.frames) {
    GrayImage img = CropImage(ResizeBilinear(f, rw, rh), ox, oy, target_w, target_h);
    for (auto& p : img.pixels) p = lut[p];
    out.frames.push_back(std::move(img));
  }
  return out;
}

FrameSequence LoadClip(const fs::path& path, const SamplingSpec& spec) {
  FrameSequence sampled = SampleFrames(ReadSource(path), spec);
  sampled.clip_id = path.string();
  return PreprocessEval(sampled, spec.target_width, spec.target_height);
}

}  // namespace camflow
