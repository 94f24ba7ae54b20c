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

#ifndef CAMFLOW_TESTS_TEST_UTIL_H_
#define CAMFLOW_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "camflow/common.h"
#include "camflow/synth.h"
#include "camflow/videoio.h"

namespace camflow::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("camflow_" + tag + "_" + HexDigest(Fnv1a64(tag + std::to_string(reinterpret_cast<uintptr_t>(this)))));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Procedural texture quantized to u8.
inline GrayImage TextureImage(int size, uint64_t seed) {
  const Texture t = RenderTexture(size, size, seed);
  GrayImage img(size, size);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<uint8_t>(std::lround(t.values[i]));
  }
  return img;
}

// Copy of img with content moved by (dx, dy), wrapping at the borders.
inline GrayImage WrapShift(const GrayImage& img, int dx, int dy) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int sx = ((x - dx) % img.width + img.width) % img.width;
      const int sy = ((y - dy) % img.height + img.height) % img.height;
      out.at(x, y) = img.at(sx, sy);
    }
  }
  return out;
}

inline FrameSequence RandomSequence(Rng& rng, int w, int h, int n) {
  FrameSequence seq;
  seq.clip_id = "rand";
  for (int f = 0; f < n; ++f) {
    GrayImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.Below(256));
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

}  // namespace camflow::testing

#endif  // CAMFLOW_TESTS_TEST_UTIL_H_
