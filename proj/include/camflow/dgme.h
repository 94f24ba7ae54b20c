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

#ifndef CAMFLOW_DGME_H_
#define CAMFLOW_DGME_H_

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "camflow/flow.h"
#include "camflow/videoio.h"

namespace camflow {

struct DgmeConfig {
  int grid = 3;
  int directional_bins = 12;
  double magnitude_threshold = 0.5;  // m_thr, px

  int bins_per_cell() const { return directional_bins + 1; }
  int length() const { return grid * grid * bins_per_cell(); }
  void Validate() const;
};

// Pixel rectangle [x0, x0 + width) x [y0, y0 + height).
struct CellRegion {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

// Grid partition: cells are floor(H/grid) x floor(W/grid); the last row and
// column of cells absorb the remainders. Row-major order.
std::vector<CellRegion> GridCells(int width, int height, int grid);

// Magnitude-weighted angle histogram of one cell. Pixels with m >= m_thr add
// m to bin floor(theta / (360 / bins)) mod bins; the rest add m_thr to the
// trailing static bin.
std::vector<double> CellHistogram(const PolarFlow& polar, const CellRegion& cell,
                                  const DgmeConfig& cfg);

// Adds every cell histogram of one polar field into `accum` (grid^2 blocks,
// each directional bins then static).
void AccumulateGridHistograms(const PolarFlow& polar, const DgmeConfig& cfg,
                              std::vector<double>& accum);

struct DgmeDescriptor {
  std::string clip_id;
  std::string config_hash;
  std::vector<double> values;
};

// Stable digest of descriptor and flow settings.
std::string DgmeConfigHash(const DgmeConfig& cfg, const FarnebackConfig& flow);

using FlowEstimator = std::function<FlowField(const GrayImage&, const GrayImage&)>;

// Histograms summed over all consecutive frame pairs, then L2-normalized.
DgmeDescriptor ComputeDgme(const FrameSequence& seq, const DgmeConfig& cfg,
                           const FarnebackConfig& flow_cfg = {});

// Same pipeline with a caller-supplied flow estimator (e.g. block matching).
// The descriptor's config_hash is still taken from (cfg, flow_cfg).
DgmeDescriptor ComputeDgmeWith(const FrameSequence& seq, const DgmeConfig& cfg,
                               const FarnebackConfig& flow_cfg,
                               const FlowEstimator& estimator);

// Per-dimension statistics of a source corpus for z-score calibration.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
  size_t source_count = 0;
  std::string config_hash;
};

inline constexpr double kStdFloor = 1e-8;

NormStats FitStats(const std::vector<DgmeDescriptor>& descriptors);
NormStats FitStats(const std::vector<std::vector<double>>& rows, const std::string& config_hash);

// (x - mean) / max(std, kStdFloor) per dimension.
std::vector<double> ApplyZScore(const std::vector<double>& values, const NormStats& stats);

// Stats JSON: {config_hash, count, mean: [...], std: [...]} plus metadata.
void WriteStatsJson(const NormStats& stats, const std::filesystem::path& path,
                    const std::map<std::string, std::string>& meta = {});
NormStats ReadStatsJson(const std::filesystem::path& path);

// Rows of a features CSV (raw or calibrated).
struct FeatureRow {
  std::string clip_id;
  std::string label;
  std::vector<double> values;
};

// Features CSV: a leading "# key=value ..." metadata comment, the header
// clip_id,label,f0,...,f{n-1}, then one row per clip with 9 significant
// digits. Metadata keys used downstream: config_hash, domain, calibrated.
struct FeatureTable {
  std::map<std::string, std::string> meta;
  std::vector<FeatureRow> rows;

  std::string Meta(const std::string& key, const std::string& fallback = "") const;
  size_t dimension() const { return rows.empty() ? 0 : rows.front().values.size(); }
};

void WriteFeatureCsv(const FeatureTable& table, const std::filesystem::path& path,
                     const std::string& column_prefix = "f");
FeatureTable ReadFeatureCsv(const std::filesystem::path& path);

}  // namespace camflow

#endif  // CAMFLOW_DGME_H_
