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

#include "camflow/dgme.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "camflow/common.h"
#include "json.hpp"

namespace camflow {
namespace fs = std::filesystem;

void DgmeConfig::Validate() const {
  if (grid < 1) throw UsageError("grid must be >= 1");
  if (directional_bins < 2 || 360 % directional_bins != 0) {
    throw UsageError("directional bins must be >= 2 and divide 360");
  }
  if (!(magnitude_threshold >= 0.0)) throw UsageError("magnitude threshold must be >= 0");
}

std::vector<CellRegion> GridCells(int width, int height, int grid) {
  if (width < grid || height < grid) {
    throw DataError("frame " + std::to_string(width) + "x" + std::to_string(height) +
                    " smaller than grid " + std::to_string(grid));
  }
  const int cw = width / grid, ch = height / grid;
  std::vector<CellRegion> cells;
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      CellRegion cell;
      cell.x0 = c * cw;
      cell.y0 = r * ch;
      cell.width = c == grid - 1 ? width - cell.x0 : cw;
      cell.height = r == grid - 1 ? height - cell.y0 : ch;
      cells.push_back(cell);
    }
  }
  return cells;
}

std::vector<double> CellHistogram(const PolarFlow& polar, const CellRegion& cell,
                                  const DgmeConfig& cfg) {
  const int k = cfg.directional_bins;
  const double width_deg = 360.0 / k;
  std::vector<double> hist(k + 1, 0.0);
  for (int y = cell.y0; y < cell.y0 + cell.height; ++y) {
    for (int x = cell.x0; x < cell.x0 + cell.width; ++x) {
      const size_t i = polar.index(x, y);
      const double m = polar.magnitude[i];
      if (m >= cfg.magnitude_threshold && m > 0.0) {
        int bin = static_cast<int>(std::floor(polar.angle_deg[i] / width_deg)) % k;
        if (bin < 0) bin += k;
        hist[bin] += m;
      } else {
        hist[k] += cfg.magnitude_threshold;
      }
    }
  }
  return hist;
}

void AccumulateGridHistograms(const PolarFlow& polar, const DgmeConfig& cfg,
                              std::vector<double>& accum) {
  const auto cells = GridCells(polar.width, polar.height, cfg.grid);
  accum.resize(static_cast<size_t>(cfg.length()), 0.0);
  const size_t stride = cfg.bins_per_cell();
  for (size_t c = 0; c < cells.size(); ++c) {
    const auto h = CellHistogram(polar, cells[c], cfg);
    for (size_t b = 0; b < stride; ++b) accum[c * stride + b] += h[b];
  }
}

std::string DgmeConfigHash(const DgmeConfig& cfg, const FarnebackConfig& flow) {
  std::ostringstream os;
  os << "dgme(grid=" << cfg.grid << ",bins=" << cfg.directional_bins
     << ",mthr=" << FormatG(cfg.magnitude_threshold, 17) << ");" << flow.Canonical();
  return HexDigest(Fnv1a64(os.str()));
}

DgmeDescriptor ComputeDgmeWith(const FrameSequence& seq, const DgmeConfig& cfg,
                               const FarnebackConfig& flow_cfg,
                               const FlowEstimator& estimator) {
  cfg.Validate();
  seq.Validate();
  std::vector<double> accum(static_cast<size_t>(cfg.length()), 0.0);
  for (int t = 0; t + 1 < seq.frame_count(); ++t) {
    const FlowField flow = estimator(seq.frames[t], seq.frames[t + 1]);
    AccumulateGridHistograms(CartToPolar(flow), cfg, accum);
  }
  double norm = 0.0;
  for (double v : accum) norm += v * v;
  norm = std::sqrt(norm);
  // Only an all-zero threshold on a zero-flow clip can leave no mass.
  if (norm > 0.0) {
    for (double& v : accum) v /= norm;
  }
  DgmeDescriptor d;
  d.clip_id = seq.clip_id;
  d.config_hash = DgmeConfigHash(cfg, flow_cfg);
  d.values = std::move(accum);
  return d;
}

DgmeDescriptor ComputeDgme(const FrameSequence& seq, const DgmeConfig& cfg,
                           const FarnebackConfig& flow_cfg) {
  return ComputeDgmeWith(seq, cfg, flow_cfg, [&](const GrayImage& a, const GrayImage& b) {
    return FarnebackFlow(a, b, flow_cfg);
  });
}

NormStats FitStats(const std::vector<std::vector<double>>& rows, const std::string& config_hash) {
  if (rows.size() < 2) {
    throw DataError("fitting statistics needs at least 2 descriptors, have " +
                    std::to_string(rows.size()));
  }
  const size_t dim = rows.front().size();
  NormStats s;
  s.mean.assign(dim, 0.0);
  s.std.assign(dim, 0.0);
  s.source_count = rows.size();
  s.config_hash = config_hash;
  for (const auto& r : rows) {
    if (r.size() != dim) throw DataError("descriptor length mismatch while fitting statistics");
    for (size_t j = 0; j < dim; ++j) s.mean[j] += r[j];
  }
  const double n = static_cast<double>(rows.size());
  for (double& m : s.mean) m /= n;
  for (const auto& r : rows) {
    for (size_t j = 0; j < dim; ++j) {
      const double d = r[j] - s.mean[j];
      s.std[j] += d * d;
    }
  }
  for (double& v : s.std) v = std::sqrt(v / n);
  return s;
}

NormStats FitStats(const std::vector<DgmeDescriptor>& descriptors) {
  if (descriptors.empty()) throw DataError("fitting statistics needs at least 2 descriptors, have 0");
  std::vector<std::vector<double>> rows;
  rows.reserve(descriptors.size());
  for (const auto& d : descriptors) {
    if (d.config_hash != descriptors.front().config_hash) {
      throw DataError("config_hash mismatch: " + d.config_hash + " vs " +
                      descriptors.front().config_hash);
    }
    rows.push_back(d.values);
  }
  return FitStats(rows, descriptors.front().config_hash);
}

std::vector<double> ApplyZScore(const std::vector<double>& values, const NormStats& stats) {
  if (values.size() != stats.mean.size() || values.size() != stats.std.size()) {
    throw DataError("descriptor length " + std::to_string(values.size()) +
                    " does not match statistics length " + std::to_string(stats.mean.size()));
  }
  std::vector<double> out(values.size());
  for (size_t j = 0; j < values.size(); ++j) {
    out[j] = (values[j] - stats.mean[j]) / std::max(stats.std[j], kStdFloor);
  }
  return out;
}

void WriteStatsJson(const NormStats& stats, const fs::path& path,
                    const std::map<std::string, std::string>& meta) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json m;
  for (const auto& [k, v] : meta) m[k] = v;
  j["meta"] = m;
  j["config_hash"] = stats.config_hash;
  j["count"] = stats.source_count;
  j["mean"] = stats.mean;
  j["std"] = stats.std;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

NormStats ReadStatsJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  NormStats s;
  try {
    const auto j = nlohmann::json::parse(in);
    s.config_hash = j.at("config_hash").get<std::string>();
    s.source_count = j.at("count").get<size_t>();
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed statistics file: " + e.what());
  }
  if (s.mean.size() != s.std.size()) throw DataError(path.string() + ": mean/std length mismatch");
  return s;
}

std::string FeatureTable::Meta(const std::string& key, const std::string& fallback) const {
  auto it = meta.find(key);
  return it == meta.end() ? fallback : it->second;
}

void WriteFeatureCsv(const FeatureTable& table, const fs::path& path,
                     const std::string& column_prefix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "#";
  for (const auto& [k, v] : table.meta) out << " " << k << "=" << v;
  out << "\n";
  const size_t dim = table.dimension();
  out << "clip_id,label";
  for (size_t j = 0; j < dim; ++j) out << "," << column_prefix << j;
  out << "\n";
  for (const auto& r : table.rows) {
    if (r.values.size() != dim) throw DataError("ragged feature rows");
    out << r.clip_id << "," << r.label;
    for (double v : r.values) {
      if (!std::isfinite(v)) throw NumericError("non-finite feature value for " + r.clip_id);
      out << "," << FormatG(v, 9);
    }
    out << "\n";
  }
}

FeatureTable ReadFeatureCsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  FeatureTable table;
  std::string line;
  size_t dim = 0;
  bool header = false;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string kv;
      while (ss >> kv) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) table.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      continue;
    }
    const auto fields = SplitString(line, ',');
    if (!header) {
      if (fields.size() < 2 || fields[0] != "clip_id" || fields[1] != "label") {
        throw DataError(path.string() + ": expected header clip_id,label,...");
      }
      dim = fields.size() - 2;
      header = true;
      continue;
    }
    if (fields.size() != dim + 2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim + 2) + " fields, got " + std::to_string(fields.size()));
    }
    FeatureRow row;
    row.clip_id = fields[0];
    row.label = fields[1];
    row.values.reserve(dim);
    for (size_t j = 0; j < dim; ++j) {
      try {
        row.values.push_back(std::stod(fields[j + 2]));
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                        fields[j + 2] + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!header) throw DataError(path.string() + ": empty features file");
  return table;
}

}  // namespace camflow
