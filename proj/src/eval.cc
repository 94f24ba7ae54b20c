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

#include "camflow/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "camflow/common.h"
#include "json.hpp"

#ifndef CAMFLOW_SCHEMA_DIR
#define CAMFLOW_SCHEMA_DIR "data/schemas"
#endif

namespace camflow {
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> ReadCsvRows(const fs::path& path,
                                                  const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = SplitString(line, ',');
    if (!seen_header) {
      if (fields != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw DataError(path.string() + ": expected header " + want);
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  if (!seen_header) throw DataError(path.string() + ": empty file");
  return rows;
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void WriteMetaComment(std::ostream& out, const std::map<std::string, std::string>& meta) {
  if (meta.empty()) return;
  out << "#";
  for (const auto& [k, v] : meta) out << " " << k << "=" << v;
  out << "\n";
}

AnnotatedSet EmptyLike(const AnnotatedSet& s) {
  AnnotatedSet out;
  out.schema = s.schema;
  return out;
}

}  // namespace

int ClassSchema::IndexOf(const std::string& label) const {
  auto it = std::find(classes.begin(), classes.end(), label);
  return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

void ClassSchema::Validate() const {
  if (classes.empty()) throw DataError("schema " + name + ": no classes");
  std::set<std::string> unique(classes.begin(), classes.end());
  if (unique.size() != classes.size()) throw DataError("schema " + name + ": duplicate classes");
  for (const auto& [src, dst] : remap) {
    if (dst != kDropLabel && IndexOf(dst) < 0) {
      throw DataError("schema " + name + ": remap target '" + dst + "' for '" + src +
                      "' is not a class");
    }
  }
  for (const auto& [cls, target] : oversample_targets) {
    if (IndexOf(cls) < 0) throw DataError("schema " + name + ": oversample class '" + cls + "' unknown");
    if (target < 0) throw DataError("schema " + name + ": negative oversample target");
  }
}

ClassSchema ParseSchemaJson(const std::string& text, const std::string& origin) {
  ClassSchema s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.name = j.value("name", origin);
    s.classes = j.at("classes").get<std::vector<std::string>>();
    if (j.contains("remap")) s.remap = j.at("remap").get<std::map<std::string, std::string>>();
    if (j.contains("oversample_targets")) {
      s.oversample_targets = j.at("oversample_targets").get<std::map<std::string, int>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": malformed schema: " + e.what());
  }
  s.Validate();
  return s;
}

fs::path SchemaDirectory() {
  if (const char* env = std::getenv("CAMFLOW_SCHEMA_DIR")) return env;
  return CAMFLOW_SCHEMA_DIR;
}

ClassSchema LoadSchema(const std::string& name_or_path) {
  fs::path path = name_or_path;
  if (!fs::is_regular_file(path)) path = SchemaDirectory() / (name_or_path + ".json");
  std::ifstream in(path);
  if (!in) throw UsageError("unknown schema '" + name_or_path + "' (bundled: modern4, historian5)");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSchemaJson(ss.str(), path.string());
}

std::vector<size_t> AnnotatedSet::CountsPerClass() const {
  std::vector<size_t> counts(schema.classes.size(), 0);
  for (const auto& e : entries) {
    const int k = schema.IndexOf(e.label);
    if (k < 0) throw DataError("label '" + e.label + "' not in schema " + schema.name);
    ++counts[k];
  }
  return counts;
}

AnnotatedSet RemapLabels(const std::vector<Annotation>& raw, const ClassSchema& schema) {
  AnnotatedSet out;
  out.schema = schema;
  for (const auto& a : raw) {
    std::string target;
    if (auto it = schema.remap.find(a.label); it != schema.remap.end()) {
      target = it->second;
    } else if (schema.IndexOf(a.label) >= 0) {
      target = a.label;
    } else {
      throw DataError("unknown source label '" + a.label + "' for clip " + a.clip_id);
    }
    if (target == kDropLabel) continue;
    out.entries.push_back({a.clip_id, target});
  }
  return out;
}

std::array<size_t, 3> SplitSizes(size_t n, const SplitRatio& ratio) {
  auto quota = [n](double r) {
    return static_cast<size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  std::array<size_t, 3> sizes = {quota(ratio.train), quota(ratio.val), quota(ratio.test)};
  size_t assigned = sizes[0] + sizes[1] + sizes[2];
  if (assigned > n) throw UsageError("split ratios sum above 1");
  // Leftovers go to test, train, val, cycling.
  constexpr int kOrder[3] = {2, 0, 1};
  for (int i = 0; assigned < n; ++i, ++assigned) ++sizes[kOrder[i % 3]];
  return sizes;
}

DataSplit StratifiedSplit(const AnnotatedSet& set, const SplitRatio& ratio, uint64_t seed) {
  if (ratio.train < 0 || ratio.val < 0 || ratio.test < 0) throw UsageError("negative split ratio");
  DataSplit split{EmptyLike(set), EmptyLike(set), EmptyLike(set)};
  for (const auto& cls : set.schema.classes) {
    std::vector<Annotation> members;
    for (const auto& e : set.entries) {
      if (e.label == cls) members.push_back(e);
    }
    if (members.empty()) continue;
    if (members.size() < 3) {
      throw DataError("class '" + cls + "' has " + std::to_string(members.size()) +
                      " samples; stratified split needs at least 3");
    }
    Rng rng(DeriveSeed(seed, "split/" + cls));
    rng.Shuffle(members);
    const auto sizes = SplitSizes(members.size(), ratio);
    size_t pos = 0;
    AnnotatedSet* parts[3] = {&split.train, &split.val, &split.test};
    for (int p = 0; p < 3; ++p) {
      for (size_t i = 0; i < sizes[p]; ++i) parts[p]->entries.push_back(members[pos++]);
    }
  }
  return split;
}

AnnotatedSet Oversample(const AnnotatedSet& train, const std::map<std::string, int>& targets,
                        uint64_t seed) {
  for (const auto& [cls, _] : targets) {
    if (train.schema.IndexOf(cls) < 0) throw DataError("oversample target for unknown class '" + cls + "'");
  }
  AnnotatedSet out = EmptyLike(train);
  for (const auto& cls : train.schema.classes) {
    std::vector<Annotation> members;
    for (const auto& e : train.entries) {
      if (e.label == cls) members.push_back(e);
    }
    auto it = targets.find(cls);
    if (it == targets.end()) {
      out.entries.insert(out.entries.end(), members.begin(), members.end());
      continue;
    }
    const size_t n = members.size();
    const size_t target = static_cast<size_t>(it->second);
    if (target < n) {
      throw DataError("oversample target " + std::to_string(target) + " for '" + cls +
                      "' is below its current count " + std::to_string(n));
    }
    if (n == 0) {
      if (target > 0) throw DataError("cannot oversample empty class '" + cls + "'");
      continue;
    }
    for (size_t rep = 0; rep < target / n; ++rep) {
      out.entries.insert(out.entries.end(), members.begin(), members.end());
    }
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(DeriveSeed(seed, "oversample/" + cls));
    rng.Shuffle(idx);
    idx.resize(target % n);
    std::sort(idx.begin(), idx.end());
    for (size_t i : idx) out.entries.push_back(members[i]);
  }
  return out;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> names)
    : class_names(std::move(names)),
      counts(class_names.size(), std::vector<long>(class_names.size(), 0)) {}

long ConfusionMatrix::Total() const {
  long t = 0;
  for (const auto& row : counts)
    for (long c : row) t += c;
  return t;
}

MetricsReport ComputeMetrics(const ConfusionMatrix& cm) {
  const size_t k = cm.counts.size();
  MetricsReport r;
  r.per_class.resize(k);
  long trace = 0;
  const long total = cm.Total();
  for (size_t c = 0; c < k; ++c) {
    const long tp = cm.counts[c][c];
    long row = 0, col = 0;
    for (size_t j = 0; j < k; ++j) {
      row += cm.counts[c][j];
      col += cm.counts[j][c];
    }
    trace += tp;
    ClassScores& s = r.per_class[c];
    s.precision = col > 0 ? static_cast<double>(tp) / col : 0.0;
    s.recall = row > 0 ? static_cast<double>(tp) / row : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    r.macro_precision += s.precision;
    r.macro_recall += s.recall;
    r.macro_f1 += s.f1;
  }
  if (k > 0) {
    r.macro_precision /= k;
    r.macro_recall /= k;
    r.macro_f1 /= k;
  }
  r.accuracy = total > 0 ? static_cast<double>(trace) / total : 0.0;
  return r;
}

std::pair<ConfusionMatrix, MetricsReport> Evaluate(const std::vector<Prediction>& predictions,
                                                   const AnnotatedSet& truth) {
  std::map<std::string, int> truth_class;
  for (const auto& e : truth.entries) {
    const int k = truth.schema.IndexOf(e.label);
    if (k < 0) throw DataError("truth label '" + e.label + "' not in schema");
    if (!truth_class.emplace(e.clip_id, k).second) {
      throw DataError("duplicate clip id in truth: " + e.clip_id);
    }
  }
  std::map<std::string, int> pred_class;
  std::vector<std::string> extra;
  for (const auto& p : predictions) {
    if (!truth_class.count(p.clip_id)) {
      extra.push_back(p.clip_id);
      continue;
    }
    const int k = truth.schema.IndexOf(p.predicted);
    if (k < 0) throw DataError("predicted label '" + p.predicted + "' not in schema");
    if (!pred_class.emplace(p.clip_id, k).second) {
      throw DataError("duplicate prediction for " + p.clip_id);
    }
  }
  std::vector<std::string> missing;
  for (const auto& [id, _] : truth_class) {
    if (!pred_class.count(id)) missing.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "prediction ids do not match truth:";
    if (!missing.empty()) {
      msg += " missing";
      for (const auto& m : missing) msg += " " + m;
    }
    if (!extra.empty()) {
      msg += " extra";
      for (const auto& x : extra) msg += " " + x;
    }
    throw DataError(msg);
  }
  ConfusionMatrix cm(truth.schema.classes);
  for (const auto& [id, t] : truth_class) ++cm.counts[t][pred_class[id]];
  return {cm, ComputeMetrics(cm)};
}

std::vector<Annotation> ReadAnnotations(const fs::path& path) {
  std::vector<Annotation> out;
  for (auto& row : ReadCsvRows(path, {"clip_path", "label"})) {
    out.push_back({std::move(row[0]), std::move(row[1])});
  }
  return out;
}

void WriteAnnotations(const std::vector<Annotation>& entries, const fs::path& path,
                      const std::map<std::string, std::string>& meta) {
  auto out = OpenOut(path);
  WriteMetaComment(out, meta);
  out << "clip_path,label\n";
  for (const auto& e : entries) out << e.clip_id << "," << e.label << "\n";
}

std::vector<Prediction> ReadPredictions(const fs::path& path) {
  std::vector<Prediction> out;
  for (auto& row : ReadCsvRows(path, {"clip_id", "predicted"})) {
    out.push_back({std::move(row[0]), std::move(row[1])});
  }
  return out;
}

void WritePredictions(const std::vector<Prediction>& preds, const fs::path& path,
                      const std::map<std::string, std::string>& meta) {
  auto out = OpenOut(path);
  WriteMetaComment(out, meta);
  out << "clip_id,predicted\n";
  for (const auto& p : preds) out << p.clip_id << "," << p.predicted << "\n";
}

void WriteMetricsJson(const MetricsReport& report, const std::vector<std::string>& class_names,
                      const fs::path& path, const std::map<std::string, std::string>& meta) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  j["meta"] = m;
  j["accuracy"] = report.accuracy;
  j["macro_precision"] = report.macro_precision;
  j["macro_recall"] = report.macro_recall;
  j["macro_f1"] = report.macro_f1;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (size_t c = 0; c < report.per_class.size(); ++c) {
    nlohmann::ordered_json e;
    e["class"] = c < class_names.size() ? class_names[c] : std::to_string(c);
    e["precision"] = report.per_class[c].precision;
    e["recall"] = report.per_class[c].recall;
    e["f1"] = report.per_class[c].f1;
    per.push_back(e);
  }
  j["per_class"] = per;
  auto out = OpenOut(path);
  out << j.dump(2) << "\n";
}

void WriteConfusionCsv(const ConfusionMatrix& cm, const fs::path& path,
                       const std::map<std::string, std::string>& meta) {
  auto out = OpenOut(path);
  WriteMetaComment(out, meta);
  out << "truth\\predicted";
  for (const auto& n : cm.class_names) out << "," << n;
  out << "\n";
  for (size_t r = 0; r < cm.counts.size(); ++r) {
    out << cm.class_names[r];
    for (long c : cm.counts[r]) out << "," << c;
    out << "\n";
  }
}

std::map<std::string, std::string> ReadCommentMeta(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, std::string> meta;
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') return meta;
  for (const auto& tok : SplitString(line.substr(1), ' ')) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) meta[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return meta;
}

}  // namespace camflow
