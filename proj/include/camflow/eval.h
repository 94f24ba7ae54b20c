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

#ifndef CAMFLOW_EVAL_H_
#define CAMFLOW_EVAL_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace camflow {

inline constexpr const char* kDropLabel = "DROP";

// Target label set plus the mapping from source-dataset labels. Canonical
// class names map to themselves without an explicit entry.
struct ClassSchema {
  std::string name;
  std::vector<std::string> classes;
  std::map<std::string, std::string> remap;  // source -> class or DROP
  std::map<std::string, int> oversample_targets;

  int IndexOf(const std::string& label) const;  // -1 when absent
  void Validate() const;
};

ClassSchema ParseSchemaJson(const std::string& text, const std::string& origin);
// Accepts a path to a schema file or the name of a bundled schema
// (modern4, historian5).
ClassSchema LoadSchema(const std::string& name_or_path);
std::filesystem::path SchemaDirectory();

struct Annotation {
  std::string clip_id;
  std::string label;
};

struct AnnotatedSet {
  std::vector<Annotation> entries;
  ClassSchema schema;

  std::vector<size_t> CountsPerClass() const;
};

// Throws DataError for labels absent from both the remap table and the
// class list; DROP entries are removed.
AnnotatedSet RemapLabels(const std::vector<Annotation>& raw, const ClassSchema& schema);

struct SplitRatio {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct DataSplit {
  AnnotatedSet train;
  AnnotatedSet val;
  AnnotatedSet test;
};

// Per class: seeded shuffle, floor quotas, leftovers handed out one at a time
// in the order test, train, val. Classes are concatenated in schema order.
DataSplit StratifiedSplit(const AnnotatedSet& set, const SplitRatio& ratio, uint64_t seed);

// Quota rule alone: (train, val, test) sizes for n samples.
std::array<size_t, 3> SplitSizes(size_t n, const SplitRatio& ratio);

// Repeats each listed class floor(target / n) times and adds a seeded sample
// without replacement of (target mod n) entries. Unlisted classes pass through.
AnnotatedSet Oversample(const AnnotatedSet& train, const std::map<std::string, int>& targets,
                        uint64_t seed);

struct ConfusionMatrix {
  std::vector<std::string> class_names;
  std::vector<std::vector<long>> counts;  // rows = truth, cols = prediction

  explicit ConfusionMatrix(std::vector<std::string> names = {});
  long Total() const;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::vector<ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

// 0/0 resolves to 0 for precision, recall and F1.
MetricsReport ComputeMetrics(const ConfusionMatrix& cm);

struct Prediction {
  std::string clip_id;
  std::string predicted;
};

// Prediction ids must match truth ids exactly (missing and extra ids are
// reported).
std::pair<ConfusionMatrix, MetricsReport> Evaluate(const std::vector<Prediction>& predictions,
                                                   const AnnotatedSet& truth);

// CSV helpers. Annotation files are `clip_path,label`.
std::vector<Annotation> ReadAnnotations(const std::filesystem::path& path);
// Optional metadata goes into a leading "# key=value ..." comment line.
void WriteAnnotations(const std::vector<Annotation>& entries, const std::filesystem::path& path,
                      const std::map<std::string, std::string>& meta = {});
std::vector<Prediction> ReadPredictions(const std::filesystem::path& path);
void WritePredictions(const std::vector<Prediction>& preds, const std::filesystem::path& path,
                      const std::map<std::string, std::string>& meta = {});

void WriteMetricsJson(const MetricsReport& report, const std::vector<std::string>& class_names,
                      const std::filesystem::path& path,
                      const std::map<std::string, std::string>& meta = {});
void WriteConfusionCsv(const ConfusionMatrix& cm, const std::filesystem::path& path,
                       const std::map<std::string, std::string>& meta = {});

// Parses a leading "# key=value ..." line; empty when the file has none.
std::map<std::string, std::string> ReadCommentMeta(const std::filesystem::path& path);

}  // namespace camflow

#endif  // CAMFLOW_EVAL_H_
