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

#ifndef CAMFLOW_COMMANDS_H_
#define CAMFLOW_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "camflow/dgme.h"
#include "camflow/eval.h"
#include "camflow/flow.h"
#include "camflow/model.h"
#include "camflow/synth.h"
#include "camflow/videoio.h"

// Pipeline steps behind the command-line tool. Each Run* function reads and
// writes the on-disk artifacts of one subcommand and throws camflow::Error
// subclasses on failure.
namespace camflow::commands {

struct SynthOptions {
  std::vector<std::string> classes = {"static", "pan", "tilt", "zoom"};
  int per_class = 10;
  std::string domain = "modern";
  uint64_t seed = 0;
  int frames = 12;
  int size = 128;
  int jobs = 1;
  std::filesystem::path out;
};
void RunSynth(const SynthOptions& o);

struct ExtractOptions {
  std::filesystem::path annotations;
  std::filesystem::path out;
  std::filesystem::path embeddings_out;  // optional stub-embedding CSV
  DgmeConfig dgme;
  FarnebackConfig flow;
  SamplingSpec sampling;
  AugmentSpec augment;
  uint64_t embedding_seed = 0;
  int embedding_dim = 64;
  std::string domain;  // defaults to corpus.json next to the annotations
  uint64_t seed = 0;
  int jobs = 1;
};
void RunExtract(const ExtractOptions& o);

struct StatsOptions {
  std::filesystem::path features;
  std::filesystem::path out;
};
void RunStats(const StatsOptions& o);

struct NormalizeOptions {
  std::filesystem::path features;
  std::filesystem::path stats;
  std::filesystem::path out;
};
void RunNormalize(const NormalizeOptions& o);

struct SplitOptions {
  std::filesystem::path annotations;
  std::string schema = "modern4";
  SplitRatio ratio;
  uint64_t seed = 0;
  std::filesystem::path out_dir;
};
void RunSplit(const SplitOptions& o);

struct OversampleOptions {
  std::filesystem::path split;
  std::string schema = "modern4";
  std::map<std::string, int> targets;  // empty: schema defaults
  uint64_t seed = 0;
  std::filesystem::path out;
};
void RunOversample(const OversampleOptions& o);

struct TrainOptions {
  HeadKind mode = HeadKind::kDgmeOnly;
  std::string schema = "modern4";
  std::filesystem::path features;
  std::filesystem::path val_features;  // defaults to features
  std::filesystem::path embeddings;
  std::filesystem::path val_embeddings;  // defaults to embeddings
  std::filesystem::path train_split;
  std::filesystem::path val_split;
  std::filesystem::path out;
  std::filesystem::path log;
  TrainConfig train;
};
// Returns warnings emitted (also written to stderr by the tool).
std::vector<std::string> RunTrain(const TrainOptions& o);

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path features;
  std::filesystem::path embeddings;
  std::filesystem::path split;  // optional subset of clip ids
  std::filesystem::path out;
};
std::vector<std::string> RunPredict(const PredictOptions& o);

struct EvalOptions {
  std::filesystem::path predictions;
  std::filesystem::path truth;
  std::string schema = "modern4";
  std::filesystem::path metrics_out;
  std::filesystem::path confusion_out;
};
MetricsReport RunEval(const EvalOptions& o);

struct VizOptions {
  std::string kind;  // rose | grid
  std::filesystem::path features;
  std::string label;    // rose: class to aggregate
  std::string clip_id;  // grid: clip to draw
  int grid = 3;
  int bins = 12;
  std::filesystem::path out;
};
void RunViz(const VizOptions& o);

}  // namespace camflow::commands

#endif  // CAMFLOW_COMMANDS_H_
