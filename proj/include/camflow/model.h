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

#ifndef CAMFLOW_MODEL_H_
#define CAMFLOW_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "camflow/videoio.h"

namespace camflow {

// Source of the backbone feature vector fused with the descriptor.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> Embed(const FrameSequence& seq) const = 0;
  virtual int dimension() const = 0;
  virtual std::string descriptor() const = 0;
};

// Stand-in backbone: a clip-averaged 32-bin intensity histogram and 3x3
// per-cell mean absolute frame differences (scaled to [0, 1]), pushed
// through a fixed seeded Gaussian projection.
class StubEmbedding : public EmbeddingProvider {
 public:
  static constexpr int kHistogramBins = 32;
  static constexpr int kGrid = 3;
  static constexpr int kRawDim = kHistogramBins + kGrid * kGrid;

  explicit StubEmbedding(uint64_t seed = 0, int dimension = 64);

  std::vector<double> Embed(const FrameSequence& seq) const override;
  int dimension() const override { return dimension_; }
  std::string descriptor() const override;

  // Pre-projection statistics.
  static std::vector<double> RawFeatures(const FrameSequence& seq);
  const std::vector<double>& projection() const { return projection_; }

 private:
  uint64_t seed_;
  int dimension_;
  std::vector<double> projection_;  // dimension x kRawDim, row-major
};

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kProbabilityFloor = 1e-12;

enum class HeadKind { kDgmeOnly, kFusion };
std::string ToString(HeadKind kind);
HeadKind ParseHeadKind(const std::string& name);

// logits = W [embedding, alpha * LayerNorm(descriptor)] + b.
struct FusionHeadParams {
  std::vector<std::string> class_names;
  int embed_dim = 0;
  int desc_dim = 0;
  double alpha = 1.0;
  std::vector<double> ln_gain;
  std::vector<double> ln_bias;
  std::vector<double> weights;  // num_classes x (embed_dim + desc_dim), row-major
  std::vector<double> bias;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  int input_dim() const { return embed_dim + desc_dim; }

  // alpha = 1, gain = 1, bias = 0, W ~ U(-1/sqrt(C+D), 1/sqrt(C+D)), b = 0.
  static FusionHeadParams Init(std::vector<std::string> class_names, int embed_dim,
                               int desc_dim, uint64_t seed);
  void Validate() const;
};

std::vector<double> LayerNorm(std::span<const double> x, std::span<const double> gain,
                              std::span<const double> bias, double eps = kLayerNormEps);

std::vector<double> Softmax(std::span<const double> logits);

std::vector<double> FusionLogits(std::span<const double> embedding,
                                 std::span<const double> descriptor,
                                 const FusionHeadParams& params);

std::vector<double> FusionForward(std::span<const double> embedding,
                                  std::span<const double> descriptor,
                                  const FusionHeadParams& params);

// -log(max(probs[true_class], kProbabilityFloor)).
double CrossEntropy(std::span<const double> probs, int true_class);

struct Sample {
  std::string clip_id;
  std::vector<double> embedding;   // empty for the descriptor-only head
  std::vector<double> descriptor;
  int label = 0;
};

// Gradient buffers shaped like FusionHeadParams.
struct HeadGradients {
  double alpha = 0.0;
  std::vector<double> ln_gain;
  std::vector<double> ln_bias;
  std::vector<double> weights;
  std::vector<double> bias;

  static HeadGradients ZerosLike(const FusionHeadParams& p);
};

// Mean cross-entropy over the batch and, when grads is non-null, its exact
// gradient with respect to every head parameter.
double BatchLoss(std::span<const Sample> batch, const FusionHeadParams& params,
                 HeadGradients* grads);

// Parameters flattened in the order alpha, ln_gain, ln_bias, weights, bias.
std::vector<double> FlattenParams(const FusionHeadParams& p);
void UnflattenParams(std::span<const double> flat, FusionHeadParams& p);
std::vector<double> FlattenGradients(const HeadGradients& g);
// 1 where decoupled weight decay applies (weights only).
std::vector<uint8_t> DecayMask(const FusionHeadParams& p);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

class AdamW {
 public:
  AdamW(size_t size, AdamWConfig cfg, std::vector<uint8_t> decay_mask);
  void Step(std::span<double> params, std::span<const double> grads, double lr);
  long steps() const { return t_; }

 private:
  AdamWConfig cfg_;
  std::vector<uint8_t> decay_mask_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

// floor + (lr_max - floor) * (1 + cos(pi * step / total)) / 2.
double CosineLr(long step, long total_steps, double lr_max, double floor);

enum class EarlyStopMetric { kMacroF1, kAccuracy };

struct TrainConfig {
  int epochs = 12;
  int batch_size = 32;
  double lr_max = 1e-3;
  AdamWConfig adamw;
  double cosine_floor = 1e-5;
  int early_stop_patience = 3;
  EarlyStopMetric early_stop_metric = EarlyStopMetric::kMacroF1;
  uint64_t seed = 0;

  void Validate() const;
};

struct EpochLog {
  int epoch = 0;
  long step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double alpha = 0.0;
};

struct TrainResult {
  FusionHeadParams params;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

// Mini-batch AdamW under a cosine schedule; early stopping on the validation
// metric returns the best epoch's parameters.
TrainResult Train(HeadKind kind, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const std::vector<std::string>& class_names,
                  const TrainConfig& cfg);

// Argmax class index (lowest index wins ties).
int PredictClass(const Sample& sample, const FusionHeadParams& params);
double MacroF1(const std::vector<Sample>& set, const FusionHeadParams& params);

struct ModelFile {
  HeadKind kind = HeadKind::kDgmeOnly;
  FusionHeadParams params;
  std::map<std::string, std::string> meta;  // config hashes, seed, domain, ...
};

void WriteModelJson(const ModelFile& model, const std::filesystem::path& path);
ModelFile ReadModelJson(const std::filesystem::path& path);

void WriteTrainingLog(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace camflow

#endif  // CAMFLOW_MODEL_H_
