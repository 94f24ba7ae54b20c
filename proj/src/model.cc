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

#include "camflow/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "camflow/common.h"
#include "camflow/dgme.h"
#include "camflow/eval.h"
#include "json.hpp"

namespace camflow {
namespace fs = std::filesystem;

StubEmbedding::StubEmbedding(uint64_t seed, int dimension)
    : seed_(seed), dimension_(dimension) {
  if (dimension < 1) throw UsageError("embedding dimension must be >= 1");
  Rng rng(DeriveSeed(seed, "stub-projection"));
  projection_.resize(static_cast<size_t>(dimension) * kRawDim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kRawDim));
  for (double& w : projection_) w = rng.Normal() * scale;
}

std::string StubEmbedding::descriptor() const {
  return "stub(seed=" + std::to_string(seed_) + ",dim=" + std::to_string(dimension_) + ")";
}

std::vector<double> StubEmbedding::RawFeatures(const FrameSequence& seq) {
  seq.Validate();
  std::vector<double> raw(kRawDim, 0.0);
  const double px = static_cast<double>(seq.width()) * seq.height();
  for (const auto& f : seq.frames) {
    for (uint8_t p : f.pixels) raw[p * kHistogramBins / 256] += 1.0;
  }
  for (int b = 0; b < kHistogramBins; ++b) raw[b] /= px * seq.frame_count();

  const auto cells = GridCells(seq.width(), seq.height(), kGrid);
  const int pairs = seq.frame_count() - 1;
  for (size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    double energy = 0.0;
    for (int t = 0; t < pairs; ++t) {
      const auto& a = seq.frames[t];
      const auto& b = seq.frames[t + 1];
      for (int y = cell.y0; y < cell.y0 + cell.height; ++y)
        for (int x = cell.x0; x < cell.x0 + cell.width; ++x)
          energy += std::abs(int(a.at(x, y)) - int(b.at(x, y)));
    }
    raw[kHistogramBins + c] =
        energy / (255.0 * pairs * static_cast<double>(cell.width) * cell.height);
  }
  return raw;
}

std::vector<double> StubEmbedding::Embed(const FrameSequence& seq) const {
  const auto raw = RawFeatures(seq);
  std::vector<double> out(dimension_, 0.0);
  for (int i = 0; i < dimension_; ++i) {
    const double* row = &projection_[static_cast<size_t>(i) * kRawDim];
    out[i] = std::inner_product(raw.begin(), raw.end(), row, 0.0);
  }
  return out;
}

std::string ToString(HeadKind kind) { return kind == HeadKind::kFusion ? "fusion" : "dgme-only"; }

HeadKind ParseHeadKind(const std::string& name) {
  if (name == "fusion") return HeadKind::kFusion;
  if (name == "dgme-only" || name == "dgme_only") return HeadKind::kDgmeOnly;
  throw UsageError("unknown mode '" + name + "' (valid: dgme-only,fusion)");
}

FusionHeadParams FusionHeadParams::Init(std::vector<std::string> class_names, int embed_dim,
                                        int desc_dim, uint64_t seed) {
  FusionHeadParams p;
  p.class_names = std::move(class_names);
  p.embed_dim = embed_dim;
  p.desc_dim = desc_dim;
  p.alpha = 1.0;
  p.ln_gain.assign(desc_dim, 1.0);
  p.ln_bias.assign(desc_dim, 0.0);
  const int in = embed_dim + desc_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Rng rng(DeriveSeed(seed, "head-init"));
  p.weights.resize(static_cast<size_t>(p.num_classes()) * in);
  for (double& w : p.weights) w = rng.Uniform(-bound, bound);
  p.bias.assign(p.num_classes(), 0.0);
  p.Validate();
  return p;
}

void FusionHeadParams::Validate() const {
  if (class_names.empty()) throw DataError("model has no classes");
  if (desc_dim < 2) throw DataError("descriptor dimension must be >= 2");
  if (embed_dim < 0) throw DataError("negative embedding dimension");
  if (ln_gain.size() != static_cast<size_t>(desc_dim) ||
      ln_bias.size() != static_cast<size_t>(desc_dim) ||
      weights.size() != static_cast<size_t>(num_classes()) * input_dim() ||
      bias.size() != static_cast<size_t>(num_classes())) {
    throw DataError("model parameter shapes are inconsistent");
  }
}

std::vector<double> LayerNorm(std::span<const double> x, std::span<const double> gain,
                              std::span<const double> bias, double eps) {
  const size_t d = x.size();
  if (gain.size() != d || bias.size() != d) throw DataError("layer norm shape mismatch");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / d;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= d;
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> y(d);
  for (size_t i = 0; i < d; ++i) y[i] = gain[i] * (x[i] - mean) * inv + bias[i];
  return y;
}

std::vector<double> Softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logits[i] - mx);
  for (double& v : p) v /= sum;
  return p;
}

namespace {

void CheckDims(std::span<const double> embedding, std::span<const double> descriptor,
               const FusionHeadParams& params) {
  if (embedding.size() != static_cast<size_t>(params.embed_dim) ||
      descriptor.size() != static_cast<size_t>(params.desc_dim)) {
    throw DataError("input dimensions (" + std::to_string(embedding.size()) + ", " +
                    std::to_string(descriptor.size()) + ") do not match model (" +
                    std::to_string(params.embed_dim) + ", " + std::to_string(params.desc_dim) +
                    ")");
  }
}

// Fused input vector [embedding, alpha * normalized].
std::vector<double> FusedInput(std::span<const double> embedding,
                               const std::vector<double>& normalized, double alpha) {
  std::vector<double> z(embedding.begin(), embedding.end());
  z.reserve(embedding.size() + normalized.size());
  for (double n : normalized) z.push_back(alpha * n);
  return z;
}

std::vector<double> Affine(const std::vector<double>& z, const FusionHeadParams& p) {
  const size_t in = z.size();
  std::vector<double> logits(p.num_classes());
  for (int k = 0; k < p.num_classes(); ++k) {
    const double* row = &p.weights[static_cast<size_t>(k) * in];
    logits[k] = std::inner_product(z.begin(), z.end(), row, p.bias[k]);
  }
  return logits;
}

}  // namespace

std::vector<double> FusionLogits(std::span<const double> embedding,
                                 std::span<const double> descriptor,
                                 const FusionHeadParams& params) {
  CheckDims(embedding, descriptor, params);
  const auto n = LayerNorm(descriptor, params.ln_gain, params.ln_bias);
  return Affine(FusedInput(embedding, n, params.alpha), params);
}

std::vector<double> FusionForward(std::span<const double> embedding,
                                  std::span<const double> descriptor,
                                  const FusionHeadParams& params) {
  return Softmax(FusionLogits(embedding, descriptor, params));
}

double CrossEntropy(std::span<const double> probs, int true_class) {
  if (true_class < 0 || static_cast<size_t>(true_class) >= probs.size()) {
    throw DataError("class index " + std::to_string(true_class) + " out of range");
  }
  return -std::log(std::max(probs[true_class], kProbabilityFloor));
}

HeadGradients HeadGradients::ZerosLike(const FusionHeadParams& p) {
  HeadGradients g;
  g.ln_gain.assign(p.ln_gain.size(), 0.0);
  g.ln_bias.assign(p.ln_bias.size(), 0.0);
  g.weights.assign(p.weights.size(), 0.0);
  g.bias.assign(p.bias.size(), 0.0);
  return g;
}

double BatchLoss(std::span<const Sample> batch, const FusionHeadParams& params,
                 HeadGradients* grads) {
  if (batch.empty()) throw DataError("empty batch");
  if (grads) *grads = HeadGradients::ZerosLike(params);
  const size_t d = params.desc_dim;
  const size_t c = params.embed_dim;
  const size_t in = c + d;
  double total = 0.0;
  for (const Sample& s : batch) {
    CheckDims(s.embedding, s.descriptor, params);
    const auto& x = s.descriptor;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / d;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    std::vector<double> xhat(d), n(d);
    for (size_t i = 0; i < d; ++i) {
      xhat[i] = (x[i] - mean) * inv;
      n[i] = params.ln_gain[i] * xhat[i] + params.ln_bias[i];
    }
    const auto z = FusedInput(s.embedding, n, params.alpha);
    const auto p = Softmax(Affine(z, params));
    total += CrossEntropy(p, s.label);
    if (!grads || p[s.label] < kProbabilityFloor) continue;  // floored loss is flat

    std::vector<double> dl = p;
    dl[s.label] -= 1.0;
    std::vector<double> dz(in, 0.0);
    for (int k = 0; k < params.num_classes(); ++k) {
      const double* row = &params.weights[static_cast<size_t>(k) * in];
      double* grow = &grads->weights[static_cast<size_t>(k) * in];
      grads->bias[k] += dl[k];
      for (size_t j = 0; j < in; ++j) {
        grow[j] += dl[k] * z[j];
        dz[j] += dl[k] * row[j];
      }
    }
    for (size_t i = 0; i < d; ++i) {
      const double dzi = dz[c + i];
      grads->alpha += dzi * n[i];
      const double dn = params.alpha * dzi;
      grads->ln_gain[i] += dn * xhat[i];
      grads->ln_bias[i] += dn;
    }
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  if (grads) {
    grads->alpha *= scale;
    for (auto* v : {&grads->ln_gain, &grads->ln_bias, &grads->weights, &grads->bias})
      for (double& g : *v) g *= scale;
  }
  return total * scale;
}

std::vector<double> FlattenParams(const FusionHeadParams& p) {
  std::vector<double> flat;
  flat.reserve(1 + p.ln_gain.size() + p.ln_bias.size() + p.weights.size() + p.bias.size());
  flat.push_back(p.alpha);
  flat.insert(flat.end(), p.ln_gain.begin(), p.ln_gain.end());
  flat.insert(flat.end(), p.ln_bias.begin(), p.ln_bias.end());
  flat.insert(flat.end(), p.weights.begin(), p.weights.end());
  flat.insert(flat.end(), p.bias.begin(), p.bias.end());
  return flat;
}

void UnflattenParams(std::span<const double> flat, FusionHeadParams& p) {
  size_t pos = 0;
  p.alpha = flat[pos++];
  for (auto* v : {&p.ln_gain, &p.ln_bias, &p.weights, &p.bias}) {
    std::copy_n(flat.begin() + pos, v->size(), v->begin());
    pos += v->size();
  }
}

std::vector<double> FlattenGradients(const HeadGradients& g) {
  std::vector<double> flat;
  flat.push_back(g.alpha);
  for (const auto* v : {&g.ln_gain, &g.ln_bias, &g.weights, &g.bias})
    flat.insert(flat.end(), v->begin(), v->end());
  return flat;
}

std::vector<uint8_t> DecayMask(const FusionHeadParams& p) {
  std::vector<uint8_t> mask(1 + p.ln_gain.size() + p.ln_bias.size(), 0);
  mask.resize(mask.size() + p.weights.size(), 1);
  mask.resize(mask.size() + p.bias.size(), 0);
  return mask;
}

AdamW::AdamW(size_t size, AdamWConfig cfg, std::vector<uint8_t> decay_mask)
    : cfg_(cfg), decay_mask_(std::move(decay_mask)), m_(size, 0.0), v_(size, 0.0) {
  if (decay_mask_.size() != size) throw DataError("decay mask size mismatch");
}

void AdamW::Step(std::span<double> params, std::span<const double> grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    if (decay_mask_[i]) params[i] *= 1.0 - lr * cfg_.weight_decay;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

double CosineLr(long step, long total_steps, double lr_max, double floor) {
  if (total_steps <= 0) return lr_max;
  const double t = std::clamp(static_cast<double>(step) / total_steps, 0.0, 1.0);
  return floor + (lr_max - floor) * 0.5 * (1.0 + std::cos(M_PI * t));
}

void TrainConfig::Validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  if (!(lr_max > 0.0) || !(cosine_floor > 0.0) || adamw.weight_decay < 0.0 || !(adamw.eps > 0.0)) {
    throw UsageError("learning rates and eps must be positive");
  }
  if (!(adamw.beta1 > 0.0 && adamw.beta1 < 1.0 && adamw.beta2 > 0.0 && adamw.beta2 < 1.0)) {
    throw UsageError("AdamW betas must lie in (0, 1)");
  }
  if (early_stop_patience < 1) throw UsageError("early stopping patience must be >= 1");
}

int PredictClass(const Sample& sample, const FusionHeadParams& params) {
  const auto logits = FusionLogits(sample.embedding, sample.descriptor, params);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

namespace {

MetricsReport SetMetrics(const std::vector<Sample>& set, const FusionHeadParams& params) {
  ConfusionMatrix cm(params.class_names);
  for (const auto& s : set) ++cm.counts[s.label][PredictClass(s, params)];
  return ComputeMetrics(cm);
}

}  // namespace

double MacroF1(const std::vector<Sample>& set, const FusionHeadParams& params) {
  return SetMetrics(set, params).macro_f1;
}

TrainResult Train(HeadKind kind, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const std::vector<std::string>& class_names,
                  const TrainConfig& cfg) {
  cfg.Validate();
  if (train_set.empty()) throw DataError("empty training set");
  if (val_set.empty()) throw DataError("empty validation set");
  const int desc_dim = static_cast<int>(train_set.front().descriptor.size());
  const int embed_dim =
      kind == HeadKind::kFusion ? static_cast<int>(train_set.front().embedding.size()) : 0;
  if (kind == HeadKind::kFusion && embed_dim == 0) {
    throw DataError("fusion head needs embeddings");
  }

  // The descriptor-only head is the fusion head with an empty backbone block.
  auto adapt = [&](const std::vector<Sample>& in) {
    std::vector<Sample> out = in;
    for (auto& s : out) {
      if (kind == HeadKind::kDgmeOnly) s.embedding.clear();
      if (s.descriptor.size() != static_cast<size_t>(desc_dim) ||
          s.embedding.size() != static_cast<size_t>(embed_dim)) {
        throw DataError("sample " + s.clip_id + " has mismatched dimensions");
      }
      if (s.label < 0 || s.label >= static_cast<int>(class_names.size())) {
        throw DataError("sample " + s.clip_id + " has an out-of-range label");
      }
    }
    return out;
  };
  const std::vector<Sample> train = adapt(train_set);
  const std::vector<Sample> val = adapt(val_set);

  FusionHeadParams params = FusionHeadParams::Init(class_names, embed_dim, desc_dim, cfg.seed);
  std::vector<double> flat = FlattenParams(params);
  AdamW opt(flat.size(), cfg.adamw, DecayMask(params));

  const long steps_per_epoch = (static_cast<long>(train.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = steps_per_epoch * cfg.epochs;

  TrainResult result;
  result.params = params;
  double best_score = -1.0;
  int stale = 0;
  long step = 0;
  std::vector<size_t> order(train.size());
  std::vector<Sample> batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(DeriveSeed(cfg.seed, "epoch/" + std::to_string(epoch)));
    rng.Shuffle(order);
    double loss_sum = 0.0;
    double lr = cfg.lr_max;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      HeadGradients grads;
      const double loss = BatchLoss(batch, params, &grads);
      if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
      loss_sum += loss * static_cast<double>(batch.size());
      lr = CosineLr(step, total_steps, cfg.lr_max, cfg.cosine_floor);
      opt.Step(flat, FlattenGradients(grads), lr);
      UnflattenParams(flat, params);
      ++step;
    }
    const MetricsReport vm = SetMetrics(val, params);
    EpochLog row;
    row.epoch = epoch;
    row.step = step;
    row.lr = lr;
    row.train_loss = loss_sum / static_cast<double>(train.size());
    row.val_macro_f1 = vm.macro_f1;
    row.alpha = params.alpha;
    result.log.push_back(row);

    const double score =
        cfg.early_stop_metric == EarlyStopMetric::kMacroF1 ? vm.macro_f1 : vm.accuracy;
    if (score > best_score) {
      best_score = score;
      result.params = params;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.early_stop_patience) {
      break;
    }
  }
  return result;
}

void WriteModelJson(const ModelFile& model, const fs::path& path) {
  const auto& p = model.params;
  p.Validate();
  nlohmann::ordered_json j;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : model.meta) meta[k] = v;
  j["meta"] = meta;
  j["kind"] = ToString(model.kind);
  j["class_names"] = p.class_names;
  j["embed_dim"] = p.embed_dim;
  j["desc_dim"] = p.desc_dim;
  j["layer_norm_eps"] = kLayerNormEps;
  j["alpha"] = p.alpha;
  j["ln_gain"] = p.ln_gain;
  j["ln_bias"] = p.ln_bias;
  j["weights"] = p.weights;
  j["bias"] = p.bias;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

ModelFile ReadModelJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  ModelFile m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.kind = ParseHeadKind(j.at("kind").get<std::string>());
    if (j.contains("meta")) m.meta = j.at("meta").get<std::map<std::string, std::string>>();
    auto& p = m.params;
    p.class_names = j.at("class_names").get<std::vector<std::string>>();
    p.embed_dim = j.at("embed_dim").get<int>();
    p.desc_dim = j.at("desc_dim").get<int>();
    p.alpha = j.at("alpha").get<double>();
    p.ln_gain = j.at("ln_gain").get<std::vector<double>>();
    p.ln_bias = j.at("ln_bias").get<std::vector<double>>();
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed model file: " + e.what());
  }
  m.params.Validate();
  return m;
}

void WriteTrainingLog(const std::vector<EpochLog>& log, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,step,lr,train_loss,val_macro_f1,alpha\n";
  for (const auto& r : log) {
    out << r.epoch << "," << r.step << "," << FormatG(r.lr, 9) << "," << FormatG(r.train_loss, 9)
        << "," << FormatG(r.val_macro_f1, 9) << "," << FormatG(r.alpha, 17) << "\n";
  }
}

}  // namespace camflow
