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

#include "camflow/commands.h"

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

#include "camflow/common.h"
#include "camflow/viz.h"
#include "json.hpp"

namespace camflow::commands {
namespace fs = std::filesystem;

namespace {

constexpr const char* kUncalibrated = "none";

std::map<std::string, std::string> BaseMeta(uint64_t seed) {
  return {{"tool", "camflow"}, {"version", kVersion}, {"seed", std::to_string(seed)}};
}

void EnsureParent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void RequirePath(const fs::path& p, const std::string& flag) {
  if (p.empty()) throw UsageError("missing required option " + flag);
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string CorpusDomain(const fs::path& annotations) {
  const fs::path meta = annotations.parent_path() / "corpus.json";
  if (!fs::is_regular_file(meta)) return "unknown";
  try {
    return nlohmann::json::parse(ReadText(meta)).value("domain", "unknown");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta.string() + ": malformed corpus metadata: " + e.what());
  }
}

// Id of a stats file: changes whenever any statistic does.
std::string StatsId(const NormStats& s) {
  std::string text = s.config_hash + ";" + std::to_string(s.source_count);
  for (double v : s.mean) text += ";" + FormatG(v, 17);
  for (double v : s.std) text += ";" + FormatG(v, 17);
  return HexDigest(Fnv1a64(text));
}

std::unordered_map<std::string, const FeatureRow*> IndexRows(const FeatureTable& t,
                                                             const fs::path& origin) {
  std::unordered_map<std::string, const FeatureRow*> index;
  for (const auto& r : t.rows) {
    if (!index.emplace(r.clip_id, &r).second) {
      throw DataError(origin.string() + ": duplicate clip id " + r.clip_id);
    }
  }
  return index;
}

const FeatureRow& Lookup(const std::unordered_map<std::string, const FeatureRow*>& index,
                         const std::string& id, const fs::path& origin) {
  auto it = index.find(id);
  if (it == index.end()) throw DataError(origin.string() + ": no row for clip " + id);
  return *it->second;
}

struct Inputs {
  FeatureTable features;
  FeatureTable embeddings;
  bool has_embeddings = false;
};

Inputs LoadInputs(const fs::path& features, const fs::path& embeddings) {
  Inputs in;
  in.features = ReadFeatureCsv(features);
  if (!embeddings.empty()) {
    in.embeddings = ReadFeatureCsv(embeddings);
    in.has_embeddings = true;
  }
  return in;
}

std::vector<Sample> BuildSamples(const std::vector<Annotation>& entries, const ClassSchema& schema,
                                 const Inputs& in, const fs::path& features_path,
                                 const fs::path& embeddings_path, bool with_embeddings) {
  const auto frows = IndexRows(in.features, features_path);
  std::unordered_map<std::string, const FeatureRow*> erows;
  if (with_embeddings) erows = IndexRows(in.embeddings, embeddings_path);
  std::vector<Sample> out;
  out.reserve(entries.size());
  for (const auto& a : entries) {
    Sample s;
    s.clip_id = a.clip_id;
    s.label = schema.IndexOf(a.label);
    if (s.label < 0) throw DataError("label '" + a.label + "' of " + a.clip_id + " not in schema " + schema.name);
    s.descriptor = Lookup(frows, a.clip_id, features_path).values;
    if (with_embeddings) s.embedding = Lookup(erows, a.clip_id, embeddings_path).values;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

void RunSynth(const SynthOptions& o) {
  RequirePath(o.out, "--out");
  CorpusOptions c;
  for (const auto& name : o.classes) c.classes.push_back(ParseMotionClass(name));
  if (c.classes.empty()) throw UsageError("no classes given");
  if (o.per_class < 1) throw UsageError("--per-class must be at least 1");
  c.per_class = o.per_class;
  c.domain = ParseDomain(o.domain);
  c.seed = o.seed;
  c.frames = o.frames;
  c.size = o.size;
  c.jobs = o.jobs;
  MakeCorpus(c, o.out);
}

void RunExtract(const ExtractOptions& o) {
  RequirePath(o.annotations, "--ann");
  RequirePath(o.out, "--out");
  o.dgme.Validate();
  o.flow.Validate();
  o.sampling.Validate();
  o.augment.Validate();
  const auto rows = ReadAnnotations(o.annotations);
  if (rows.empty()) throw DataError(o.annotations.string() + ": no clips listed");
  const fs::path base = o.annotations.parent_path();
  const bool want_embeddings = !o.embeddings_out.empty();
  std::unique_ptr<StubEmbedding> embedder;
  if (want_embeddings) embedder = std::make_unique<StubEmbedding>(o.embedding_seed, o.embedding_dim);

  std::vector<FeatureRow> desc(rows.size()), emb(rows.size());
  ParallelFor(rows.size(), o.jobs, [&](size_t i) {
    const auto& a = rows[i];
    try {
      FrameSequence seq = SampleFrames(ReadSource(base / a.clip_id), o.sampling);
      seq.clip_id = a.clip_id;
      seq = o.augment.enabled
                ? PreprocessTrain(seq, o.sampling.target_width, o.sampling.target_height, o.augment)
                : PreprocessEval(seq, o.sampling.target_width, o.sampling.target_height);
      desc[i] = {a.clip_id, a.label, ComputeDgme(seq, o.dgme, o.flow).values};
      if (want_embeddings) emb[i] = {a.clip_id, a.label, embedder->Embed(seq)};
    } catch (const NumericError& e) {
      throw NumericError("row " + std::to_string(i + 1) + " (" + a.clip_id + "): " + e.what());
    } catch (const Error& e) {
      throw DataError("row " + std::to_string(i + 1) + " (" + a.clip_id + "): " + e.what());
    }
  });

  auto meta = BaseMeta(o.seed);
  meta["config_hash"] = DgmeConfigHash(o.dgme, o.flow);
  meta["domain"] = o.domain.empty() ? CorpusDomain(o.annotations) : o.domain;
  meta["calibrated"] = kUncalibrated;
  meta["grid"] = std::to_string(o.dgme.grid);
  meta["bins"] = std::to_string(o.dgme.directional_bins);
  meta["sampling"] = std::to_string(o.sampling.frames_per_clip) + "x" +
                     std::to_string(o.sampling.frame_interval) + "@" +
                     std::to_string(o.sampling.target_width) + "x" +
                     std::to_string(o.sampling.target_height);
  meta["augment"] = o.augment.enabled ? "train" : "eval";
  EnsureParent(o.out);
  WriteFeatureCsv({meta, std::move(desc)}, o.out);
  if (want_embeddings) {
    auto emeta = meta;
    emeta.erase("calibrated");
    emeta.erase("grid");
    emeta.erase("bins");
    emeta["embedding"] = embedder->descriptor();
    EnsureParent(o.embeddings_out);
    WriteFeatureCsv({emeta, std::move(emb)}, o.embeddings_out, "e");
  }
}

void RunStats(const StatsOptions& o) {
  RequirePath(o.features, "--features");
  RequirePath(o.out, "--out");
  const auto table = ReadFeatureCsv(o.features);
  if (table.Meta("calibrated", kUncalibrated) != kUncalibrated) {
    throw DataError(o.features.string() + ": features are already calibrated");
  }
  std::vector<std::vector<double>> rows;
  for (const auto& r : table.rows) rows.push_back(r.values);
  const auto stats = FitStats(rows, table.Meta("config_hash"));
  auto meta = BaseMeta(0);
  meta["seed"] = table.Meta("seed", "0");
  meta["domain"] = table.Meta("domain", "unknown");
  meta["source"] = o.features.filename().string();
  EnsureParent(o.out);
  WriteStatsJson(stats, o.out, meta);
}

void RunNormalize(const NormalizeOptions& o) {
  RequirePath(o.features, "--features");
  RequirePath(o.stats, "--stats");
  RequirePath(o.out, "--out");
  auto table = ReadFeatureCsv(o.features);
  const auto stats = ReadStatsJson(o.stats);
  if (table.Meta("calibrated", kUncalibrated) != kUncalibrated) {
    throw DataError(o.features.string() + ": features are already calibrated");
  }
  if (table.Meta("config_hash") != stats.config_hash) {
    throw DataError("config hash mismatch: features " + table.Meta("config_hash") + ", stats " +
                    stats.config_hash);
  }
  for (auto& r : table.rows) r.values = ApplyZScore(r.values, stats);
  table.meta["calibrated"] = StatsId(stats);
  table.meta["version"] = kVersion;
  EnsureParent(o.out);
  WriteFeatureCsv(table, o.out);
}

void RunSplit(const SplitOptions& o) {
  RequirePath(o.annotations, "--ann");
  RequirePath(o.out_dir, "--out-dir");
  const auto schema = LoadSchema(o.schema);
  const auto set = RemapLabels(ReadAnnotations(o.annotations), schema);
  const auto split = StratifiedSplit(set, o.ratio, o.seed);
  fs::create_directories(o.out_dir);
  auto meta = BaseMeta(o.seed);
  meta["schema"] = schema.name;
  const std::pair<const char*, const AnnotatedSet*> parts[] = {
      {"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
  for (const auto& [name, part] : parts) {
    auto m = meta;
    m["part"] = name;
    WriteAnnotations(part->entries, o.out_dir / (std::string(name) + ".csv"), m);
  }
}

void RunOversample(const OversampleOptions& o) {
  RequirePath(o.split, "--split");
  RequirePath(o.out, "--out");
  const auto schema = LoadSchema(o.schema);
  AnnotatedSet train;
  train.schema = schema;
  train.entries = ReadAnnotations(o.split);
  train.CountsPerClass();  // rejects labels outside the schema
  const auto& targets = o.targets.empty() ? schema.oversample_targets : o.targets;
  const auto out = Oversample(train, targets, o.seed);
  auto meta = BaseMeta(o.seed);
  meta["schema"] = schema.name;
  meta["part"] = "train-oversampled";
  EnsureParent(o.out);
  WriteAnnotations(out.entries, o.out, meta);
}

std::vector<std::string> RunTrain(const TrainOptions& o) {
  RequirePath(o.features, "--features");
  RequirePath(o.train_split, "--train-split");
  RequirePath(o.val_split, "--val-split");
  RequirePath(o.out, "--out");
  const bool fusion = o.mode == HeadKind::kFusion;
  if (fusion && o.embeddings.empty()) throw UsageError("fusion head needs --embeddings");
  std::vector<std::string> warnings;
  const auto schema = LoadSchema(o.schema);
  const fs::path val_features = o.val_features.empty() ? o.features : o.val_features;
  const fs::path val_embeddings = o.val_embeddings.empty() ? o.embeddings : o.val_embeddings;

  const Inputs tr = LoadInputs(o.features, fusion ? o.embeddings : fs::path());
  const Inputs va = LoadInputs(val_features, fusion ? val_embeddings : fs::path());
  const std::string hash = tr.features.Meta("config_hash");
  if (va.features.Meta("config_hash") != hash) {
    throw DataError("config hash mismatch between training and validation features");
  }
  const std::string calibrated = tr.features.Meta("calibrated", kUncalibrated);
  if (va.features.Meta("calibrated", kUncalibrated) != calibrated) {
    throw DataError("training and validation features use different calibration");
  }
  const std::string train_domain = tr.features.Meta("domain", "unknown");
  const std::string val_domain = va.features.Meta("domain", "unknown");
  if (fusion && calibrated == kUncalibrated) {
    if (train_domain != val_domain) {
      throw DataError("fusion head on uncalibrated descriptors across domains (" + train_domain +
                      " -> " + val_domain + "); run stats and normalize first");
    }
    warnings.push_back("fusion head trained on uncalibrated descriptors");
  }

  const auto train_set = BuildSamples(ReadAnnotations(o.train_split), schema, tr, o.features,
                                      o.embeddings, fusion);
  const auto val_set = BuildSamples(ReadAnnotations(o.val_split), schema, va, val_features,
                                    val_embeddings, fusion);
  if (train_set.empty()) throw DataError("empty training split");
  if (val_set.empty()) throw DataError("empty validation split");

  const auto result = Train(o.mode, train_set, val_set, schema.classes, o.train);
  ModelFile model;
  model.kind = o.mode;
  model.params = result.params;
  model.meta = BaseMeta(o.train.seed);
  model.meta["config_hash"] = hash;
  model.meta["calibrated"] = calibrated;
  model.meta["domain"] = train_domain;
  model.meta["schema"] = schema.name;
  model.meta["best_epoch"] = std::to_string(result.best_epoch);
  if (fusion) model.meta["embedding"] = tr.embeddings.Meta("embedding", "unknown");
  EnsureParent(o.out);
  WriteModelJson(model, o.out);
  if (!o.log.empty()) {
    EnsureParent(o.log);
    WriteTrainingLog(result.log, o.log);
  }
  return warnings;
}

std::vector<std::string> RunPredict(const PredictOptions& o) {
  RequirePath(o.model, "--model");
  RequirePath(o.features, "--features");
  RequirePath(o.out, "--out");
  std::vector<std::string> warnings;
  const auto model = ReadModelJson(o.model);
  const bool fusion = model.kind == HeadKind::kFusion;
  if (fusion && o.embeddings.empty()) throw UsageError("fusion model needs --embeddings");
  const Inputs in = LoadInputs(o.features, fusion ? o.embeddings : fs::path());
  auto model_meta = [&](const std::string& k) {
    auto it = model.meta.find(k);
    return it == model.meta.end() ? std::string() : it->second;
  };
  if (in.features.Meta("config_hash") != model_meta("config_hash")) {
    throw DataError("config hash mismatch: features " + in.features.Meta("config_hash") +
                    ", model " + model_meta("config_hash"));
  }
  const std::string calibrated = in.features.Meta("calibrated", kUncalibrated);
  if (calibrated != model_meta("calibrated")) {
    throw DataError("calibration mismatch: features '" + calibrated + "', model '" +
                    model_meta("calibrated") + "'");
  }
  const std::string domain = in.features.Meta("domain", "unknown");
  if (fusion && calibrated == kUncalibrated && domain != model_meta("domain")) {
    warnings.push_back("uncalibrated descriptors from domain " + domain +
                       " scored by a model trained on " + model_meta("domain"));
  }

  std::vector<std::string> ids;
  if (o.split.empty()) {
    for (const auto& r : in.features.rows) ids.push_back(r.clip_id);
  } else {
    std::set<std::string> seen;
    for (const auto& a : ReadAnnotations(o.split)) {
      if (seen.insert(a.clip_id).second) ids.push_back(a.clip_id);
    }
  }
  const auto frows = IndexRows(in.features, o.features);
  std::unordered_map<std::string, const FeatureRow*> erows;
  if (fusion) erows = IndexRows(in.embeddings, o.embeddings);
  std::vector<Prediction> preds;
  for (const auto& id : ids) {
    Sample s;
    s.clip_id = id;
    s.descriptor = Lookup(frows, id, o.features).values;
    if (fusion) s.embedding = Lookup(erows, id, o.embeddings).values;
    if (s.descriptor.size() != static_cast<size_t>(model.params.desc_dim) ||
        s.embedding.size() != static_cast<size_t>(model.params.embed_dim)) {
      throw DataError("input dimensions of clip " + id + " do not match the model");
    }
    preds.push_back({id, model.params.class_names[PredictClass(s, model.params)]});
  }
  auto meta = BaseMeta(0);
  meta["seed"] = model_meta("seed");
  meta["config_hash"] = model_meta("config_hash");
  meta["model"] = o.model.filename().string();
  EnsureParent(o.out);
  WritePredictions(preds, o.out, meta);
  return warnings;
}

MetricsReport RunEval(const EvalOptions& o) {
  RequirePath(o.predictions, "--predictions");
  RequirePath(o.truth, "--truth");
  const auto schema = LoadSchema(o.schema);
  AnnotatedSet truth;
  truth.schema = schema;
  std::set<std::string> seen;
  for (const auto& a : ReadAnnotations(o.truth)) {
    if (seen.insert(a.clip_id).second) truth.entries.push_back(a);
  }
  const auto [cm, report] = Evaluate(ReadPredictions(o.predictions), truth);
  const auto pmeta = ReadCommentMeta(o.predictions);
  auto meta = BaseMeta(0);
  for (const char* key : {"seed", "config_hash"}) {
    auto it = pmeta.find(key);
    meta[key] = it == pmeta.end() ? "unknown" : it->second;
  }
  meta["schema"] = schema.name;
  meta["predictions"] = o.predictions.filename().string();
  if (!o.metrics_out.empty()) {
    EnsureParent(o.metrics_out);
    WriteMetricsJson(report, schema.classes, o.metrics_out, meta);
  }
  if (!o.confusion_out.empty()) {
    EnsureParent(o.confusion_out);
    WriteConfusionCsv(cm, o.confusion_out, meta);
  }
  return report;
}

void RunViz(const VizOptions& o) {
  RequirePath(o.features, "--features");
  RequirePath(o.out, "--out");
  const auto table = ReadFeatureCsv(o.features);
  if (table.Meta("calibrated", kUncalibrated) != kUncalibrated) {
    throw DataError("visualizations need raw (uncalibrated) descriptors");
  }
  DgmeConfig cfg;
  cfg.grid = std::stoi(table.Meta("grid", std::to_string(o.grid)));
  cfg.directional_bins = std::stoi(table.Meta("bins", std::to_string(o.bins)));
  cfg.Validate();
  std::map<std::string, std::string> meta = {{"version", kVersion},
                                             {"config_hash", table.Meta("config_hash")},
                                             {"seed", table.Meta("seed", "0")},
                                             {"kind", o.kind}};
  std::string svg;
  if (o.kind == "rose") {
    if (o.label.empty()) throw UsageError("rose needs --label");
    std::vector<std::vector<double>> sel;
    for (const auto& r : table.rows) {
      if (r.label == o.label) sel.push_back(r.values);
    }
    if (sel.empty()) throw DataError("no clips labelled '" + o.label + "'");
    meta["label"] = o.label;
    meta["clips"] = std::to_string(sel.size());
    svg = RoseSvg(sel, cfg, meta);
  } else if (o.kind == "grid") {
    if (o.clip_id.empty()) throw UsageError("grid needs --clip");
    const auto index = IndexRows(table, o.features);
    meta["clip"] = o.clip_id;
    svg = GridSvg(Lookup(index, o.clip_id, o.features).values, cfg, meta);
  } else {
    throw UsageError("unknown visualization '" + o.kind + "' (expected rose or grid)");
  }
  EnsureParent(o.out);
  std::ofstream out(o.out, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + o.out.string());
  out << svg;
}

}  // namespace camflow::commands
