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

// Command-line front end: synth, extract, stats, normalize, split,
// oversample, train, predict, eval and viz subcommands.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "camflow/commands.h"
#include "camflow/common.h"

namespace cmd = camflow::commands;

namespace {

void PrintWarnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::map<std::string, int> ParseTargets(const std::vector<std::string>& items) {
  std::map<std::string, int> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw camflow::UsageError("--target expects class=count, got " + item);
    try {
      out[item.substr(0, eq)] = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw camflow::UsageError("--target expects class=count, got " + item);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camflow: camera-movement descriptors and classifiers"};
  app.set_version_flag("--version", camflow::kVersion);
  app.require_subcommand(1);

  cmd::SynthOptions synth;
  auto* s = app.add_subcommand("synth", "generate a labelled synthetic corpus");
  s->add_option("--classes", synth.classes, "comma-separated motion classes")->delimiter(',');
  s->add_option("--per-class", synth.per_class, "clips per class");
  s->add_option("--domain", synth.domain, "modern or historical");
  s->add_option("--seed", synth.seed);
  s->add_option("--frames", synth.frames, "frames per clip");
  s->add_option("--size", synth.size, "frame side in pixels");
  s->add_option("--jobs", synth.jobs);
  s->add_option("--out", synth.out, "output directory")->required();

  cmd::ExtractOptions extract;
  int target_size = 224;
  auto* e = app.add_subcommand("extract", "compute descriptors for annotated clips");
  e->add_option("--ann", extract.annotations, "annotations CSV (clip_path,label)")->required();
  e->add_option("--out", extract.out, "features CSV")->required();
  e->add_option("--embeddings", extract.embeddings_out, "also write stub embeddings here");
  e->add_option("--mthr", extract.dgme.magnitude_threshold, "static magnitude threshold (px)");
  e->add_option("--bins", extract.dgme.directional_bins, "directional bins per cell");
  e->add_option("--grid", extract.dgme.grid, "grid side");
  e->add_option("--frames", extract.sampling.frames_per_clip);
  e->add_option("--interval", extract.sampling.frame_interval);
  e->add_option("--size", target_size, "square target size");
  e->add_option("--levels", extract.flow.pyramid_levels, "flow pyramid levels");
  e->add_option("--winsize", extract.flow.window_size);
  e->add_option("--iterations", extract.flow.iterations);
  e->add_flag("--augment", extract.augment.enabled, "train-time crop and jitter");
  e->add_option("--augment-seed", extract.augment.rng_seed);
  e->add_option("--embedding-seed", extract.embedding_seed);
  e->add_option("--embedding-dim", extract.embedding_dim);
  e->add_option("--domain", extract.domain, "override the corpus domain tag");
  e->add_option("--seed", extract.seed, "recorded in the output metadata");
  e->add_option("--jobs", extract.jobs);

  cmd::StatsOptions stats;
  auto* st = app.add_subcommand("stats", "fit z-score statistics on a features file");
  st->add_option("--features", stats.features)->required();
  st->add_option("--out", stats.out)->required();

  cmd::NormalizeOptions norm;
  auto* n = app.add_subcommand("normalize", "apply z-score statistics to a features file");
  n->add_option("--features", norm.features)->required();
  n->add_option("--stats", norm.stats)->required();
  n->add_option("--out", norm.out)->required();

  cmd::SplitOptions split;
  auto* sp = app.add_subcommand("split", "stratified train/val/test split");
  sp->add_option("--ann", split.annotations)->required();
  sp->add_option("--schema", split.schema, "schema name or JSON path");
  sp->add_option("--train", split.ratio.train);
  sp->add_option("--val", split.ratio.val);
  sp->add_option("--test", split.ratio.test);
  sp->add_option("--seed", split.seed);
  sp->add_option("--out-dir", split.out_dir)->required();

  cmd::OversampleOptions over;
  std::vector<std::string> targets;
  auto* o = app.add_subcommand("oversample", "oversample a training split");
  o->add_option("--split", over.split)->required();
  o->add_option("--schema", over.schema);
  o->add_option("--target", targets, "class=count (repeatable; default from schema)");
  o->add_option("--seed", over.seed);
  o->add_option("--out", over.out)->required();

  cmd::TrainOptions train;
  std::string mode = "dgme-only";
  auto* t = app.add_subcommand("train", "train a classification head");
  t->add_option("--mode", mode, "dgme-only or fusion");
  t->add_option("--schema", train.schema);
  t->add_option("--features", train.features)->required();
  t->add_option("--val-features", train.val_features);
  t->add_option("--embeddings", train.embeddings);
  t->add_option("--val-embeddings", train.val_embeddings);
  t->add_option("--train-split", train.train_split)->required();
  t->add_option("--val-split", train.val_split)->required();
  t->add_option("--epochs", train.train.epochs);
  t->add_option("--batch", train.train.batch_size);
  t->add_option("--lr", train.train.lr_max);
  t->add_option("--weight-decay", train.train.adamw.weight_decay);
  t->add_option("--patience", train.train.early_stop_patience);
  t->add_option("--seed", train.train.seed);
  t->add_option("--log", train.log, "per-epoch CSV log");
  t->add_option("--out", train.out, "model JSON")->required();

  cmd::PredictOptions pred;
  auto* p = app.add_subcommand("predict", "score clips with a trained model");
  p->add_option("--model", pred.model)->required();
  p->add_option("--features", pred.features)->required();
  p->add_option("--embeddings", pred.embeddings);
  p->add_option("--split", pred.split, "restrict to the clips of this split CSV");
  p->add_option("--out", pred.out)->required();

  cmd::EvalOptions ev;
  auto* v = app.add_subcommand("eval", "metrics and confusion matrix");
  v->add_option("--pred", ev.predictions)->required();
  v->add_option("--truth", ev.truth)->required();
  v->add_option("--schema", ev.schema);
  v->add_option("--metrics", ev.metrics_out, "metrics JSON");
  v->add_option("--confusion", ev.confusion_out, "confusion CSV");

  cmd::VizOptions viz;
  auto* z = app.add_subcommand("viz", "SVG rose diagram or grid map");
  z->add_option("kind", viz.kind, "rose or grid")->required();
  z->add_option("--features", viz.features)->required();
  z->add_option("--label", viz.label, "class to aggregate (rose)");
  z->add_option("--clip", viz.clip_id, "clip id (grid)");
  z->add_option("--out", viz.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::string msg = ex.what();
    for (auto& c : msg) if (c == '\n') c = ' ';
    std::cerr << "error: " << msg << "\n";
    return static_cast<int>(camflow::ExitCode::kUsage);
  }

  try {
    if (*s) {
      cmd::RunSynth(synth);
    } else if (*e) {
      extract.sampling.target_width = extract.sampling.target_height = target_size;
      cmd::RunExtract(extract);
    } else if (*st) {
      cmd::RunStats(stats);
    } else if (*n) {
      cmd::RunNormalize(norm);
    } else if (*sp) {
      cmd::RunSplit(split);
    } else if (*o) {
      over.targets = ParseTargets(targets);
      cmd::RunOversample(over);
    } else if (*t) {
      train.mode = camflow::ParseHeadKind(mode);
      PrintWarnings(cmd::RunTrain(train));
    } else if (*p) {
      PrintWarnings(cmd::RunPredict(pred));
    } else if (*v) {
      const auto r = cmd::RunEval(ev);
      std::cout << "accuracy " << camflow::FormatG(r.accuracy, 6) << " macro_f1 "
                << camflow::FormatG(r.macro_f1, 6) << "\n";
    } else if (*z) {
      cmd::RunViz(viz);
    }
  } catch (const camflow::Error& ex) {
    std::string msg = ex.what();
    for (auto& c : msg) if (c == '\n') c = ' ';
    std::cerr << "error: " << msg << "\n";
    return static_cast<int>(ex.code());
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return static_cast<int>(camflow::ExitCode::kData);
  }
  return 0;
}
