// Copyright 2026 The SparseSeg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.h"
#include "sparseseg/common/errors.h"

namespace {

using namespace sparseseg::cli;

void AddPipelineFlags(CLI::App* sub, PipelineFlags& f, bool with_config) {
  if (with_config) {
    sub->add_option("--config", f.config, "JSON config; its \"pipeline\" section is used");
  }
  sub->add_option("--window", f.window_file, "JSON file holding hu_window [lo, hi]");
  sub->add_option("--threshold", f.threshold, "Stage-1 probability threshold (default 0.1)");
  sub->add_option("--dilate", f.dilate, "Dilation ball diameter in voxels (default 11)");
  sub->add_option("--min-size", f.min_size, "Minimum component size in voxels (default 50)");
  sub->add_option("--connectivity", f.connectivity, "6 or 26 (default 26)")
      ->check(CLI::IsMember({6, 26}));
  sub->add_option("--low-spacing", f.low_spacing, "Stage-1 spacing in mm (default 1.99)")
      ->expected(1, 3);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse 3D U-Net kidney and tumour segmentation"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for every random draw (default 0)");
  app.add_flag("--deterministic", g.deterministic,
               "Require bit-reproducible execution (single worker, fixed reduction order)");

  PhantomArgs phantom;
  auto* sp = app.add_subcommand("phantom", "Write a synthetic two-kidney phantom and its labels");
  sp->add_option("--out-image", phantom.out_image)->required();
  sp->add_option("--out-labels", phantom.out_labels)->required();
  sp->add_option("--dims", phantom.dims, "Grid size x y z")->expected(3);
  sp->add_option("--spacing", phantom.spacing, "Isotropic spacing in mm");
  sp->add_option("--noise", phantom.noise, "Gaussian noise std in HU");

  ResampleArgs resample;
  auto* sr = app.add_subcommand("resample", "Resample a volume to a new spacing");
  sr->add_option("--in", resample.in)->required();
  sr->add_option("--out", resample.out)->required();
  sr->add_option("--spacing", resample.spacing, "Target spacing in mm (one or three values)")
      ->expected(1, 3);
  sr->add_option("--mode", resample.mode, "trilinear or nearest (default: nearest for labels)")->check(CLI::IsMember({"trilinear", "nearest"}));
  sr->add_flag("--labels", resample.labels, "Read NIfTI input as a label volume");

  PercentileArgs pct;
  auto* sc = app.add_subcommand("percentiles", "HU window from foreground percentiles");
  sc->add_option("--in", pct.images, "Image volumes")->required();
  sc->add_option("--labels", pct.labels, "Label volumes, one per image")->required();
  sc->add_option("--lo", pct.lo, "Lower percentile (default 0.5)");
  sc->add_option("--hi", pct.hi, "Upper percentile (default 99.5)");
  sc->add_option("--out", pct.out, "JSON file receiving hu_window");

  SparsifyArgs sparsify;
  auto* ss = app.add_subcommand("sparsify", "Write the HU-window active mask of a volume");
  ss->add_option("--in", sparsify.in)->required();
  ss->add_option("--out", sparsify.out)->required();
  AddPipelineFlags(ss, sparsify.pipeline, true);

  TrainArgs train;
  auto* st = app.add_subcommand("train", "Train the Stage-1 or Stage-2 network");
  st->add_option("--config", train.config, "JSON config with model and train sections")->required();
  st->add_option("--stage", train.stage, "1 (ROI detection) or 2 (segmentation)")
      ->check(CLI::IsMember({1, 2}));
  st->add_option("--in,--images", train.images, "Image volumes")->required();
  st->add_option("--labels", train.labels, "Label volumes, one per image")->required();
  st->add_option("--stage1", train.stage1, "Stage-1 checkpoint (Stage 2 only)");
  st->add_option("--out", train.out, "Checkpoint path")->required();
  st->add_option("--log", train.log, "Loss log CSV");
  st->add_option("--fold", train.fold, "Validation fold 0..folds-1; -1 trains on every case");
  st->add_option("--folds", train.folds, "Number of folds (default 5)");
  st->add_flag("--quiet", train.quiet, "Suppress per-epoch progress");
  AddPipelineFlags(st, train.pipeline, false);

  RoiArgs roi;
  auto* so = app.add_subcommand("roi", "Detect kidney ROIs with the Stage-1 network");
  so->add_option("--in", roi.in)->required();
  so->add_option("--stage1", roi.stage1)->required();
  so->add_option("--out", roi.out, "ROI JSON")->required();
  AddPipelineFlags(so, roi.pipeline, true);

  SegmentArgs seg;
  auto* sg = app.add_subcommand("segment", "Run both stages and write the label mask");
  sg->add_option("--in", seg.in)->required();
  sg->add_option("--stage1", seg.stage1, "Stage-1 checkpoint (not needed with --roi)");
  sg->add_option("--stage2", seg.stage2)->required();
  sg->add_option("--out", seg.out, "Label volume")->required();
  sg->add_option("--roi", seg.roi_in, "Use this ROI file instead of running Stage 1");
  sg->add_option("--roi-out", seg.roi_out, "Also write the ROI file");
  AddPipelineFlags(sg, seg.pipeline, true);

  EvalArgs ev;
  auto* se = app.add_subcommand("eval", "Dice scores of predicted against reference labels");
  se->add_option("--pred,--in", ev.preds)->required();
  se->add_option("--labels", ev.labels)->required();
  se->add_option("--case", ev.cases, "Case ids (default: file names)");
  se->add_option("--out", ev.out, "Metrics CSV");

  BenchArgs bench;
  auto* sb = app.add_subcommand("bench", "Sparse versus dense forward benchmark");
  sb->add_option("--config", bench.config, "Model config (default: the full model)");
  sb->add_option("--model-name", bench.model_name);
  sb->add_option("--size", bench.size, "Cube side in voxels (default 128)");
  sb->add_option("--occupancy", bench.occupancy, "Active fractions (default 0.05)");
  sb->add_option("--batch", bench.batch);
  sb->add_option("--reps", bench.reps, "Timed repetitions, at least 5");
  sb->add_option("--warmup", bench.warmup);
  sb->add_option("--memory-budget-mb", bench.memory_budget_mb, "Tracked memory budget; 0 = none");
  sb->add_option("--workers", bench.workers, "Worker count (the engine uses one)");
  sb->add_option("--out", bench.out_csv, "CSV report");
  sb->add_option("--markdown", bench.out_markdown, "Markdown table");

  ParamCountArgs pc;
  auto* sn = app.add_subcommand("param-count", "Print the trainable parameter count");
  sn->add_option("--config", pc.config, "Model config (default: the full model)");

  SelftestArgs self;
  auto* sx = app.add_subcommand("selftest", "Run the oracle suites");
  sx->add_option("--cases", self.equivalence_cases, "Random equivalence cases (default 100)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << failing->help();
    return 2;
  }
  g.seed_given = app.count("--seed") > 0;

  try {
    if (*sp) return RunPhantom(g, phantom);
    if (*sr) return RunResample(g, resample);
    if (*sc) return RunPercentiles(g, pct);
    if (*ss) return RunSparsify(g, sparsify);
    if (*st) return RunTrain(g, train);
    if (*so) return RunRoi(g, roi);
    if (*sg) return RunSegment(g, seg);
    if (*se) return RunEval(g, ev);
    if (*sb) return RunBench(g, bench);
    if (*sn) return RunParamCount(g, pc);
    if (*sx) return RunSelftest(g, self);
  } catch (const sparseseg::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
