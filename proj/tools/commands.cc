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

#include "commands.h"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "sparseseg/bench/bench.h"
#include "sparseseg/common/errors.h"
#include "sparseseg/model/checkpoint.h"
#include "sparseseg/oracles/suites.h"
#include "sparseseg/pipeline/metrics.h"
#include "sparseseg/pipeline/phantom.h"
#include "sparseseg/pipeline/pipeline.h"
#include "sparseseg/train/kfold.h"
#include "sparseseg/volume/io.h"
#include "sparseseg/volume/multilabel.h"
#include "sparseseg/volume/resample.h"

namespace sparseseg::cli {
namespace {

namespace fs = std::filesystem;

nlohmann::json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse " + path + ": " + e.what());
  }
}

std::optional<HUWindow> WindowFromJson(const nlohmann::json& j, const std::string& where) {
  const nlohmann::json* node = nullptr;
  if (j.contains("hu_window")) {
    node = &j.at("hu_window");
  } else if (j.contains("pipeline") && j.at("pipeline").contains("hu_window")) {
    node = &j.at("pipeline").at("hu_window");
  }
  if (!node) return std::nullopt;
  if (!node->is_array() || node->size() != 2) throw FormatError(where + ": hu_window needs [lo, hi]");
  HUWindow w{(*node)[0].get<double>(), (*node)[1].get<double>()};
  w.Validate();
  return w;
}

std::optional<HUWindow> CheckpointWindow(const std::string& path) {
  const nlohmann::json manifest = ReadCheckpointManifest(path);
  if (!manifest.contains("metadata")) return std::nullopt;
  return WindowFromJson(manifest.at("metadata"), path);
}

void RequireCheckpoint(const std::string& path, const std::string& role) {
  if (path.empty()) throw InvalidArgument(role + " checkpoint is required");
  if (!fs::exists(CheckpointManifestPath(path)) || !fs::exists(CheckpointPayloadPath(path))) {
    throw IoError(role + " checkpoint not found: " + path);
  }
}

Vec3 SpacingOf(const std::vector<double>& v) {
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw InvalidArgument("spacing needs one or three values");
}

// Flags over config over defaults. `window_set` reports whether a window
// came from a flag or the config.
PipelineOptions ResolvePipeline(const PipelineFlags& f, bool* window_set) {
  PipelineOptions o = f.config.empty() ? PipelineOptions{} : LoadPipelineOptions(f.config);
  std::optional<HUWindow> w;
  if (!f.window_file.empty()) {
    w = WindowFromJson(ReadJson(f.window_file), f.window_file);
    if (!w) throw FormatError(f.window_file + ": no hu_window entry");
  } else if (!f.config.empty()) {
    w = WindowFromJson(ReadJson(f.config), f.config);
  }
  if (w) o.window = *w;
  if (window_set) *window_set = w.has_value();
  if (f.threshold) o.threshold = *f.threshold;
  if (f.dilate) o.dilate = *f.dilate;
  if (f.min_size) o.min_size = *f.min_size;
  if (f.connectivity) o.connectivity = *f.connectivity;
  if (!f.low_spacing.empty()) o.low_spacing = SpacingOf(f.low_spacing);
  o.Validate();
  return o;
}

std::string CaseId(const std::string& path) {
  std::string stem = fs::path(path).filename().string();
  for (const char* ext : {".rvol", ".nii"}) {
    const std::string e(ext);
    if (stem.size() > e.size() && stem.compare(stem.size() - e.size(), e.size(), e) == 0) {
      stem.resize(stem.size() - e.size());
    }
  }
  return stem;
}

VoxelGrid LoadImage(const std::string& path) {
  VoxelGrid g = ReadAnyVolume(path, VolumeKind::kIntensity);
  if (g.kind() != VolumeKind::kIntensity) throw FormatError(path + " is not an intensity volume");
  return g;
}

VoxelGrid LoadLabels(const std::string& path) {
  VoxelGrid g = ReadAnyVolume(path, VolumeKind::kLabel);
  if (g.kind() != VolumeKind::kLabel) throw FormatError(path + " is not a label volume");
  return g;
}

void CheckPairs(const std::vector<std::string>& a, const std::vector<std::string>& b,
                const char* what) {
  if (a.empty()) throw InvalidArgument(std::string("at least one ") + what + " pair is required");
  if (a.size() != b.size()) throw InvalidArgument(std::string(what) + " lists differ in length");
}

void PrintWindow(const HUWindow& w, const char* source) {
  std::fprintf(stderr, "hu window [%.4f, %.4f] (%s)\n", w.lo, w.hi, source);
}

}  // namespace

int RunPhantom(const GlobalOptions& g, const PhantomArgs& a) {
  if (a.dims.size() != 3) throw InvalidArgument("--dims needs three values");
  PhantomParams p;
  p.dims = {a.dims[0], a.dims[1], a.dims[2]};
  p.spacing = {a.spacing, a.spacing, a.spacing};
  p.noise_std = a.noise;
  const Phantom ph = MakePhantom(p, g.seed);
  StoreVolume(ph.image, a.out_image);
  StoreVolume(ph.labels, a.out_labels);
  std::printf("phantom %dx%dx%d spacing %.3f mm seed %llu\n", p.dims[0], p.dims[1], p.dims[2],
              a.spacing, static_cast<unsigned long long>(g.seed));
  return 0;
}

int RunResample(const GlobalOptions&, const ResampleArgs& a) {
  if (!a.mode.empty() && a.mode != "trilinear" && a.mode != "nearest") {
    throw InvalidArgument("--mode must be trilinear or nearest");
  }
  const VoxelGrid in = ReadAnyVolume(a.in, a.labels ? VolumeKind::kLabel : VolumeKind::kIntensity);
  const bool label = in.kind() == VolumeKind::kLabel;
  const InterpolationMode mode = a.mode == "nearest" || (a.mode.empty() && label)
                                     ? InterpolationMode::kNearest
                                     : InterpolationMode::kTrilinear;
  if (label && mode != InterpolationMode::kNearest) {
    throw InvalidArgument("label volumes must be resampled with --mode nearest");
  }
  const VoxelGrid out = Resample(in, SpacingOf(a.spacing), mode);
  StoreVolume(out, a.out);
  std::printf("%dx%dx%d -> %dx%dx%d\n", in.dims()[0], in.dims()[1], in.dims()[2], out.dims()[0],
              out.dims()[1], out.dims()[2]);
  return 0;
}

int RunPercentiles(const GlobalOptions&, const PercentileArgs& a) {
  CheckPairs(a.images, a.labels, "image/label");
  std::vector<double> values;
  for (size_t i = 0; i < a.images.size(); ++i) {
    const auto fg = ForegroundValues(LoadImage(a.images[i]), LoadLabels(a.labels[i]));
    values.insert(values.end(), fg.begin(), fg.end());
  }
  const HUWindow w = ComputePercentileRange(values, a.lo, a.hi);
  std::printf("%.6f %.6f\n", w.lo, w.hi);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write " + a.out);
    out << nlohmann::json{{"hu_window", {w.lo, w.hi}},
                          {"percentiles", {a.lo, a.hi}},
                          {"foreground_voxels", values.size()}}
               .dump(2)
        << '\n';
  }
  return 0;
}

int RunSparsify(const GlobalOptions&, const SparsifyArgs& a) {
  const PipelineOptions o = ResolvePipeline(a.pipeline, nullptr);
  const VoxelGrid img = LoadImage(a.in);
  const BinaryVolume mask = ApplyHuWindow(img, o.window);
  StoreMask(mask, img, a.out);
  std::printf("active %lld of %lld (%.4f)\n", static_cast<long long>(mask.Count()),
              static_cast<long long>(img.size()),
              static_cast<double>(mask.Count()) / static_cast<double>(img.size()));
  return 0;
}

int RunTrain(const GlobalOptions& g, const TrainArgs& a) {
  CheckPairs(a.images, a.labels, "image/label");
  if (a.stage != 1 && a.stage != 2) throw InvalidArgument("--stage must be 1 or 2");
  if (a.config.empty()) throw InvalidArgument("--config is required");
  const ModelConfig mc = LoadModelConfig(a.config);
  TrainConfig tc = LoadTrainConfig(a.config);
  if (g.seed_given) tc.seed = g.seed;
  PipelineFlags flags = a.pipeline;
  flags.config = a.config;
  bool window_set = false;
  PipelineOptions o = ResolvePipeline(flags, &window_set);
  if (a.stage == 2) RequireCheckpoint(a.stage1, "stage-1");

  std::vector<VoxelGrid> images, labels;
  for (size_t i = 0; i < a.images.size(); ++i) {
    images.push_back(LoadImage(a.images[i]));
    labels.push_back(LoadLabels(a.labels[i]));
  }
  const char* source = "config";
  if (!window_set && a.stage == 2) {
    if (auto w = CheckpointWindow(a.stage1)) {
      o.window = *w;
      window_set = true;
      source = "stage-1 checkpoint";
    }
  }
  if (!window_set) {
    std::vector<int> train_idx(images.size());
    for (size_t i = 0; i < images.size(); ++i) train_idx[i] = static_cast<int>(i);
    if (a.fold >= 0) {
      train_idx = SelectFold(KFoldSplit(static_cast<int>(images.size()), a.folds, tc.seed), a.fold).train;
    }
    std::vector<double> values;
    for (int i : train_idx) {
      const auto fg = ForegroundValues(images[static_cast<size_t>(i)], labels[static_cast<size_t>(i)]);
      values.insert(values.end(), fg.begin(), fg.end());
    }
    o.window = ComputePercentileRange(values);
    source = "training foreground percentiles";
  }
  PrintWindow(o.window, source);

  std::vector<TrainingCase> cases;
  if (a.stage == 1) {
    for (size_t i = 0; i < images.size(); ++i) {
      cases.push_back(MakeStage1Case(CaseId(a.images[i]), images[i], labels[i], o.low_spacing));
    }
  } else {
    const auto stage1 = LoadCheckpoint<float>(a.stage1);
    for (size_t i = 0; i < images.size(); ++i) {
      cases.push_back(MakeStage2Case(CaseId(a.images[i]), stage1, images[i], labels[i], o));
      std::fprintf(stderr, "%s: roi %lld voxels\n", cases.back().id.c_str(),
                   static_cast<long long>(cases.back().roi->Count()));
    }
  }
  TrainOptions to;
  to.window = o.window;
  to.fold = a.fold;
  to.folds = a.folds;
  to.split_seed = tc.seed;
  to.checkpoint_path = a.out;
  to.loss_log_path = a.log;
  if (!a.quiet) to.progress = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };
  const TrainResult r = TrainStage(cases, tc, mc, to);
  std::printf("stage %d: %lld optimizer steps, final train loss %.6f\n", a.stage,
              static_cast<long long>(r.optimizer_steps), r.final_train_loss);
  return 0;
}

int RunRoi(const GlobalOptions&, const RoiArgs& a) {
  RequireCheckpoint(a.stage1, "stage-1");
  bool window_set = false;
  PipelineOptions o = ResolvePipeline(a.pipeline, &window_set);
  if (!window_set) {
    if (auto w = CheckpointWindow(a.stage1)) o.window = *w;
  }
  const VoxelGrid img = LoadImage(a.in);
  const auto stage1 = LoadCheckpoint<float>(a.stage1);
  const RoiResult r = DetectRoi(stage1, img, o);
  RoiFile file{r.low_image.spacing(), r.low_image.origin(), r.low_image.dims(), r.components};
  WriteRoiFile(a.out, file);
  std::printf("%zu components\n", r.components.size());
  for (const auto& c : r.components) std::printf("  component %d: %lld voxels\n", c.id, static_cast<long long>(c.size()));
  return 0;
}

int RunSegment(const GlobalOptions&, const SegmentArgs& a) {
  RequireCheckpoint(a.stage2, "stage-2");
  if (a.roi_in.empty()) RequireCheckpoint(a.stage1, "stage-1");
  bool window_set = false;
  PipelineOptions o = ResolvePipeline(a.pipeline, &window_set);
  if (!window_set) {
    if (auto w = CheckpointWindow(a.stage2)) o.window = *w;
  }
  const VoxelGrid img = LoadImage(a.in);
  const auto stage2 = LoadCheckpoint<float>(a.stage2);
  RoiFile roi;
  if (!a.roi_in.empty()) {
    roi = ReadRoiFile(a.roi_in);
  } else {
    const auto stage1 = LoadCheckpoint<float>(a.stage1);
    RoiResult r = DetectRoi(stage1, img, o);
    roi = {r.low_image.spacing(), r.low_image.origin(), r.low_image.dims(), std::move(r.components)};
  }
  if (!a.roi_out.empty()) WriteRoiFile(a.roi_out, roi);
  for (auto& c : roi.components) LiftToHighres(c, roi.spacing_mm, roi.origin_mm, img);
  const MultiLabelMask mask = SegmentRois(stage2, img, roi.components, o);
  StoreVolume(MultiLabelToCodes(mask, img), a.out);
  std::printf("%zu components segmented\n", roi.components.size());
  for (size_t c = 0; c < kChannelNames.size(); ++c) {
    int64_t n = 0;
    for (uint8_t v : mask.channels[c]) n += v;
    std::printf("  %s: %lld voxels\n", kChannelNames[c], static_cast<long long>(n));
  }
  return 0;
}

int RunEval(const GlobalOptions&, const EvalArgs& a) {
  CheckPairs(a.preds, a.labels, "prediction/label");
  if (!a.cases.empty() && a.cases.size() != a.preds.size()) {
    throw InvalidArgument("--case needs one id per prediction");
  }
  std::vector<std::pair<std::string, DiceReport>> rows;
  DiceReport mean;
  for (size_t i = 0; i < a.preds.size(); ++i) {
    const std::string id = a.cases.empty() ? CaseId(a.preds[i]) : a.cases[i];
    const DiceReport d = Dsc(MakeMultiLabel(LoadLabels(a.preds[i])), MakeMultiLabel(LoadLabels(a.labels[i])));
    rows.emplace_back(id, d);
    std::printf("%s: kidney_mass %.4f tumour_cyst %.4f tumour %.4f mean %.4f\n", id.c_str(),
                d.channel[0], d.channel[1], d.channel[2], d.all);
    for (int c = 0; c < 3; ++c) mean.channel[static_cast<size_t>(c)] += d.channel[static_cast<size_t>(c)] / static_cast<double>(a.preds.size());
    mean.all += d.all / static_cast<double>(a.preds.size());
  }
  if (rows.size() > 1) {
    std::printf("mean: kidney_mass %.4f tumour_cyst %.4f tumour %.4f mean %.4f\n", mean.channel[0],
                mean.channel[1], mean.channel[2], mean.all);
  }
  if (!a.out.empty()) WriteMetricsCsv(a.out, rows);
  return 0;
}

int RunBench(const GlobalOptions& g, const BenchArgs& a) {
  const ModelConfig mc = a.config.empty() ? ModelConfig{} : LoadModelConfig(a.config);
  const std::string name =
      !a.model_name.empty() ? a.model_name : a.config.empty() ? "default" : CaseId(a.config);
  const auto model = SparseUNet<float>::Build(mc, g.seed);
  std::vector<BenchReport> reports;
  for (double occ : a.occupancy) {
    BenchOptions o;
    o.size = a.size;
    o.occupancy = occ;
    o.batch = a.batch;
    o.reps = a.reps;
    o.warmup = a.warmup;
    o.seed = g.seed;
    o.workers = a.workers;
    o.memory_budget = static_cast<int64_t>(a.memory_budget_mb * 1024.0 * 1024.0);
    const BenchResult r = RunBenchmark(model, name, o);
    reports.push_back(r.sparse);
    reports.push_back(r.dense);
    if (r.max_abs_diff >= 0.0) {
      std::fprintf(stderr, "occupancy %.4f: max |sparse - dense| on active sites %.3g\n", occ,
                   r.max_abs_diff);
      std::fprintf(stderr, "  dense/sparse time ratio %.2f, memory ratio %.2f\n",
                   r.dense.time_mean / r.sparse.time_mean, r.dense.memory_mean / r.sparse.memory_mean);
    }
  }
  const std::string md = FormatBenchMarkdown(reports);
  std::printf("%s", md.c_str());
  std::printf("\nworkers: %d. Timings are hardware dependent; only the direction of the "
              "sparse/dense difference is meaningful across machines.\n", a.workers);
  if (!a.out_csv.empty()) WriteBenchCsv(a.out_csv, reports);
  if (!a.out_markdown.empty()) {
    std::ofstream out(a.out_markdown);
    if (!out) throw IoError("cannot write " + a.out_markdown);
    out << md;
  }
  return 0;
}

int RunParamCount(const GlobalOptions& g, const ParamCountArgs& a) {
  const ModelConfig mc = a.config.empty() ? ModelConfig{} : LoadModelConfig(a.config);
  std::printf("%lld\n", static_cast<long long>(SparseUNet<float>::Build(mc, g.seed).ParameterCount()));
  return 0;
}

int RunSelftest(const GlobalOptions& g, const SelftestArgs& a) {
  using oracles::SuiteResult;
  const std::vector<std::pair<const char*, std::function<SuiteResult()>>> suites = {
      {"loss-schedule", [] { return oracles::LossScheduleSuite(); }},
      {"equivalence", [&] { return oracles::EquivalenceSuite(a.equivalence_cases, g.seed); }},
      {"gradients", [&] { return oracles::GradientSuite(g.seed); }},
      {"pipeline", [&] { return oracles::PipelinePropertySuite(1000, 50, g.seed); }},
  };
  bool ok = true;
  for (const auto& [name, run] : suites) {
    const SuiteResult r = run();
    ok = ok && r.pass;
    std::printf("%s %s (%.1f s): %s\n", r.pass ? "PASS" : "FAIL", name, r.seconds, r.detail.c_str());
  }
  return ok ? 0 : 1;
}

}  // namespace sparseseg::cli
