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

#ifndef SPARSESEG_TOOLS_COMMANDS_H_
#define SPARSESEG_TOOLS_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparseseg::cli {

struct GlobalOptions {
  uint64_t seed = 0;
  bool seed_given = false;
  bool deterministic = false;
};

// Pipeline knobs that may come from flags; unset fields fall back to the
// config file and then to the built-in defaults.
struct PipelineFlags {
  std::string config;
  std::string window_file;
  std::optional<double> threshold;
  std::optional<int> dilate;
  std::optional<int64_t> min_size;
  std::optional<int> connectivity;
  std::vector<double> low_spacing;
};

struct PhantomArgs {
  std::string out_image, out_labels;
  std::vector<int> dims{64, 48, 48};
  double spacing = 1.0;
  double noise = 5.0;
};

struct ResampleArgs {
  std::string in, out;
  std::vector<double> spacing{1.99};
  std::string mode;  // empty: nearest for labels, trilinear otherwise
  bool labels = false;
};

struct PercentileArgs {
  std::vector<std::string> images, labels;
  double lo = 0.5, hi = 99.5;
  std::string out;
};

struct SparsifyArgs {
  std::string in, out;
  PipelineFlags pipeline;
};

struct TrainArgs {
  std::string config;
  int stage = 1;
  std::vector<std::string> images, labels;
  std::string stage1;
  std::string out;
  std::string log;
  int fold = -1;
  int folds = 5;
  bool quiet = false;
  PipelineFlags pipeline;
};

struct RoiArgs {
  std::string in, stage1, out;
  PipelineFlags pipeline;
};

struct SegmentArgs {
  std::string in, stage1, stage2, out, roi_in, roi_out;
  PipelineFlags pipeline;
};

struct EvalArgs {
  std::vector<std::string> preds, labels, cases;
  std::string out;
};

struct BenchArgs {
  std::string config;
  std::string model_name;
  int size = 128;
  std::vector<double> occupancy{0.05};
  int batch = 1;
  int reps = 5;
  int warmup = 1;
  double memory_budget_mb = 0.0;
  int workers = 1;
  std::string out_csv, out_markdown;
};

struct ParamCountArgs {
  std::string config;
};

struct SelftestArgs {
  int equivalence_cases = 100;
};

// Each returns the process exit code; engine errors propagate as exceptions.
int RunPhantom(const GlobalOptions& g, const PhantomArgs& a);
int RunResample(const GlobalOptions& g, const ResampleArgs& a);
int RunPercentiles(const GlobalOptions& g, const PercentileArgs& a);
int RunSparsify(const GlobalOptions& g, const SparsifyArgs& a);
int RunTrain(const GlobalOptions& g, const TrainArgs& a);
int RunRoi(const GlobalOptions& g, const RoiArgs& a);
int RunSegment(const GlobalOptions& g, const SegmentArgs& a);
int RunEval(const GlobalOptions& g, const EvalArgs& a);
int RunBench(const GlobalOptions& g, const BenchArgs& a);
int RunParamCount(const GlobalOptions& g, const ParamCountArgs& a);
int RunSelftest(const GlobalOptions& g, const SelftestArgs& a);

}  // namespace sparseseg::cli

#endif  // SPARSESEG_TOOLS_COMMANDS_H_
