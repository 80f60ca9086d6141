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

#ifndef SPARSESEG_BENCH_BENCH_H_
#define SPARSESEG_BENCH_BENCH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sparseseg/model/unet.h"
#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// One arm of a sparse-vs-dense forward benchmark. Times are wall seconds over
// `reps` timed runs after warmup. For the sparse arm `time_*` includes kernel
// map construction and `nomap_*` reuses maps built during warmup; the dense
// arm has no maps and reports the same run in both. Memory is the tracked
// peak per run, input construction included.
struct BenchReport {
  std::string model;
  std::string mode;  // "sparse" or "dense"
  int size = 0;
  double occupancy = 0.0;
  int batch = 1;
  int reps = 0;
  int workers = 1;
  bool oom = false;
  double time_mean = 0.0;
  double time_std = 0.0;
  double nomap_mean = 0.0;
  double nomap_std = 0.0;
  double memory_mean = 0.0;
  double memory_std = 0.0;

  bool operator==(const BenchReport&) const = default;
};

struct BenchOptions {
  int size = 128;
  double occupancy = 0.05;
  int batch = 1;
  int reps = 5;
  int warmup = 1;
  uint64_t seed = 0;
  // Tracked-byte budget applied to each arm; 0 disables it.
  int64_t memory_budget = 0;
  int workers = 1;
  void Validate() const;
};

struct BenchResult {
  BenchReport sparse;
  BenchReport dense;
  // Max |sparse - dense| over active sites of every returned head; negative
  // when either arm ran out of memory.
  double max_abs_diff = -1.0;
};

// Union of seeded random ellipsoids with exactly floor(occupancy * size^3)
// active voxels. The last ellipsoid is truncated in raster order to hit the
// count.
BinaryVolume MakeBlobVolume(int size, double occupancy, uint64_t seed);

// Runs both arms with the same weights and the same inputs. Batch item b uses
// blob seed `seed + b`; input features are a fixed seeded pattern in [-1, 1].
BenchResult RunBenchmark(const SparseUNet<float>& model, const std::string& model_name,
                         const BenchOptions& opts);

double Mean(const std::vector<double>& v);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double StdDev(const std::vector<double>& v);

// Columns: model, mode, resolution, batch, occupancy, reps, workers,
// time_mean_s, time_std_s, nomap_mean_s, nomap_std_s, memory_mean_bytes,
// memory_std_bytes. OOM arms carry "OOM" in every measurement cell.
void WriteBenchCsv(const std::string& path, const std::vector<BenchReport>& reports);
std::vector<BenchReport> ReadBenchCsv(const std::string& path);
std::string FormatBenchCsv(const std::vector<BenchReport>& reports);
// Table layout: model | resolution | batch | occupancy | mode | time (s) |
// time w/o maps (s) | memory (MiB), each as mean ± std.
std::string FormatBenchMarkdown(const std::vector<BenchReport>& reports);

}  // namespace sparseseg

#endif  // SPARSESEG_BENCH_BENCH_H_
