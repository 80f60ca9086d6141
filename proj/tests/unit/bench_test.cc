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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "sparseseg/bench/bench.h"
#include "sparseseg/common/errors.h"
#include "sparseseg/pipeline/pipeline.h"
#include "test_util.h"

namespace sparseseg {
namespace {

SparseUNet<float> SmallModel() {
  ModelConfig c;
  c.stage_widths = {4, 8, 8};
  c.stage_depths = {1, 1, 1};
  c.decoder_blocks_per_stage = 1;
  c.ds_heads = 2;
  return SparseUNet<float>::Build(c, 4);
}

TEST(BlobVolume, ExactActiveCount) {
  for (double occ : {0.0, 0.001, 0.05, 0.1, 0.37, 0.9, 1.0}) {
    const BinaryVolume m = MakeBlobVolume(20, occ, 3);
    EXPECT_EQ(m.Count(), static_cast<int64_t>(std::floor(occ * 8000))) << occ;
  }
  EXPECT_EQ(MakeBlobVolume(16, 0.1, 9), MakeBlobVolume(16, 0.1, 9));
  EXPECT_NE(MakeBlobVolume(16, 0.1, 9), MakeBlobVolume(16, 0.1, 10));
  EXPECT_THROW(MakeBlobVolume(16, 1.5, 0), InvalidArgument);
}

TEST(BlobVolume, ClusteredRatherThanScattered) {
  // Blobs keep most active voxels next to another active voxel.
  const BinaryVolume m = MakeBlobVolume(32, 0.05, 1);
  int64_t with_neighbour = 0;
  for (int z = 1; z < 31; ++z) {
    for (int y = 1; y < 31; ++y) {
      for (int x = 1; x < 31; ++x) {
        if (m.at(x, y, z) && (m.at(x + 1, y, z) || m.at(x - 1, y, z) || m.at(x, y + 1, z))) {
          ++with_neighbour;
        }
      }
    }
  }
  EXPECT_GT(with_neighbour, m.Count() / 2);
}

TEST(Bench, FullOccupancyArmsAgree) {
  BenchOptions o;
  o.size = 8;
  o.occupancy = 1.0;
  o.reps = 5;
  const BenchResult r = RunBenchmark(SmallModel(), "small", o);
  ASSERT_FALSE(r.sparse.oom);
  ASSERT_FALSE(r.dense.oom);
  EXPECT_GE(r.max_abs_diff, 0.0);
  EXPECT_LT(r.max_abs_diff, 1e-4);
  EXPECT_EQ(r.sparse.reps, 5);
  EXPECT_EQ(r.sparse.mode, "sparse");
  EXPECT_EQ(r.dense.mode, "dense");
  EXPECT_GT(r.sparse.memory_mean, 0.0);
  EXPECT_GT(r.dense.time_mean, 0.0);
}

TEST(Bench, BatchedArmsAgree) {
  BenchOptions o;
  o.size = 10;
  o.occupancy = 0.3;
  o.batch = 2;
  const BenchResult r = RunBenchmark(SmallModel(), "small", o);
  EXPECT_LT(r.max_abs_diff, 1e-4);
  EXPECT_EQ(r.sparse.batch, 2);
}

TEST(Bench, TinyBudgetReportsOomInsteadOfThrowing) {
  BenchOptions o;
  o.size = 12;
  o.occupancy = 0.2;
  o.memory_budget = 1024;
  const BenchResult r = RunBenchmark(SmallModel(), "small", o);
  EXPECT_TRUE(r.sparse.oom);
  EXPECT_TRUE(r.dense.oom);
  EXPECT_LT(r.max_abs_diff, 0.0);
  EXPECT_EQ(MemoryTracker::Budget(), 0);
}

TEST(Bench, SparsePeakMemoryMonotoneInOccupancy) {
  double previous = 0.0;
  for (double occ : {0.02, 0.1, 0.4}) {
    BenchOptions o;
    o.size = 16;
    o.occupancy = occ;
    const BenchResult r = RunBenchmark(SmallModel(), "small", o);
    EXPECT_GT(r.sparse.memory_mean, previous) << occ;
    previous = r.sparse.memory_mean;
  }
}

TEST(Bench, OptionValidation) {
  BenchOptions o;
  o.reps = 4;
  EXPECT_THROW(o.Validate(), InvalidArgument);
  o.reps = 5;
  o.workers = 2;
  EXPECT_THROW(o.Validate(), InvalidArgument);
  o.workers = 1;
  o.occupancy = 0.0;
  EXPECT_THROW(o.Validate(), InvalidArgument);
}

TEST(Bench, StatisticsHelpers) {
  EXPECT_DOUBLE_EQ(Mean({1, 2, 3, 4, 5}), 3.0);
  EXPECT_DOUBLE_EQ(StdDev({1, 2, 3, 4, 5}), std::sqrt(2.5));
  EXPECT_EQ(StdDev({7}), 0.0);
}

BenchReport SampleReport(const std::string& mode, bool oom) {
  BenchReport r;
  r.model = "default";
  r.mode = mode;
  r.size = 128;
  r.occupancy = 0.05;
  r.batch = 1;
  r.reps = 5;
  r.oom = oom;
  if (!oom) {
    r.time_mean = 0.1234567890123;
    r.time_std = 1.0 / 3.0;
    r.nomap_mean = 0.1;
    r.nomap_std = 2e-9;
    r.memory_mean = 123456789.0;
    r.memory_std = 0.0;
  }
  return r;
}

TEST(BenchReport, CsvRoundTripIsExact) {
  const std::vector<BenchReport> reports = {SampleReport("sparse", false), SampleReport("dense", true)};
  const auto dir = testing::TempDir("bench_csv");
  WriteBenchCsv((dir / "r.csv").string(), reports);
  EXPECT_EQ(ReadBenchCsv((dir / "r.csv").string()), reports);
  std::ifstream in(dir / "r.csv");
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  EXPECT_EQ(header.substr(0, 30), "model,mode,resolution,batch,oc");
  EXPECT_NE(row2.find(",OOM,OOM,OOM,OOM,OOM,OOM"), std::string::npos);
  EXPECT_EQ(FormatBenchCsv(reports), FormatBenchCsv(reports));
}

TEST(BenchReport, MarkdownRowsAndOomCells) {
  const std::string md = FormatBenchMarkdown({SampleReport("sparse", false), SampleReport("dense", true)});
  int lines = 0;
  for (char c : md) lines += c == '\n';
  EXPECT_EQ(lines, 4);
  EXPECT_NE(md.find("| default | 128^3 | 1 | 0.0500 | sparse | 0.1235 ± 0.3333 |"), std::string::npos);
  EXPECT_NE(md.find("| dense | OOM | OOM | OOM |"), std::string::npos);
}

TEST(BenchReport, MalformedCsvThrows) {
  const auto dir = testing::TempDir("bench_bad");
  std::ofstream(dir / "bad.csv") << "header\nonly,three,cells\n";
  EXPECT_THROW(ReadBenchCsv((dir / "bad.csv").string()), FormatError);
  EXPECT_THROW(ReadBenchCsv((dir / "missing.csv").string()), IoError);
}

TEST(PipelineOptions, JsonRoundTripAndValidation) {
  PipelineOptions o;
  o.window = {-10, 90};
  o.low_spacing = {2, 2.5, 3};
  o.dilate = 7;
  o.connectivity = 6;
  const PipelineOptions back = PipelineOptionsFromJson(ToJson(o));
  EXPECT_EQ(back.window.lo, -10);
  EXPECT_EQ(back.low_spacing, o.low_spacing);
  EXPECT_EQ(back.dilate, 7);
  EXPECT_EQ(back.connectivity, 6);
  EXPECT_EQ(PipelineOptionsFromJson({{"low_spacing", 1.99}}).low_spacing, (Vec3{1.99, 1.99, 1.99}));
  EXPECT_THROW(PipelineOptionsFromJson({{"dilate", 4}}), InvalidArgument);
  EXPECT_THROW(PipelineOptionsFromJson({{"connectivity", 18}}), InvalidArgument);
  EXPECT_THROW(PipelineOptionsFromJson({{"bogus", 1}}), FormatError);
  EXPECT_THROW(PipelineOptionsFromJson({{"hu_window", {1, 2, 3}}}), FormatError);
}

}  // namespace
}  // namespace sparseseg
