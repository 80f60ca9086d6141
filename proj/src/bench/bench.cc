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

#include "sparseseg/bench/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "sparseseg/common/errors.h"
#include "sparseseg/common/memory.h"

namespace sparseseg {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

struct BatchInput {
  std::vector<Coord> coords;  // canonical order
  std::vector<float> feats;
};

float FeatureAt(uint64_t seed, int b, int64_t linear) {
  // Cheap deterministic hash into [-1, 1].
  uint64_t h = (seed + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(b + 1)) ^
               (static_cast<uint64_t>(linear) * 0xbf58476d1ce4e5b9ULL);
  h ^= h >> 31;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 29;
  return static_cast<float>(static_cast<double>(h >> 11) / 9007199254740992.0 * 2.0 - 1.0);
}

BatchInput MakeInput(const std::vector<BinaryVolume>& blobs, uint64_t seed) {
  BatchInput in;
  for (size_t b = 0; b < blobs.size(); ++b) {
    const BinaryVolume& m = blobs[b];
    for (int64_t i = 0; i < VoxelCount(m.dims); ++i) {
      if (!m.values[static_cast<size_t>(i)]) continue;
      const Index3 p = UnravelIndex(m.dims, i);
      in.coords.push_back({static_cast<int>(b), p[0], p[1], p[2]});
      in.feats.push_back(FeatureAt(seed, static_cast<int>(b), i));
    }
  }
  std::vector<size_t> order(in.coords.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t c) { return CanonicalLess(in.coords[a], in.coords[c]); });
  BatchInput sorted;
  for (size_t i : order) {
    sorted.coords.push_back(in.coords[i]);
    sorted.feats.push_back(in.feats[i]);
  }
  return sorted;
}

SparseTensor<float> BuildSparse(const BatchInput& in) {
  Matrix<float> f(static_cast<int64_t>(in.feats.size()), 1);
  std::copy(in.feats.begin(), in.feats.end(), f.data());
  return MakeSparseTensor(in.coords, std::move(f));
}

std::pair<DenseVolume<float>, DenseMask> BuildDense(const BatchInput& in, int batch, int size) {
  const Index3 d{size, size, size};
  DenseVolume<float> v(batch, d, 1);
  DenseMask m(batch, d);
  for (size_t i = 0; i < in.coords.size(); ++i) {
    const Coord& c = in.coords[i];
    const int64_t off = v.VoxelOffset(c.b, c.x, c.y, c.z);
    v.data[static_cast<size_t>(off)] = in.feats[i];
    m.active[static_cast<size_t>(off)] = 1;
  }
  return {std::move(v), std::move(m)};
}

BenchReport BaseReport(const std::string& model, const std::string& mode, const BenchOptions& o) {
  BenchReport r;
  r.model = model;
  r.mode = mode;
  r.size = o.size;
  r.occupancy = o.occupancy;
  r.batch = o.batch;
  r.reps = o.reps;
  r.workers = o.workers;
  return r;
}

void Summarize(BenchReport& r, const std::vector<double>& times, const std::vector<double>& nomap,
               const std::vector<double>& memory) {
  r.time_mean = Mean(times);
  r.time_std = StdDev(times);
  r.nomap_mean = Mean(nomap);
  r.nomap_std = StdDev(nomap);
  r.memory_mean = Mean(memory);
  r.memory_std = StdDev(memory);
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void BenchOptions::Validate() const {
  if (size < 1) throw InvalidArgument("bench size must be positive");
  if (!(occupancy > 0.0 && occupancy <= 1.0)) {
    throw InvalidArgument("bench occupancy must lie in (0, 1]");
  }
  if (batch < 1) throw InvalidArgument("bench batch must be positive");
  if (reps < 5) throw InvalidArgument("bench needs at least 5 timed repetitions");
  if (warmup < 1) throw InvalidArgument("bench needs at least one warmup run");
  if (memory_budget < 0) throw InvalidArgument("memory budget must be >= 0");
  if (workers != 1) throw InvalidArgument("the engine runs on a single worker");
}

BinaryVolume MakeBlobVolume(int size, double occupancy, uint64_t seed) {
  if (size < 1 || !(occupancy >= 0.0 && occupancy <= 1.0)) {
    throw InvalidArgument("blob volume needs size >= 1 and occupancy in [0, 1]");
  }
  const Index3 d{size, size, size};
  BinaryVolume m(d);
  const int64_t total = VoxelCount(d);
  const auto target = static_cast<int64_t>(std::floor(occupancy * static_cast<double>(total)));
  int64_t count = 0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre(0.0, size), axis(0.04 * size, 0.15 * size);
  for (int attempt = 0; count < target && attempt < 100000; ++attempt) {
    const double cx = centre(rng), cy = centre(rng), cz = centre(rng);
    const double ax = std::max(1.0, axis(rng)), ay = std::max(1.0, axis(rng)),
                 az = std::max(1.0, axis(rng));
    const int z0 = std::max(0, static_cast<int>(std::floor(cz - az)));
    const int z1 = std::min(size - 1, static_cast<int>(std::ceil(cz + az)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ay)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + ay)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - ax)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + ax)));
    for (int z = z0; z <= z1 && count < target; ++z) {
      for (int y = y0; y <= y1 && count < target; ++y) {
        for (int x = x0; x <= x1 && count < target; ++x) {
          const double u = (x + 0.5 - cx) / ax, v = (y + 0.5 - cy) / ay, w = (z + 0.5 - cz) / az;
          if (u * u + v * v + w * w > 1.0) continue;
          uint8_t& cell = m.at(x, y, z);
          if (!cell) {
            cell = 1;
            ++count;
          }
        }
      }
    }
  }
  // Near-full occupancies: ellipsoids stop making progress, finish in raster order.
  for (int64_t i = 0; i < total && count < target; ++i) {
    uint8_t& cell = m.values[static_cast<size_t>(i)];
    if (!cell) {
      cell = 1;
      ++count;
    }
  }
  return m;
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double StdDev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

BenchResult RunBenchmark(const SparseUNet<float>& model, const std::string& model_name,
                         const BenchOptions& opts) {
  opts.Validate();
  std::vector<BinaryVolume> blobs;
  for (int b = 0; b < opts.batch; ++b) {
    blobs.push_back(MakeBlobVolume(opts.size, opts.occupancy, opts.seed + static_cast<uint64_t>(b)));
  }
  const BatchInput input = MakeInput(blobs, opts.seed);
  blobs.clear();

  BenchResult result;
  result.sparse = BaseReport(model_name, "sparse", opts);
  result.dense = BaseReport(model_name, "dense", opts);
  std::vector<SparseTensor<float>> sparse_out;
  std::vector<DenseVolume<float>> dense_out;

  try {
    ScopedMemoryBudget budget(opts.memory_budget);
    std::vector<double> times, nomap, memory;
    SparseTensor<float> cached = BuildSparse(input);
    for (int i = 0; i < opts.warmup; ++i) sparse_out = model.Forward(cached, nullptr, 1);
    sparse_out.clear();
    for (int i = 0; i < opts.reps; ++i) {
      const int64_t base = MemoryTracker::ResetPeak();
      const auto t0 = Clock::now();
      {
        const SparseTensor<float> x = BuildSparse(input);
        model.Forward(x, nullptr, 1);
      }
      const auto t1 = Clock::now();
      times.push_back(Seconds(t0, t1));
      memory.push_back(static_cast<double>(MemoryTracker::Peak() - base));
    }
    for (int i = 0; i < opts.reps; ++i) {
      const auto t0 = Clock::now();
      auto out = model.Forward(cached, nullptr, 1);
      nomap.push_back(Seconds(t0, Clock::now()));
      if (i + 1 == opts.reps) sparse_out = std::move(out);
    }
    Summarize(result.sparse, times, nomap, memory);
  } catch (const MemoryBudgetExceeded&) {
    result.sparse.oom = true;
    sparse_out.clear();
  }

  try {
    ScopedMemoryBudget budget(opts.memory_budget);
    std::vector<double> times, memory;
    {
      auto [x, mask] = BuildDense(input, opts.batch, opts.size);
      for (int i = 0; i < opts.warmup; ++i) dense_out = model.DenseForward(x, mask, 1);
      dense_out.clear();
    }
    for (int i = 0; i < opts.reps; ++i) {
      const int64_t base = MemoryTracker::ResetPeak();
      const auto t0 = Clock::now();
      {
        auto [x, mask] = BuildDense(input, opts.batch, opts.size);
        auto out = model.DenseForward(x, mask, 1);
        if (i + 1 == opts.reps) dense_out = std::move(out);
      }
      times.push_back(Seconds(t0, Clock::now()));
      memory.push_back(static_cast<double>(MemoryTracker::Peak() - base));
    }
    Summarize(result.dense, times, times, memory);
  } catch (const MemoryBudgetExceeded&) {
    result.dense.oom = true;
    dense_out.clear();
  }

  if (!result.sparse.oom && !result.dense.oom) {
    double diff = 0.0;
    const SparseTensor<float>& s = sparse_out.at(0);
    const DenseVolume<float>& dv = dense_out.at(0);
    for (int64_t r = 0; r < s.size(); ++r) {
      const Coord& c = (*s.coords)[r];
      const float* dp = dv.at(c.b, c.x, c.y, c.z);
      for (int ch = 0; ch < s.channels(); ++ch) {
        diff = std::max(diff, static_cast<double>(std::abs(s.values()(r, ch) - dp[ch])));
      }
    }
    result.max_abs_diff = diff;
  }
  return result;
}

std::string FormatBenchCsv(const std::vector<BenchReport>& reports) {
  std::ostringstream out;
  out << "model,mode,resolution,batch,occupancy,reps,workers,time_mean_s,time_std_s,"
         "nomap_mean_s,nomap_std_s,memory_mean_bytes,memory_std_bytes\n";
  for (const BenchReport& r : reports) {
    if (r.model.find_first_of(",\n") != std::string::npos) {
      throw InvalidArgument("model name must not contain commas or newlines");
    }
    out << r.model << ',' << r.mode << ',' << r.size << ',' << r.batch << ','
        << Num(r.occupancy) << ',' << r.reps << ',' << r.workers;
    for (double v : {r.time_mean, r.time_std, r.nomap_mean, r.nomap_std, r.memory_mean,
                     r.memory_std}) {
      out << ',' << (r.oom ? std::string("OOM") : Num(v));
    }
    out << '\n';
  }
  return out.str();
}

void WriteBenchCsv(const std::string& path, const std::vector<BenchReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << FormatBenchCsv(reports);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<BenchReport> ReadBenchCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  std::vector<BenchReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 13) throw FormatError("bench csv row needs 13 cells: " + line);
    BenchReport r;
    try {
      r.model = cells[0];
      r.mode = cells[1];
      r.size = std::stoi(cells[2]);
      r.batch = std::stoi(cells[3]);
      r.occupancy = std::stod(cells[4]);
      r.reps = std::stoi(cells[5]);
      r.workers = std::stoi(cells[6]);
      r.oom = cells[7] == "OOM";
      if (!r.oom) {
        double* fields[] = {&r.time_mean, &r.time_std, &r.nomap_mean, &r.nomap_std,
                            &r.memory_mean, &r.memory_std};
        for (int i = 0; i < 6; ++i) *fields[i] = std::stod(cells[static_cast<size_t>(7 + i)]);
      }
    } catch (const std::logic_error&) {
      throw FormatError("malformed bench csv row: " + line);
    }
    reports.push_back(r);
  }
  return reports;
}

std::string FormatBenchMarkdown(const std::vector<BenchReport>& reports) {
  std::ostringstream out;
  out << "| Model | Resolution | Batch | Occupancy | Mode | Time (s) | Time w/o maps (s) "
         "| Memory (MiB) |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const BenchReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "| %s | %d^3 | %d | %.4f | %s | ", r.model.c_str(), r.size,
                  r.batch, r.occupancy, r.mode.c_str());
    out << buf;
    if (r.oom) {
      out << "OOM | OOM | OOM |\n";
      continue;
    }
    constexpr double kMiB = 1024.0 * 1024.0;
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f | %.4f ± %.4f | %.1f ± %.1f |\n", r.time_mean,
                  r.time_std, r.nomap_mean, r.nomap_std, r.memory_mean / kMiB,
                  r.memory_std / kMiB);
    out << buf;
  }
  return out.str();
}

}  // namespace sparseseg
