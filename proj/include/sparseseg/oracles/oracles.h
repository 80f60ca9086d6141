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

#ifndef SPARSESEG_ORACLES_ORACLES_H_
#define SPARSESEG_ORACLES_ORACLES_H_

// Brute-force reference implementations. None of these share code paths
// with the engine; they exist to check it.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <span>
#include <tuple>
#include <vector>

#include "sparseseg/core/coords.h"
#include "sparseseg/core/matrix.h"
#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg::oracles {

// Dense volume in (z, y, x, c) order, double precision.
struct NaiveVolume {
  Index3 dims{0, 0, 0};
  int channels = 0;
  std::vector<double> data;

  NaiveVolume() = default;
  NaiveVolume(Index3 d, int c) : dims(d), channels(c),
      data(static_cast<size_t>(VoxelCount(d) * c), 0.0) {}
  double& at(int x, int y, int z, int c) {
    return data[static_cast<size_t>(LinearIndex(dims, x, y, z) * channels + c)];
  }
  double at(int x, int y, int z, int c) const {
    return data[static_cast<size_t>(LinearIndex(dims, x, y, z) * channels + c)];
  }
};

// Weight lookup w(k, ci, co) for kernel offset index k (x fastest).
using WeightFn = std::function<double(int k, int ci, int co)>;

// Six nested spatial loops. centred: odd kernel, out[o] = sum in[o + d] w_d,
// stride 1. Otherwise window kernel anchored at o * stride.
NaiveVolume NaiveConv(const NaiveVolume& in, const WeightFn& w, const std::array<int, 3>& kernel,
                      int out_channels, const std::vector<double>& bias, bool centred,
                      const std::array<int, 3>& stride);

// out[o * stride + k] += in[o] w_k, cropped to out_dims.
NaiveVolume NaiveTransposedConv(const NaiveVolume& in, const WeightFn& w,
                                const std::array<int, 3>& kernel, int out_channels,
                                const std::vector<double>& bias,
                                const std::array<int, 3>& stride, const Index3& out_dims);

// (offset index, in row, out row) triples.
using PairSet = std::set<std::tuple<int, int64_t, int64_t>>;

// O(N^2 K) scan: in_i == out_j + offset_k * stride.
PairSet QuadraticSubmanifoldPairs(std::span<const Coord> coords, const Stride& stride,
                                  const std::array<int, 3>& kernel);
PairSet QuadraticStridedPairs(std::span<const Coord> in, const Stride& in_stride,
                              std::span<const Coord> out, const std::array<int, 3>& kernel);

// Distinct occupied cells of size `cell` found by pairwise comparison.
int64_t QuadraticCellCount(std::span<const Coord> coords, const Stride& cell);

// Numpy-style linear interpolation between order statistics.
double PercentileBySort(std::vector<double> values, double pct);

// Component sizes (descending) via union-find over explicit voxel pairs.
std::vector<int64_t> UnionFindComponentSizes(const BinaryVolume& mask, int connectivity);

// Lattice points o with sum (o_i / r)^2 <= 1 by exhaustive enumeration.
int64_t BallLatticeCount(int radius);

// Central differences over every element of `params`; returns the maximum of
// |analytic - numeric| / max(|analytic|, |numeric|, floor). `analytic`
// holds the gradients computed beforehand, aligned with `params`.
struct FdReport {
  double max_rel_error = 0.0;
  int64_t checked = 0;
  std::string worst;
};
FdReport CheckGradients(const std::function<double()>& loss,
                        const std::vector<std::pair<std::string, VarPtr<double>>>& params,
                        const std::vector<Matrix<double>>& analytic, double step = 1e-4,
                        double floor = 1e-6);

}  // namespace sparseseg::oracles

#endif  // SPARSESEG_ORACLES_ORACLES_H_
