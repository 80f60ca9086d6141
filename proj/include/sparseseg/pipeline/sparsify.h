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

#ifndef SPARSESEG_PIPELINE_SPARSIFY_H_
#define SPARSESEG_PIPELINE_SPARSIFY_H_

#include <span>

#include "sparseseg/core/sparse_tensor.h"
#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// Closed HU interval [lo, hi] used to pick active voxels and to scale features.
struct HUWindow {
  double lo = -53.4;
  double hi = 283.2;

  bool Contains(double v) const { return v >= lo && v <= hi; }
  void Validate() const;
};

// Percentiles with linear interpolation between order statistics. Throws on
// an empty stream or when lo == hi.
HUWindow ComputePercentileRange(std::span<const double> values, double lo_pct = 0.5,
                                double hi_pct = 99.5);
double Percentile(std::span<const double> values, double pct);

// Voxel values of `grid` wherever `labels` is non-background.
std::vector<double> ForegroundValues(const VoxelGrid& grid, const VoxelGrid& labels);

BinaryVolume ApplyHuWindow(const VoxelGrid& grid, const HUWindow& w);

// [lo, hi] -> [-1, 1]; values outside are clamped.
double NormalizeIntensity(double hu, const HUWindow& w);
double DenormalizeIntensity(double feature, const HUWindow& w);

// Active rows of `mask` with normalized intensity as the single feature.
template <typename T>
SparseTensor<T> SparsifyNormalized(const VoxelGrid& grid, const BinaryVolume& mask,
                                   const HUWindow& w, int batch_index = 0);

// Per-row multilabel targets (3 columns) gathered at the coordinates of `st`.
template <typename T>
Matrix<T> GatherMultiLabel(const VoxelGrid& labels, const SparseTensor<T>& st);

}  // namespace sparseseg

#endif  // SPARSESEG_PIPELINE_SPARSIFY_H_
