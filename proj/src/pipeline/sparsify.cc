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

#include "sparseseg/pipeline/sparsify.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparseseg/common/errors.h"
#include "sparseseg/volume/multilabel.h"

namespace sparseseg {

void HUWindow::Validate() const {
  if (!(lo < hi)) {
    throw InvalidArgument("degenerate HU window [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
}

double Percentile(std::span<const double> values, double pct) {
  if (values.empty()) throw InvalidArgument("percentile of an empty stream");
  if (!(pct >= 0.0 && pct <= 100.0)) throw InvalidArgument("percentile outside [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(rank));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  double b = a;
  if (hi != lo) b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
  return a + (b - a) * (rank - static_cast<double>(lo));
}

HUWindow ComputePercentileRange(std::span<const double> values, double lo_pct, double hi_pct) {
  if (!(lo_pct < hi_pct)) throw InvalidArgument("lower percentile must be below upper");
  HUWindow w{Percentile(values, lo_pct), Percentile(values, hi_pct)};
  w.Validate();
  return w;
}

std::vector<double> ForegroundValues(const VoxelGrid& grid, const VoxelGrid& labels) {
  if (grid.dims() != labels.dims()) throw ShapeMismatch("image and label dims differ");
  std::vector<double> out;
  for (int64_t i = 0; i < grid.size(); ++i) {
    if (labels[i] != static_cast<float>(kBackground)) out.push_back(grid[i]);
  }
  return out;
}

BinaryVolume ApplyHuWindow(const VoxelGrid& grid, const HUWindow& w) {
  // Bounds rounded to the grid's float storage, so a voxel holding exactly
  // the bound is inside.
  const float lo = static_cast<float>(w.lo), hi = static_cast<float>(w.hi);
  BinaryVolume mask(grid.dims());
  for (int64_t i = 0; i < grid.size(); ++i) {
    mask.values[static_cast<size_t>(i)] = grid[i] >= lo && grid[i] <= hi ? 1 : 0;
  }
  return mask;
}

double NormalizeIntensity(double hu, const HUWindow& w) {
  const double f = 2.0 * (hu - w.lo) / (w.hi - w.lo) - 1.0;
  return std::clamp(f, -1.0, 1.0);
}

double DenormalizeIntensity(double feature, const HUWindow& w) {
  return w.lo + (feature + 1.0) * 0.5 * (w.hi - w.lo);
}

template <typename T>
SparseTensor<T> SparsifyNormalized(const VoxelGrid& grid, const BinaryVolume& mask,
                                   const HUWindow& w, int batch_index) {
  w.Validate();
  SparseTensor<T> st = SparsifyDense<T>(grid, mask, batch_index);
  Matrix<T>& f = st.feats->value;
  for (int64_t r = 0; r < f.rows(); ++r) {
    f(r, 0) = static_cast<T>(NormalizeIntensity(static_cast<double>(f(r, 0)), w));
  }
  return st;
}

template <typename T>
Matrix<T> GatherMultiLabel(const VoxelGrid& labels, const SparseTensor<T>& st) {
  const MultiLabelMask ml = MakeMultiLabel(labels);
  Matrix<T> out(st.size(), MultiLabelMask::kChannels);
  for (int64_t r = 0; r < st.size(); ++r) {
    const Coord& c = (*st.coords)[r];
    if (!InBounds(labels.dims(), {c.x, c.y, c.z})) {
      throw InvalidArgument("coordinate outside label grid");
    }
    const auto i = static_cast<size_t>(LinearIndex(labels.dims(), c.x, c.y, c.z));
    for (int k = 0; k < MultiLabelMask::kChannels; ++k) {
      out(r, k) = static_cast<T>(ml.channels[static_cast<size_t>(k)][i]);
    }
  }
  return out;
}

template SparseTensor<float> SparsifyNormalized(const VoxelGrid&, const BinaryVolume&,
                                                const HUWindow&, int);
template SparseTensor<double> SparsifyNormalized(const VoxelGrid&, const BinaryVolume&,
                                                 const HUWindow&, int);
template Matrix<float> GatherMultiLabel(const VoxelGrid&, const SparseTensor<float>&);
template Matrix<double> GatherMultiLabel(const VoxelGrid&, const SparseTensor<double>&);

}  // namespace sparseseg
