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

#ifndef SPARSESEG_CORE_SPARSE_TENSOR_H_
#define SPARSESEG_CORE_SPARSE_TENSOR_H_

#include <memory>
#include <vector>

#include "sparseseg/core/coords.h"
#include "sparseseg/core/matrix.h"
#include "sparseseg/core/pyramid.h"
#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// Coordinates (a pyramid level) plus an N x C feature variable.
template <typename T>
struct SparseTensor {
  std::shared_ptr<CoordinatePyramid> pyramid;
  CoordinatePyramid::SetPtr coords;
  VarPtr<T> feats;

  int64_t size() const { return coords ? coords->size() : 0; }
  int channels() const { return feats ? static_cast<int>(feats->value.cols()) : 0; }
  const Stride& stride() const { return coords->stride(); }
  const Matrix<T>& values() const { return feats->value; }

  // Same coordinates, new features.
  SparseTensor WithFeatures(VarPtr<T> f) const { return {pyramid, coords, std::move(f)}; }
};

// Creates a fresh pyramid with `coords` registered at `stride`.
template <typename T>
SparseTensor<T> MakeSparseTensor(std::vector<Coord> coords, Matrix<T> feats,
                                 Stride stride = {1, 1, 1},
                                 bool requires_grad = false);

// Dense multi-channel volume (batch, z, y, x, c), channels fastest.
template <typename T>
struct DenseVolume {
  int batch = 1;
  Index3 dims{0, 0, 0};
  int channels = 0;
  TrackedVector<T> data;

  DenseVolume() = default;
  DenseVolume(int b, Index3 d, int c, T fill = T(0))
      : batch(b), dims(d), channels(c),
        data(static_cast<size_t>(b * VoxelCount(d) * c), fill) {}

  int64_t voxels() const { return VoxelCount(dims); }
  int64_t VoxelOffset(int b, int x, int y, int z) const {
    return static_cast<int64_t>(b) * voxels() + LinearIndex(dims, x, y, z);
  }
  T* at(int b, int x, int y, int z) {
    return data.data() + VoxelOffset(b, x, y, z) * channels;
  }
  const T* at(int b, int x, int y, int z) const {
    return data.data() + VoxelOffset(b, x, y, z) * channels;
  }
};

// Writes features at coord / stride; `fill` elsewhere. Throws when a
// coordinate falls outside `dims` (in stride units) or batch range.
// One row per active voxel in canonical order, single feature column holding
// the grid value. An all-false mask yields an empty tensor.
template <typename T>
SparseTensor<T> SparsifyDense(const VoxelGrid& grid, const BinaryVolume& mask,
                              int batch_index = 0);

template <typename T>
DenseVolume<T> Densify(const SparseTensor<T>& st, const Index3& dims, T fill,
                       int batch = 1);

}  // namespace sparseseg

#endif  // SPARSESEG_CORE_SPARSE_TENSOR_H_
