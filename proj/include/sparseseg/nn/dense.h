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

#ifndef SPARSESEG_NN_DENSE_H_
#define SPARSESEG_NN_DENSE_H_

#include <array>
#include <cstdint>
#include <vector>

#include "sparseseg/core/sparse_tensor.h"
#include "sparseseg/nn/ops.h"

namespace sparseseg {

// Dense counterparts of the sparse ops, inference only. Zero padding at the
// borders; they are the reference semantics for the sparse engine and the
// dense arm of the benchmarks.

// stride == 1: centred odd kernel, output dims == input dims.
// stride > 1: window kernel anchored at out * stride, output dims
// ceil(dims / stride).
template <typename T>
DenseVolume<T> DenseConv(const DenseVolume<T>& in, const ConvParams<T>& p,
                         const std::array<int, 3>& stride);

// out[o * stride + k] += in[o] W_k + b, cropped to `out_dims`.
template <typename T>
DenseVolume<T> DenseTransposedConv(const DenseVolume<T>& in, const ConvParams<T>& p,
                                   const std::array<int, 3>& stride, const Index3& out_dims);

// Centred depthwise convolution, stride 1.
template <typename T>
DenseVolume<T> DenseDepthwiseConv(const DenseVolume<T>& in, const ConvParams<T>& p);

template <typename T>
DenseVolume<T> DensePointwiseLinear(const DenseVolume<T>& in, const LinearParams<T>& p);
template <typename T>
DenseVolume<T> DenseLayerNorm(const DenseVolume<T>& in, const AffineNormParams<T>& p);
// Statistics per batch item over every voxel; callers keep inactive voxels
// at zero so this matches the sparse statistics.
template <typename T>
DenseVolume<T> DenseGrn(const DenseVolume<T>& in, const AffineNormParams<T>& p);
template <typename T>
void DenseGeluInPlace(DenseVolume<T>& v);
template <typename T>
void DenseSigmoidInPlace(DenseVolume<T>& v);
template <typename T>
void DenseAddInPlace(DenseVolume<T>& acc, const DenseVolume<T>& other);

// Per-voxel activity for each batch item, x-fastest.
struct DenseMask {
  int batch = 1;
  Index3 dims{0, 0, 0};
  TrackedVector<uint8_t> active;

  DenseMask() = default;
  DenseMask(int b, Index3 d) : batch(b), dims(d),
      active(static_cast<size_t>(b * VoxelCount(d)), 0) {}
  int64_t Count() const;
};

// Zeroes features of inactive voxels.
template <typename T>
void ApplyMask(DenseVolume<T>& v, const DenseMask& mask);

// A cell at the coarse level is active iff any voxel of its window is.
DenseMask DownsampleMask(const DenseMask& mask, const std::array<int, 3>& stride);

// Mask of a sparse tensor's coordinates (coords / stride) inside `dims`.
template <typename T>
DenseMask MaskOf(const SparseTensor<T>& st, const Index3& dims, int batch = 1);

}  // namespace sparseseg

#endif  // SPARSESEG_NN_DENSE_H_
