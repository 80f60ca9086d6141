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

#ifndef SPARSESEG_CORE_KERNEL_MAP_H_
#define SPARSESEG_CORE_KERNEL_MAP_H_

#include <array>
#include <cstdint>
#include <vector>

#include "sparseseg/common/memory.h"
#include "sparseseg/core/coords.h"

namespace sparseseg {

// Per kernel offset, the (input row, output row) pairs of a convolution.
// Offset k reads the input at out_coord + offsets[k] * input_stride.
// Pairs within an offset are ordered by output row.
struct KernelMap {
  std::vector<std::array<int, 3>> offsets;
  std::vector<TrackedVector<int32_t>> in_rows;
  std::vector<TrackedVector<int32_t>> out_rows;
  int64_t in_size = 0;
  int64_t out_size = 0;

  int volume() const { return static_cast<int>(offsets.size()); }
  int64_t PairCount() const;
  // Same map with input and output roles exchanged (transposed convolution).
  KernelMap Transposed() const;
};

// Offsets {-r..r}^3 per axis, x fastest. Kernel must be odd per axis.
std::vector<std::array<int, 3>> CenteredOffsets(const std::array<int, 3>& kernel);
// Offsets [0, kernel)^3, x fastest.
std::vector<std::array<int, 3>> WindowOffsets(const std::array<int, 3>& kernel);

// Output set == input set. The zero offset pairs every row with itself.
KernelMap BuildSubmanifoldMap(const CoordinateSet& coords,
                              const std::array<int, 3>& kernel);

// `out` must live at stride in.stride() * factor and be aligned to it.
// Pairs (i, j) with in[i] == out[j] + k * in.stride(), k in [0, kernel)^3.
KernelMap BuildStridedMap(const CoordinateSet& in, const CoordinateSet& out,
                          const std::array<int, 3>& kernel,
                          const std::array<int, 3>& factor);

}  // namespace sparseseg

#endif  // SPARSESEG_CORE_KERNEL_MAP_H_
