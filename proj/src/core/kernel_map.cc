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

#include "sparseseg/core/kernel_map.h"

#include <string>

#include "sparseseg/common/errors.h"

namespace sparseseg {

int64_t KernelMap::PairCount() const {
  int64_t n = 0;
  for (const auto& rows : in_rows) n += static_cast<int64_t>(rows.size());
  return n;
}

KernelMap KernelMap::Transposed() const {
  KernelMap t;
  t.offsets = offsets;
  t.in_rows = out_rows;
  t.out_rows = in_rows;
  t.in_size = out_size;
  t.out_size = in_size;
  return t;
}

std::vector<std::array<int, 3>> CenteredOffsets(const std::array<int, 3>& kernel) {
  for (int a = 0; a < 3; ++a) {
    if (kernel[a] < 1 || kernel[a] % 2 == 0) {
      throw InvalidArgument("submanifold kernel must be odd on every axis");
    }
  }
  const int rx = kernel[0] / 2, ry = kernel[1] / 2, rz = kernel[2] / 2;
  std::vector<std::array<int, 3>> offsets;
  offsets.reserve(static_cast<size_t>(kernel[0] * kernel[1] * kernel[2]));
  for (int dz = -rz; dz <= rz; ++dz) {
    for (int dy = -ry; dy <= ry; ++dy) {
      for (int dx = -rx; dx <= rx; ++dx) offsets.push_back({dx, dy, dz});
    }
  }
  return offsets;
}

std::vector<std::array<int, 3>> WindowOffsets(const std::array<int, 3>& kernel) {
  for (int a = 0; a < 3; ++a) {
    if (kernel[a] < 1) throw InvalidArgument("kernel must be positive");
  }
  std::vector<std::array<int, 3>> offsets;
  for (int dz = 0; dz < kernel[2]; ++dz) {
    for (int dy = 0; dy < kernel[1]; ++dy) {
      for (int dx = 0; dx < kernel[0]; ++dx) offsets.push_back({dx, dy, dz});
    }
  }
  return offsets;
}

namespace {

KernelMap BuildByOutputScan(const CoordinateSet& in, const CoordinateSet& out,
                            std::vector<std::array<int, 3>> offsets) {
  KernelMap map;
  map.offsets = std::move(offsets);
  map.in_size = in.size();
  map.out_size = out.size();
  const size_t k_count = map.offsets.size();
  map.in_rows.resize(k_count);
  map.out_rows.resize(k_count);
  const Stride& s = in.stride();
  for (int64_t j = 0; j < out.size(); ++j) {
    const Coord& o = out[j];
    for (size_t k = 0; k < k_count; ++k) {
      const auto& d = map.offsets[k];
      const Coord probe{o.b, o.x + d[0] * s[0], o.y + d[1] * s[1], o.z + d[2] * s[2]};
      const int64_t i = in.Find(probe);
      if (i < 0) continue;
      map.in_rows[k].push_back(static_cast<int32_t>(i));
      map.out_rows[k].push_back(static_cast<int32_t>(j));
    }
  }
  return map;
}

}  // namespace

KernelMap BuildSubmanifoldMap(const CoordinateSet& coords,
                              const std::array<int, 3>& kernel) {
  return BuildByOutputScan(coords, coords, CenteredOffsets(kernel));
}

KernelMap BuildStridedMap(const CoordinateSet& in, const CoordinateSet& out,
                          const std::array<int, 3>& kernel,
                          const std::array<int, 3>& factor) {
  const Stride expected = MulStride(in.stride(), factor);
  if (out.stride() != expected) {
    throw InvalidArgument("output stride " + StrideToString(out.stride()) +
                          " != input stride x factor " + StrideToString(expected));
  }
  return BuildByOutputScan(in, out, WindowOffsets(kernel));
}

}  // namespace sparseseg
