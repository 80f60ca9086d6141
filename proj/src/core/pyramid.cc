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

#include "sparseseg/core/pyramid.h"

#include <utility>

#include "sparseseg/common/errors.h"

namespace sparseseg {

CoordinatePyramid::SetPtr CoordinatePyramid::Register(CoordinateSet coords) {
  const Stride stride = coords.stride();
  auto it = levels_.find(stride);
  if (it != levels_.end()) {
    if (!it->second->SameCoordinates(coords)) {
      throw InvalidArgument("pyramid level " + StrideToString(stride) +
                            " already holds a different coordinate set");
    }
    return it->second;
  }
  auto ptr = std::make_shared<const CoordinateSet>(std::move(coords));
  levels_.emplace(stride, ptr);
  return ptr;
}

CoordinatePyramid::SetPtr CoordinatePyramid::Lookup(const Stride& stride) const {
  auto it = levels_.find(stride);
  if (it == levels_.end()) {
    throw InvalidArgument("pyramid has no level at stride " + StrideToString(stride));
  }
  return it->second;
}

CoordinatePyramid::SetPtr CoordinatePyramid::Downsample(
    const Stride& from, const std::array<int, 3>& factor) {
  const Stride to = MulStride(from, factor);
  if (auto it = levels_.find(to); it != levels_.end()) return it->second;
  return Register(DownsampleCoords(*Lookup(from), factor));
}

CoordinatePyramid::MapPtr CoordinatePyramid::SubmanifoldMap(
    const Stride& stride, const std::array<int, 3>& kernel) {
  const MapKey key{0, stride, kernel, {1, 1, 1}};
  if (auto it = maps_.find(key); it != maps_.end()) return it->second;
  auto map = std::make_shared<const KernelMap>(BuildSubmanifoldMap(*Lookup(stride), kernel));
  maps_.emplace(key, map);
  return map;
}

CoordinatePyramid::MapPtr CoordinatePyramid::StridedMap(
    const Stride& in_stride, const std::array<int, 3>& factor,
    const std::array<int, 3>& kernel) {
  const MapKey key{1, in_stride, kernel, factor};
  if (auto it = maps_.find(key); it != maps_.end()) return it->second;
  const SetPtr in = Lookup(in_stride);
  const SetPtr out = Downsample(in_stride, factor);
  auto map = std::make_shared<const KernelMap>(BuildStridedMap(*in, *out, kernel, factor));
  maps_.emplace(key, map);
  return map;
}

}  // namespace sparseseg
