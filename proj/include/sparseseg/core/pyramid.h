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

#ifndef SPARSESEG_CORE_PYRAMID_H_
#define SPARSESEG_CORE_PYRAMID_H_

#include <array>
#include <map>
#include <memory>
#include <tuple>

#include "sparseseg/core/coords.h"
#include "sparseseg/core/kernel_map.h"

namespace sparseseg {

// Registry of coordinate sets per stride level plus a kernel-map cache.
// Decoder levels look up the encoder's sets so summation skips line up row
// for row. Single writer while building; read-only afterwards.
class CoordinatePyramid {
 public:
  using SetPtr = std::shared_ptr<const CoordinateSet>;
  using MapPtr = std::shared_ptr<const KernelMap>;

  // Registers `coords` at its own stride. Re-registering an identical set
  // returns the existing level; a different set at a taken stride throws.
  SetPtr Register(CoordinateSet coords);
  // Throws for unknown strides.
  SetPtr Lookup(const Stride& stride) const;
  bool Has(const Stride& stride) const { return levels_.count(stride) != 0; }
  size_t level_count() const { return levels_.size(); }

  // Registers (or returns) DownsampleCoords(Lookup(from), factor).
  SetPtr Downsample(const Stride& from, const std::array<int, 3>& factor);

  MapPtr SubmanifoldMap(const Stride& stride, const std::array<int, 3>& kernel);
  MapPtr StridedMap(const Stride& in_stride, const std::array<int, 3>& factor,
                    const std::array<int, 3>& kernel);

  size_t cached_map_count() const { return maps_.size(); }
  void ClearMapCache() { maps_.clear(); }

 private:
  using MapKey = std::tuple<int, Stride, std::array<int, 3>, std::array<int, 3>>;
  std::map<Stride, SetPtr> levels_;
  std::map<MapKey, MapPtr> maps_;
};

}  // namespace sparseseg

#endif  // SPARSESEG_CORE_PYRAMID_H_
