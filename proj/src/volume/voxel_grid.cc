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

#include "sparseseg/volume/voxel_grid.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "sparseseg/common/errors.h"

namespace sparseseg {

VoxelGrid::VoxelGrid(Index3 dims, Vec3 spacing, Vec3 origin, VolumeKind kind,
                     std::vector<float> values)
    : dims_(dims),
      spacing_(spacing),
      origin_(origin),
      kind_(kind),
      values_(std::move(values)) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] <= 0) throw InvalidArgument("grid dims must be positive");
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
      throw InvalidArgument("grid spacing must be positive");
    }
  }
  if (static_cast<int64_t>(values_.size()) != VoxelCount(dims_)) {
    throw ShapeMismatch("grid has " + std::to_string(values_.size()) +
                        " values but dims imply " +
                        std::to_string(VoxelCount(dims_)));
  }
  if (kind_ == VolumeKind::kLabel) {
    for (float v : values_) {
      if (!(v == 0.f || v == 1.f || v == 2.f || v == 3.f)) {
        throw InvalidArgument("label grid value " + std::to_string(v) +
                              " outside {0,1,2,3}");
      }
    }
  }
}

VoxelGrid VoxelGrid::Filled(Index3 dims, Vec3 spacing, Vec3 origin,
                            VolumeKind kind, float value) {
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0) {
    throw InvalidArgument("grid dims must be positive");
  }
  return VoxelGrid(dims, spacing, origin, kind,
                   std::vector<float>(static_cast<size_t>(VoxelCount(dims)), value));
}

VoxelGrid VoxelGrid::WithValues(std::vector<float> values) const {
  return VoxelGrid(dims_, spacing_, origin_, kind_, std::move(values));
}

int64_t BinaryVolume::Count() const {
  return std::count_if(values.begin(), values.end(),
                       [](uint8_t v) { return v != 0; });
}

MultiLabelMask::MultiLabelMask(Index3 d) : dims(d) {
  for (auto& c : channels) c.assign(static_cast<size_t>(VoxelCount(d)), 0);
}

}  // namespace sparseseg
