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

#ifndef SPARSESEG_VOLUME_RESAMPLE_H_
#define SPARSESEG_VOLUME_RESAMPLE_H_

#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

enum class InterpolationMode { kTrilinear, kNearest };

// Output dims per axis: round(dims * spacing / target), at least 1. Samples
// are taken at output voxel centres in physical coordinates with
// clamp-to-edge. The origin is carried over unchanged.
VoxelGrid Resample(const VoxelGrid& grid, const Vec3& target_spacing,
                   InterpolationMode mode);

Index3 ResampledDims(const Index3& dims, const Vec3& spacing,
                     const Vec3& target_spacing);

// Clamp-to-edge samplers at continuous voxel index (not mm).
float SampleTrilinear(const VoxelGrid& grid, double ix, double iy, double iz);
float SampleNearest(const VoxelGrid& grid, double ix, double iy, double iz);

}  // namespace sparseseg

#endif  // SPARSESEG_VOLUME_RESAMPLE_H_
