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

#ifndef SPARSESEG_VOLUME_IO_H_
#define SPARSESEG_VOLUME_IO_H_

#include <string>

#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// Native format: `<name>.rvol` little-endian payload (x-fastest) plus a
// `<name>.rvol.json` sidecar. Intensity grids are stored as f32, label grids
// as u8.
VoxelGrid LoadVolume(const std::string& path);
void StoreVolume(const VoxelGrid& grid, const std::string& path);

// Uncompressed single-file NIfTI-1 (magic "n+1"), single frame, datatypes
// uint8 / int16 / float32. scl_slope/scl_inter are applied when slope != 0.
VoxelGrid ReadNifti(const std::string& path,
                    VolumeKind kind = VolumeKind::kIntensity);

// Dispatches on extension: `.nii` -> ReadNifti, otherwise LoadVolume.
VoxelGrid ReadAnyVolume(const std::string& path,
                        VolumeKind nifti_kind = VolumeKind::kIntensity);

BinaryVolume LoadMask(const std::string& path);
void StoreMask(const BinaryVolume& mask, const VoxelGrid& geometry,
               const std::string& path);

}  // namespace sparseseg

#endif  // SPARSESEG_VOLUME_IO_H_
