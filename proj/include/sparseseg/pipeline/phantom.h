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

#ifndef SPARSESEG_PIPELINE_PHANTOM_H_
#define SPARSESEG_PIPELINE_PHANTOM_H_

#include <cstdint>

#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// Synthetic abdomen: two ellipsoidal "kidneys" side by side along x, each
// holding one spherical "tumour", on a uniform background, plus Gaussian
// noise. Sizes are in mm.
struct PhantomParams {
  Index3 dims{64, 48, 48};
  Vec3 spacing{1.0, 1.0, 1.0};
  double background_hu = -100.0;
  double kidney_hu = 100.0;
  double tumour_hu = 50.0;
  double noise_std = 5.0;
  Vec3 kidney_semi_min{11.0, 13.0, 15.0};
  Vec3 kidney_semi_max{13.0, 16.0, 18.0};
  double tumour_radius_min = 7.0;
  double tumour_radius_max = 9.0;
};

struct Phantom {
  VoxelGrid image;   // HU
  VoxelGrid labels;  // 0 background, 1 kidney, 2 tumour
};

Phantom MakePhantom(const PhantomParams& p, uint64_t seed);

}  // namespace sparseseg

#endif  // SPARSESEG_PIPELINE_PHANTOM_H_
