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

#ifndef SPARSESEG_TRAIN_AUGMENT_H_
#define SPARSESEG_TRAIN_AUGMENT_H_

#include <array>
#include <optional>
#include <random>

#include "sparseseg/train/config.h"
#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// Spatial transform about the volume centre: q = R S (p - c) + c + t with
// R = Rz Ry Rx, in voxel units.
struct AffineDraw {
  Vec3 angles{0, 0, 0};  // about x, y, z
  Vec3 translation{0, 0, 0};
  Vec3 scale{1, 1, 1};

  bool IsIdentity() const;
};

struct AugmentResult {
  VoxelGrid image;
  VoxelGrid labels;
  std::optional<BinaryVolume> roi;  // transformed like labels when given
};

// Affine (single resampling pass) -> flips -> intensity scale -> intensity
// shift -> Gaussian noise -> Gaussian smoothing. The image is sampled
// trilinearly, labels and `roi` by nearest neighbour; intensity steps touch
// the image only.
AugmentResult Augment(const VoxelGrid& image, const VoxelGrid& labels, std::mt19937_64& rng,
                      const AugmentParams& p, const BinaryVolume* roi = nullptr);

// Building blocks, exposed for testing.
VoxelGrid ApplyAffine(const VoxelGrid& grid, const AffineDraw& a, bool nearest);
VoxelGrid FlipAxis(const VoxelGrid& grid, int axis);
BinaryVolume FlipAxis(const BinaryVolume& mask, int axis);
VoxelGrid GaussianSmooth(const VoxelGrid& grid, const Vec3& sigma);

}  // namespace sparseseg

#endif  // SPARSESEG_TRAIN_AUGMENT_H_
