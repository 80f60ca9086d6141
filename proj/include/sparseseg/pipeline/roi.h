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

#ifndef SPARSESEG_PIPELINE_ROI_H_
#define SPARSESEG_PIPELINE_ROI_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sparseseg/core/sparse_tensor.h"
#include "sparseseg/model/unet.h"
#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// One connected region of the Stage-1 ROI. Bounding boxes are half-open
// [lo, hi) in voxel indices of their grid.
struct ComponentROI {
  int id = 0;
  Index3 low_dims{0, 0, 0};
  std::vector<int64_t> voxels;  // ascending linear indices in the low-res grid
  Index3 bbox_lo{0, 0, 0};
  Index3 bbox_hi{0, 0, 0};
  // Filled by LiftToHighres.
  Index3 high_dims{0, 0, 0};
  std::vector<int64_t> high_voxels;  // ascending linear indices in the high-res grid
  Index3 high_bbox_lo{0, 0, 0};
  Index3 high_bbox_hi{0, 0, 0};

  int64_t size() const { return static_cast<int64_t>(voxels.size()); }
};

// Rows whose maximum channel probability exceeds `threshold`, as a mask over
// `dims`. Coordinates are taken at stride 1.
BinaryVolume RoiFromProbabilities(const CoordinateSet& coords, const Matrix<float>& probs,
                                  const Index3& dims, double threshold = 0.1);

// Finest head of `model` thresholded as above.
BinaryVolume PredictRoi(const SparseUNet<float>& model, const SparseTensor<float>& st,
                        const Index3& dims, double threshold = 0.1);

// Offsets o with sum((o_i / r)^2) <= 1, r = (diameter - 1) / 2.
std::vector<Index3> BallOffsets(int diameter);

// Minkowski sum with the ball of `diameter` (odd), clipped to the grid.
BinaryVolume Dilate(const BinaryVolume& mask, int diameter = 11);

// Components under 6- or 26-connectivity, ordered by size (descending), then
// smallest linear index. Ids follow that order starting at 0.
std::vector<ComponentROI> ConnectedComponents(const BinaryVolume& mask, int connectivity = 26);

// Keeps components with at least `min_size` voxels; ids are preserved.
std::vector<ComponentROI> FilterComponents(std::vector<ComponentROI> comps, int64_t min_size = 50);

// A high-res voxel belongs to the lifted ROI when its centre falls inside
// the physical cell of a component voxel. Both grids share one frame.
void LiftToHighres(ComponentROI& comp, const Vec3& low_spacing, const Vec3& low_origin,
                   const VoxelGrid& high_grid);

// Union of the components' voxel sets over `dims` (low-res, or high-res
// when `high` is set).
BinaryVolume ComponentsMask(const std::vector<ComponentROI>& comps, const Index3& dims,
                            bool high = false);

// Ascending linear indices as [start, length] runs, and back.
std::vector<std::array<int64_t, 2>> EncodeRuns(const std::vector<int64_t>& sorted);
std::vector<int64_t> DecodeRuns(const std::vector<std::array<int64_t, 2>>& runs);

struct RoiFile {
  Vec3 spacing_mm{1, 1, 1};
  Vec3 origin_mm{0, 0, 0};
  Index3 grid_dims{0, 0, 0};
  std::vector<ComponentROI> components;
};

void WriteRoiFile(const std::string& path, const RoiFile& roi);
RoiFile ReadRoiFile(const std::string& path);

}  // namespace sparseseg

#endif  // SPARSESEG_PIPELINE_ROI_H_
