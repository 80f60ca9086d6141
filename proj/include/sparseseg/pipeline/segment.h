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

#ifndef SPARSESEG_PIPELINE_SEGMENT_H_
#define SPARSESEG_PIPELINE_SEGMENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sparseseg/model/unet.h"
#include "sparseseg/pipeline/roi.h"
#include "sparseseg/pipeline/sparsify.h"

namespace sparseseg {

// Probabilities for one lifted component. Coordinates are local to
// `offset` (the component's high-res bbox_lo).
struct ComponentPrediction {
  int id = 0;
  Index3 offset{0, 0, 0};
  std::vector<Index3> local;
  Matrix<float> probs;  // local.size() x 3
};

inline constexpr int64_t kDefaultMaxComponentVoxels = 8'000'000;

// Runs the Stage-2 model on each component separately, reading only that
// component's voxels. Throws CapacityError when a component exceeds
// `max_voxels`.
std::vector<ComponentPrediction> SegmentComponents(const SparseUNet<float>& model,
                                                   const VoxelGrid& high_grid,
                                                   const std::vector<ComponentROI>& rois,
                                                   const HUWindow& window,
                                                   int64_t max_voxels = kDefaultMaxComponentVoxels);

// Places every prediction at offset + local and binarizes each channel at
// `threshold` (p >= threshold). Throws InvalidArgument when two components
// write the same voxel or a voxel falls outside `dims`.
MultiLabelMask Reassemble(const std::vector<ComponentPrediction>& preds, const Index3& dims,
                          double threshold = 0.5);

}  // namespace sparseseg

#endif  // SPARSESEG_PIPELINE_SEGMENT_H_
