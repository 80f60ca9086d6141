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

#include "sparseseg/pipeline/segment.h"

#include <string>

#include "sparseseg/common/errors.h"

namespace sparseseg {

std::vector<ComponentPrediction> SegmentComponents(const SparseUNet<float>& model,
                                                   const VoxelGrid& high_grid,
                                                   const std::vector<ComponentROI>& rois,
                                                   const HUWindow& window, int64_t max_voxels) {
  window.Validate();
  std::vector<ComponentPrediction> out;
  out.reserve(rois.size());
  for (const auto& roi : rois) {
    if (roi.high_dims != high_grid.dims()) {
      throw ShapeMismatch("component " + std::to_string(roi.id) + " was lifted onto another grid");
    }
    const auto n = static_cast<int64_t>(roi.high_voxels.size());
    if (n > max_voxels) {
      throw CapacityError("component " + std::to_string(roi.id) + " has " + std::to_string(n) +
                          " voxels, above the limit of " + std::to_string(max_voxels));
    }
    ComponentPrediction pred;
    pred.id = roi.id;
    pred.offset = roi.high_bbox_lo;
    std::vector<Coord> coords;
    coords.reserve(static_cast<size_t>(n));
    Matrix<float> feats(n, 1);
    for (int64_t r = 0; r < n; ++r) {
      const int64_t g = roi.high_voxels[static_cast<size_t>(r)];
      const Index3 p = UnravelIndex(high_grid.dims(), g);
      const Index3 l{p[0] - pred.offset[0], p[1] - pred.offset[1], p[2] - pred.offset[2]};
      pred.local.push_back(l);
      coords.push_back({0, l[0], l[1], l[2]});
      feats(r, 0) = static_cast<float>(NormalizeIntensity(high_grid[g], window));
    }
    if (n > 0) {
      // Ascending global indices inside one bbox stay in canonical local order.
      const auto heads = model.Forward(MakeSparseTensor(std::move(coords), std::move(feats)), nullptr, 1);
      pred.probs = heads[0].values();
    } else {
      pred.probs = Matrix<float>(0, MultiLabelMask::kChannels);
    }
    out.push_back(std::move(pred));
  }
  return out;
}

MultiLabelMask Reassemble(const std::vector<ComponentPrediction>& preds, const Index3& dims,
                          double threshold) {
  MultiLabelMask mask(dims);
  std::vector<uint8_t> written(static_cast<size_t>(VoxelCount(dims)), 0);
  for (const auto& p : preds) {
    if (p.probs.rows() != static_cast<int64_t>(p.local.size()) ||
        (p.probs.rows() > 0 && p.probs.cols() != MultiLabelMask::kChannels)) {
      throw ShapeMismatch("component " + std::to_string(p.id) + " prediction shape is inconsistent");
    }
    for (size_t r = 0; r < p.local.size(); ++r) {
      const Index3 g{p.offset[0] + p.local[r][0], p.offset[1] + p.local[r][1],
                     p.offset[2] + p.local[r][2]};
      if (!InBounds(dims, g)) {
        throw InvalidArgument("component " + std::to_string(p.id) + " reaches outside the grid");
      }
      const auto i = static_cast<size_t>(LinearIndex(dims, g[0], g[1], g[2]));
      if (written[i]) {
        throw InvalidArgument("components overlap at voxel (" + std::to_string(g[0]) + ", " +
                              std::to_string(g[1]) + ", " + std::to_string(g[2]) + ")");
      }
      written[i] = 1;
      for (int c = 0; c < MultiLabelMask::kChannels; ++c) {
        mask.channels[static_cast<size_t>(c)][i] =
            static_cast<double>(p.probs(static_cast<int64_t>(r), c)) >= threshold ? 1 : 0;
      }
    }
  }
  return mask;
}

}  // namespace sparseseg
