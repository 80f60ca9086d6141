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

#ifndef SPARSESEG_PIPELINE_PIPELINE_H_
#define SPARSESEG_PIPELINE_PIPELINE_H_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparseseg/model/unet.h"
#include "sparseseg/pipeline/roi.h"
#include "sparseseg/pipeline/segment.h"
#include "sparseseg/pipeline/sparsify.h"
#include "sparseseg/train/trainer.h"

namespace sparseseg {

struct PipelineOptions {
  HUWindow window;
  Vec3 low_spacing{1.99, 1.99, 1.99};
  double threshold = 0.1;
  int dilate = 11;
  int64_t min_size = 50;
  int connectivity = 26;
  double binarize = 0.5;
  int64_t max_component_voxels = kDefaultMaxComponentVoxels;

  // Throws InvalidArgument on an even dilation, connectivity other than 6 or
  // 26, thresholds outside [0, 1] or non-positive spacings.
  void Validate() const;
};

// Keys: hu_window [lo, hi], low_spacing (number or [x, y, z]), threshold,
// dilate, min_size, connectivity, binarize, max_component_voxels. Missing
// keys keep their defaults; unknown keys throw FormatError.
nlohmann::json ToJson(const PipelineOptions& opts);
PipelineOptions PipelineOptionsFromJson(const nlohmann::json& j);
// Reads the "pipeline" section of a config file; defaults when absent.
PipelineOptions LoadPipelineOptions(const std::string& path);

// Trilinear for intensities, nearest for labels.
VoxelGrid ToLowRes(const VoxelGrid& high, const Vec3& spacing);

struct RoiResult {
  VoxelGrid low_image;
  BinaryVolume predicted;  // thresholded Stage-1 output
  BinaryVolume dilated;
  std::vector<ComponentROI> components;  // filtered, in low-res voxels
};

// Stage 1: resample, HU-window sparsification, prediction, dilation,
// connected components, size filter.
RoiResult DetectRoi(const SparseUNet<float>& stage1, const VoxelGrid& high_image,
                    const PipelineOptions& opts);

void LiftComponents(std::vector<ComponentROI>& comps, const VoxelGrid& low_grid,
                    const VoxelGrid& high_grid);

// Stage 2 over already lifted components, reassembled on the high-res grid.
MultiLabelMask SegmentRois(const SparseUNet<float>& stage2, const VoxelGrid& high_image,
                           const std::vector<ComponentROI>& lifted, const PipelineOptions& opts);

struct CaseResult {
  RoiResult roi;
  MultiLabelMask mask;
};
CaseResult RunCase(const SparseUNet<float>& stage1, const SparseUNet<float>& stage2,
                   const VoxelGrid& high_image, const PipelineOptions& opts);

// Stage-1 training input: the case resampled to `low_spacing`.
TrainingCase MakeStage1Case(const std::string& id, const VoxelGrid& high_image,
                            const VoxelGrid& high_labels, const Vec3& low_spacing);

// Stage-2 training input: high-res case whose active set is the lifted ROI
// predicted by `stage1`.
TrainingCase MakeStage2Case(const std::string& id, const SparseUNet<float>& stage1,
                            const VoxelGrid& high_image, const VoxelGrid& high_labels,
                            const PipelineOptions& opts);

}  // namespace sparseseg

#endif  // SPARSESEG_PIPELINE_PIPELINE_H_
