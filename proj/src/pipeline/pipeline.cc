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

#include "sparseseg/pipeline/pipeline.h"

#include <fstream>
#include <set>

#include "sparseseg/common/errors.h"
#include "sparseseg/volume/resample.h"

namespace sparseseg {

void PipelineOptions::Validate() const {
  window.Validate();
  for (double s : low_spacing) {
    if (!(s > 0.0)) throw InvalidArgument("low-res spacing must be positive");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
  if (!(binarize >= 0.0 && binarize <= 1.0)) throw InvalidArgument("binarize must lie in [0, 1]");
  if (dilate < 1 || dilate % 2 == 0) throw InvalidArgument("dilation diameter must be odd and positive");
  if (min_size < 0) throw InvalidArgument("min_size must be >= 0");
  if (connectivity != 6 && connectivity != 26) throw InvalidArgument("connectivity must be 6 or 26");
  if (max_component_voxels < 1) throw InvalidArgument("max_component_voxels must be positive");
}

nlohmann::json ToJson(const PipelineOptions& o) {
  return {{"hu_window", {o.window.lo, o.window.hi}},
          {"low_spacing", {o.low_spacing[0], o.low_spacing[1], o.low_spacing[2]}},
          {"threshold", o.threshold},
          {"dilate", o.dilate},
          {"min_size", o.min_size},
          {"connectivity", o.connectivity},
          {"binarize", o.binarize},
          {"max_component_voxels", o.max_component_voxels}};
}

PipelineOptions PipelineOptionsFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("pipeline options must be a JSON object");
  static const std::set<std::string> kKeys = {"hu_window", "low_spacing", "threshold", "dilate",
                                              "min_size", "connectivity", "binarize",
                                              "max_component_voxels"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw FormatError("pipeline options: unknown key '" + key + "'");
  }
  PipelineOptions o;
  try {
    if (j.contains("hu_window")) {
      const auto w = j.at("hu_window").get<std::vector<double>>();
      if (w.size() != 2) throw FormatError("hu_window needs [lo, hi]");
      o.window = {w[0], w[1]};
    }
    if (j.contains("low_spacing")) {
      const auto& s = j.at("low_spacing");
      if (s.is_number()) {
        const double v = s.get<double>();
        o.low_spacing = {v, v, v};
      } else {
        const auto v = s.get<std::vector<double>>();
        if (v.size() != 3) throw FormatError("low_spacing needs one or three values");
        o.low_spacing = {v[0], v[1], v[2]};
      }
    }
    o.threshold = j.value("threshold", o.threshold);
    o.dilate = j.value("dilate", o.dilate);
    o.min_size = j.value("min_size", o.min_size);
    o.connectivity = j.value("connectivity", o.connectivity);
    o.binarize = j.value("binarize", o.binarize);
    o.max_component_voxels = j.value("max_component_voxels", o.max_component_voxels);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pipeline options: ") + e.what());
  }
  o.Validate();
  return o;
}

PipelineOptions LoadPipelineOptions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse " + path + ": " + e.what());
  }
  return j.contains("pipeline") ? PipelineOptionsFromJson(j.at("pipeline")) : PipelineOptions{};
}

VoxelGrid ToLowRes(const VoxelGrid& high, const Vec3& spacing) {
  return Resample(high, spacing,
                  high.kind() == VolumeKind::kLabel ? InterpolationMode::kNearest
                                                    : InterpolationMode::kTrilinear);
}

RoiResult DetectRoi(const SparseUNet<float>& stage1, const VoxelGrid& high_image,
                    const PipelineOptions& opts) {
  RoiResult r{ToLowRes(high_image, opts.low_spacing), {}, {}, {}};
  const BinaryVolume active = ApplyHuWindow(r.low_image, opts.window);
  const SparseTensor<float> st = SparsifyNormalized<float>(r.low_image, active, opts.window);
  r.predicted = PredictRoi(stage1, st, r.low_image.dims(), opts.threshold);
  r.dilated = Dilate(r.predicted, opts.dilate);
  r.components = FilterComponents(ConnectedComponents(r.dilated, opts.connectivity), opts.min_size);
  return r;
}

void LiftComponents(std::vector<ComponentROI>& comps, const VoxelGrid& low_grid,
                    const VoxelGrid& high_grid) {
  for (auto& c : comps) LiftToHighres(c, low_grid.spacing(), low_grid.origin(), high_grid);
}

MultiLabelMask SegmentRois(const SparseUNet<float>& stage2, const VoxelGrid& high_image,
                           const std::vector<ComponentROI>& lifted, const PipelineOptions& opts) {
  const auto preds =
      SegmentComponents(stage2, high_image, lifted, opts.window, opts.max_component_voxels);
  return Reassemble(preds, high_image.dims(), opts.binarize);
}

CaseResult RunCase(const SparseUNet<float>& stage1, const SparseUNet<float>& stage2,
                   const VoxelGrid& high_image, const PipelineOptions& opts) {
  CaseResult out{DetectRoi(stage1, high_image, opts), {}};
  LiftComponents(out.roi.components, out.roi.low_image, high_image);
  out.mask = SegmentRois(stage2, high_image, out.roi.components, opts);
  return out;
}

TrainingCase MakeStage1Case(const std::string& id, const VoxelGrid& high_image,
                            const VoxelGrid& high_labels, const Vec3& low_spacing) {
  if (high_image.dims() != high_labels.dims()) throw ShapeMismatch(id + ": image and label dims differ");
  return {id, ToLowRes(high_image, low_spacing), ToLowRes(high_labels, low_spacing), std::nullopt};
}

TrainingCase MakeStage2Case(const std::string& id, const SparseUNet<float>& stage1,
                            const VoxelGrid& high_image, const VoxelGrid& high_labels,
                            const PipelineOptions& opts) {
  if (high_image.dims() != high_labels.dims()) throw ShapeMismatch(id + ": image and label dims differ");
  RoiResult r = DetectRoi(stage1, high_image, opts);
  LiftComponents(r.components, r.low_image, high_image);
  return {id, high_image, high_labels, ComponentsMask(r.components, high_image.dims(), true)};
}

}  // namespace sparseseg
