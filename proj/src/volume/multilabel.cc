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

#include "sparseseg/volume/multilabel.h"

#include <string>
#include <vector>

#include "sparseseg/common/errors.h"

namespace sparseseg {

MultiLabelMask MakeMultiLabel(const VoxelGrid& labels) {
  if (labels.kind() != VolumeKind::kLabel) {
    throw InvalidArgument("MakeMultiLabel expects a label-code grid");
  }
  MultiLabelMask mask(labels.dims());
  for (int64_t i = 0; i < labels.size(); ++i) {
    const auto v = static_cast<int>(labels[i]);
    const auto at = static_cast<size_t>(i);
    switch (v) {
      case kBackground: break;
      case kKidney: mask.channels[0][at] = 1; break;
      case kTumour:
        mask.channels[0][at] = mask.channels[1][at] = mask.channels[2][at] = 1;
        break;
      case kCyst: mask.channels[0][at] = mask.channels[1][at] = 1; break;
      default: throw InvalidArgument("unexpected label value " + std::to_string(v));
    }
  }
  return mask;
}

VoxelGrid MultiLabelToCodes(const MultiLabelMask& mask, const VoxelGrid& geometry) {
  if (mask.dims != geometry.dims()) {
    throw ShapeMismatch("mask dims differ from geometry dims");
  }
  std::vector<float> codes(mask.channels[0].size(), 0.f);
  for (size_t i = 0; i < codes.size(); ++i) {
    if (mask.channels[2][i]) {
      codes[i] = kTumour;
    } else if (mask.channels[1][i]) {
      codes[i] = kCyst;
    } else if (mask.channels[0][i]) {
      codes[i] = kKidney;
    }
  }
  return VoxelGrid(mask.dims, geometry.spacing(), geometry.origin(),
                   VolumeKind::kLabel, std::move(codes));
}

}  // namespace sparseseg
