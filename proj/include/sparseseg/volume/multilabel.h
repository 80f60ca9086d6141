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

#ifndef SPARSESEG_VOLUME_MULTILABEL_H_
#define SPARSESEG_VOLUME_MULTILABEL_H_

#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// Label codes: 0 background, 1 kidney, 2 tumour, 3 cyst.
enum LabelCode : int { kBackground = 0, kKidney = 1, kTumour = 2, kCyst = 3 };

MultiLabelMask MakeMultiLabel(const VoxelGrid& labels);

// Inverse encoding used when writing predicted masks: tumour wins, then
// cyst (mass without tumour), then kidney.
VoxelGrid MultiLabelToCodes(const MultiLabelMask& mask, const VoxelGrid& geometry);

}  // namespace sparseseg

#endif  // SPARSESEG_VOLUME_MULTILABEL_H_
