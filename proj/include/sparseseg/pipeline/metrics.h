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

#ifndef SPARSESEG_PIPELINE_METRICS_H_
#define SPARSESEG_PIPELINE_METRICS_H_

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

// DSC per channel (kidney+mass, tumour+cyst, tumour) and their plain mean.
struct DiceReport {
  std::array<double, 3> channel{0, 0, 0};
  double all = 0;
};

// 2|P n T| / (|P| + |T|) over the full grid; an empty-empty channel scores 1.
DiceReport Dsc(const MultiLabelMask& pred, const MultiLabelMask& truth);

// CSV with header case,channel,dsc; channel "all" carries the mean.
void WriteMetricsCsv(const std::string& path,
                     const std::vector<std::pair<std::string, DiceReport>>& rows);

}  // namespace sparseseg

#endif  // SPARSESEG_PIPELINE_METRICS_H_
