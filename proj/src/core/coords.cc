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

#include "sparseseg/core/coords.h"

#include <algorithm>
#include <bit>
#include <string>
#include <utility>

#include "sparseseg/common/errors.h"

namespace sparseseg {

std::string StrideToString(const Stride& s) {
  return "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," +
         std::to_string(s[2]) + ")";
}

CoordinateSet::CoordinateSet(std::vector<Coord> coords, Stride stride)
    : coords_(coords.begin(), coords.end()), stride_(stride) {
  for (int a = 0; a < 3; ++a) {
    if (stride_[a] <= 0) throw InvalidArgument("stride must be positive");
  }
  const uint64_t capacity =
      std::bit_ceil(std::max<uint64_t>(16, 2 * static_cast<uint64_t>(coords_.size())));
  table_.assign(capacity, -1);
  mask_ = capacity - 1;
  for (size_t row = 0; row < coords_.size(); ++row) {
    const Coord& c = coords_[row];
    if (!IsAligned(c.x, stride_[0]) || !IsAligned(c.y, stride_[1]) ||
        !IsAligned(c.z, stride_[2])) {
      throw InvalidArgument("coordinate not aligned to stride " +
                            StrideToString(stride_));
    }
    uint64_t slot = HashCoord(c) & mask_;
    while (table_[slot] >= 0) {
      if (coords_[static_cast<size_t>(table_[slot])] == c) {
        throw InvalidArgument("duplicate coordinate (" + std::to_string(c.b) +
                              ";" + std::to_string(c.x) + "," + std::to_string(c.y) +
                              "," + std::to_string(c.z) + ")");
      }
      slot = (slot + 1) & mask_;
    }
    table_[slot] = static_cast<int32_t>(row);
  }
}

int64_t CoordinateSet::Find(const Coord& c) const {
  if (table_.empty()) return -1;
  uint64_t slot = HashCoord(c) & mask_;
  while (true) {
    const int32_t row = table_[slot];
    if (row < 0) return -1;
    if (coords_[static_cast<size_t>(row)] == c) return row;
    slot = (slot + 1) & mask_;
  }
}

std::vector<int64_t> CoordinateSet::BatchOffsets() const {
  std::vector<int64_t> offsets{0};
  if (coords_.empty()) return offsets;
  int32_t current = coords_[0].b;
  for (size_t row = 1; row < coords_.size(); ++row) {
    const int32_t b = coords_[row].b;
    if (b == current) continue;
    if (b < current) throw InvalidArgument("rows are not grouped by batch");
    offsets.push_back(static_cast<int64_t>(row));
    current = b;
  }
  offsets.push_back(size());
  return offsets;
}

bool CoordinateSet::SameCoordinates(const CoordinateSet& other) const {
  return stride_ == other.stride_ && coords_.size() == other.coords_.size() &&
         std::equal(coords_.begin(), coords_.end(), other.coords_.begin());
}

void SortCanonical(std::vector<Coord>& coords) {
  std::sort(coords.begin(), coords.end(), CanonicalLess);
}

CoordinateSet DownsampleCoords(const CoordinateSet& coords,
                               const std::array<int, 3>& factor) {
  for (int a = 0; a < 3; ++a) {
    if (factor[a] < 1) throw InvalidArgument("downsample factor must be >= 1");
  }
  const Stride out = MulStride(coords.stride(), factor);
  std::vector<Coord> cells;
  cells.reserve(static_cast<size_t>(coords.size()));
  for (const Coord& c : coords.coords()) {
    cells.push_back({c.b, FloorDiv(c.x, out[0]) * out[0],
                     FloorDiv(c.y, out[1]) * out[1], FloorDiv(c.z, out[2]) * out[2]});
  }
  SortCanonical(cells);
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return CoordinateSet(std::move(cells), out);
}

}  // namespace sparseseg
