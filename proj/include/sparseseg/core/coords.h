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

#ifndef SPARSESEG_CORE_COORDS_H_
#define SPARSESEG_CORE_COORDS_H_

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparseseg/common/memory.h"

namespace sparseseg {

// Tensor stride per axis; a stride-s level only holds coordinates that are
// multiples of s.
using Stride = std::array<int, 3>;

inline Stride MulStride(const Stride& a, const std::array<int, 3>& b) {
  return {a[0] * b[0], a[1] * b[1], a[2] * b[2]};
}

std::string StrideToString(const Stride& s);

struct Coord {
  int32_t b = 0;
  int32_t x = 0;
  int32_t y = 0;
  int32_t z = 0;

  bool operator==(const Coord&) const = default;
};

// Canonical row order: batch, then z, y, x ascending.
inline bool CanonicalLess(const Coord& a, const Coord& b) {
  if (a.b != b.b) return a.b < b.b;
  if (a.z != b.z) return a.z < b.z;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

inline uint64_t HashCoord(const Coord& c) {
  uint64_t h = static_cast<uint32_t>(c.x);
  h = h * 0x9E3779B97F4A7C15ull ^ static_cast<uint32_t>(c.y);
  h = h * 0xC2B2AE3D27D4EB4Full ^ static_cast<uint32_t>(c.z);
  h = h * 0x165667B19E3779F9ull ^ static_cast<uint32_t>(c.b);
  // splitmix64 finaliser
  h ^= h >> 30;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 27;
  h *= 0x94D049BB133111EBull;
  h ^= h >> 31;
  return h;
}

// Floor division for possibly negative coordinates.
inline int32_t FloorDiv(int32_t a, int32_t b) {
  int32_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline bool IsAligned(int32_t v, int32_t s) { return FloorDiv(v, s) * s == v; }

// Immutable coordinate list with an exact open-addressing hash index
// (coordinate -> row). Row order is whatever the caller supplied.
class CoordinateSet {
 public:
  CoordinateSet() = default;
  // Throws on duplicates or coordinates not aligned to `stride`.
  CoordinateSet(std::vector<Coord> coords, Stride stride);

  int64_t size() const { return static_cast<int64_t>(coords_.size()); }
  bool empty() const { return coords_.empty(); }
  const Stride& stride() const { return stride_; }
  const Coord& operator[](int64_t row) const {
    return coords_[static_cast<size_t>(row)];
  }
  std::span<const Coord> coords() const { return {coords_.data(), coords_.size()}; }

  // Row of `c`, or -1.
  int64_t Find(const Coord& c) const;

  // Contiguous row ranges per batch item: rows [offsets[b], offsets[b+1]).
  // Only valid when rows are grouped by batch (canonical order guarantees
  // it); otherwise throws.
  std::vector<int64_t> BatchOffsets() const;

  bool SameCoordinates(const CoordinateSet& other) const;

 private:
  TrackedVector<Coord> coords_;
  TrackedVector<int32_t> table_;
  uint64_t mask_ = 0;
  Stride stride_{1, 1, 1};
};

void SortCanonical(std::vector<Coord>& coords);

// Unique set of floor(c / (stride_in * factor)) * (stride_in * factor), in
// canonical order.
CoordinateSet DownsampleCoords(const CoordinateSet& coords, const std::array<int, 3>& factor);

}  // namespace sparseseg

#endif  // SPARSESEG_CORE_COORDS_H_
