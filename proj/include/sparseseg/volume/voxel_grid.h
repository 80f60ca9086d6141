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

#ifndef SPARSESEG_VOLUME_VOXEL_GRID_H_
#define SPARSESEG_VOLUME_VOXEL_GRID_H_

#include <array>
#include <cstdint>
#include <vector>

namespace sparseseg {

using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

enum class VolumeKind { kIntensity, kLabel };

inline int64_t VoxelCount(const Index3& dims) {
  return static_cast<int64_t>(dims[0]) * dims[1] * dims[2];
}

// x-fastest linear index.
inline int64_t LinearIndex(const Index3& dims, int x, int y, int z) {
  return (static_cast<int64_t>(z) * dims[1] + y) * dims[0] + x;
}

inline Index3 UnravelIndex(const Index3& dims, int64_t index) {
  const int x = static_cast<int>(index % dims[0]);
  index /= dims[0];
  const int y = static_cast<int>(index % dims[1]);
  return {x, y, static_cast<int>(index / dims[1])};
}

inline bool InBounds(const Index3& dims, const Index3& p) {
  return p[0] >= 0 && p[1] >= 0 && p[2] >= 0 && p[0] < dims[0] &&
         p[1] < dims[1] && p[2] < dims[2];
}

// Dense scalar volume with physical geometry. Voxel i is centred at
// origin + (i + 0.5) * spacing. Label grids hold codes 0..3 stored as floats.
class VoxelGrid {
 public:
  VoxelGrid(Index3 dims, Vec3 spacing, Vec3 origin, VolumeKind kind,
            std::vector<float> values);

  static VoxelGrid Filled(Index3 dims, Vec3 spacing, Vec3 origin,
                          VolumeKind kind, float value);

  const Index3& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const Vec3& origin() const { return origin_; }
  VolumeKind kind() const { return kind_; }
  const std::vector<float>& values() const { return values_; }
  int64_t size() const { return static_cast<int64_t>(values_.size()); }

  float at(int x, int y, int z) const {
    return values_[static_cast<size_t>(LinearIndex(dims_, x, y, z))];
  }
  float operator[](int64_t i) const { return values_[static_cast<size_t>(i)]; }

  // Same geometry and kind, new payload.
  VoxelGrid WithValues(std::vector<float> values) const;

 private:
  Index3 dims_;
  Vec3 spacing_;
  Vec3 origin_;
  VolumeKind kind_;
  std::vector<float> values_;
};

// Binary volume used for active masks and ROI voxel sets.
struct BinaryVolume {
  Index3 dims{0, 0, 0};
  std::vector<uint8_t> values;

  BinaryVolume() = default;
  explicit BinaryVolume(Index3 d, uint8_t fill = 0)
      : dims(d), values(static_cast<size_t>(VoxelCount(d)), fill) {}

  uint8_t at(int x, int y, int z) const {
    return values[static_cast<size_t>(LinearIndex(dims, x, y, z))];
  }
  uint8_t& at(int x, int y, int z) {
    return values[static_cast<size_t>(LinearIndex(dims, x, y, z))];
  }
  int64_t Count() const;
  bool operator==(const BinaryVolume&) const = default;
};

// Three nested binary channels: 0 = kidneys + masses, 1 = tumour + cyst,
// 2 = tumour only.
struct MultiLabelMask {
  static constexpr int kChannels = 3;
  Index3 dims{0, 0, 0};
  std::array<std::vector<uint8_t>, kChannels> channels;

  MultiLabelMask() = default;
  explicit MultiLabelMask(Index3 d);

  bool operator==(const MultiLabelMask&) const = default;
};

}  // namespace sparseseg

#endif  // SPARSESEG_VOLUME_VOXEL_GRID_H_
