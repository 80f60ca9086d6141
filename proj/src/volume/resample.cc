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

#include "sparseseg/volume/resample.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sparseseg/common/errors.h"

namespace sparseseg {
namespace {

int ClampIndex(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

Index3 ResampledDims(const Index3& dims, const Vec3& spacing,
                     const Vec3& target_spacing) {
  Index3 out;
  for (int a = 0; a < 3; ++a) {
    if (!(target_spacing[a] > 0.0)) {
      throw InvalidArgument("target spacing must be positive");
    }
    // std::round is half-away-from-zero.
    const double extent = dims[a] * spacing[a] / target_spacing[a];
    out[a] = std::max(1, static_cast<int>(std::round(extent)));
  }
  return out;
}

float SampleTrilinear(const VoxelGrid& grid, double ix, double iy, double iz) {
  const Index3& d = grid.dims();
  const double p[3] = {ix, iy, iz};
  int lo[3], hi[3];
  double w[3];
  for (int a = 0; a < 3; ++a) {
    const double c = std::clamp(p[a], 0.0, static_cast<double>(d[a] - 1));
    const double f = std::floor(c);
    lo[a] = static_cast<int>(f);
    hi[a] = ClampIndex(lo[a] + 1, d[a]);
    w[a] = c - f;
  }
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? w[2] : 1.0 - w[2];
    if (wz == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? w[1] : 1.0 - w[1];
      if (wy == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? w[0] : 1.0 - w[0];
        if (wx == 0.0) continue;
        acc += wx * wy * wz *
               grid.at(dx ? hi[0] : lo[0], dy ? hi[1] : lo[1], dz ? hi[2] : lo[2]);
      }
    }
  }
  return static_cast<float>(acc);
}

float SampleNearest(const VoxelGrid& grid, double ix, double iy, double iz) {
  const Index3& d = grid.dims();
  return grid.at(ClampIndex(static_cast<int>(std::floor(ix + 0.5)), d[0]),
                 ClampIndex(static_cast<int>(std::floor(iy + 0.5)), d[1]),
                 ClampIndex(static_cast<int>(std::floor(iz + 0.5)), d[2]));
}

VoxelGrid Resample(const VoxelGrid& grid, const Vec3& target_spacing,
                   InterpolationMode mode) {
  if (grid.kind() == VolumeKind::kLabel && mode != InterpolationMode::kNearest) {
    throw InvalidArgument("label grids must be resampled with nearest mode");
  }
  const Index3 out_dims = ResampledDims(grid.dims(), grid.spacing(), target_spacing);
  // Output centre in input index space: (i + 0.5) * t / s - 0.5.
  std::array<std::vector<double>, 3> coords;
  for (int a = 0; a < 3; ++a) {
    coords[a].resize(static_cast<size_t>(out_dims[a]));
    const double ratio = target_spacing[a] / grid.spacing()[a];
    for (int i = 0; i < out_dims[a]; ++i) {
      coords[a][static_cast<size_t>(i)] = (i + 0.5) * ratio - 0.5;
    }
  }
  std::vector<float> values(static_cast<size_t>(VoxelCount(out_dims)));
  size_t n = 0;
  for (int z = 0; z < out_dims[2]; ++z) {
    for (int y = 0; y < out_dims[1]; ++y) {
      for (int x = 0; x < out_dims[0]; ++x) {
        const double ix = coords[0][static_cast<size_t>(x)];
        const double iy = coords[1][static_cast<size_t>(y)];
        const double iz = coords[2][static_cast<size_t>(z)];
        values[n++] = mode == InterpolationMode::kTrilinear
                          ? SampleTrilinear(grid, ix, iy, iz)
                          : SampleNearest(grid, ix, iy, iz);
      }
    }
  }
  return VoxelGrid(out_dims, target_spacing, grid.origin(), grid.kind(),
                   std::move(values));
}

}  // namespace sparseseg
