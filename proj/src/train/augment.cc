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

#include "sparseseg/train/augment.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sparseseg/common/errors.h"
#include "sparseseg/volume/resample.h"

namespace sparseseg {
namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 Multiply(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    }
  }
  return c;
}

Mat3 Rotation(const Vec3& ang) {
  const double cx = std::cos(ang[0]), sx = std::sin(ang[0]);
  const double cy = std::cos(ang[1]), sy = std::sin(ang[1]);
  const double cz = std::cos(ang[2]), sz = std::sin(ang[2]);
  const Mat3 rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
  const Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
  const Mat3 rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
  return Multiply(rz, Multiply(ry, rx));
}

double Unit(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Uniform on [-max, max]; one draw consumed regardless of max.
double Symmetric(std::mt19937_64& rng, double max) { return (2.0 * Unit(rng) - 1.0) * max; }

bool Chance(std::mt19937_64& rng, double p) { return Unit(rng) < p; }

VoxelGrid ToGrid(const BinaryVolume& m) {
  std::vector<float> v(m.values.begin(), m.values.end());
  return VoxelGrid(m.dims, {1, 1, 1}, {0, 0, 0}, VolumeKind::kLabel, std::move(v));
}

BinaryVolume ToMask(const VoxelGrid& g) {
  BinaryVolume m(g.dims());
  for (int64_t i = 0; i < g.size(); ++i) m.values[static_cast<size_t>(i)] = g[i] != 0.f ? 1 : 0;
  return m;
}

std::vector<float> Blur1D(const std::vector<float>& in, const Index3& d, int axis, double sigma) {
  if (sigma <= 0.0) return in;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[static_cast<size_t>(i + radius)];
  }
  for (double& w : k) w /= sum;
  std::vector<float> out(in.size());
  const int n = d[static_cast<size_t>(axis)];
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        Index3 p{x, y, z};
        const int c = p[static_cast<size_t>(axis)];
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          p[static_cast<size_t>(axis)] = std::clamp(c + i, 0, n - 1);
          acc += k[static_cast<size_t>(i + radius)] *
                 in[static_cast<size_t>(LinearIndex(d, p[0], p[1], p[2]))];
        }
        out[static_cast<size_t>(LinearIndex(d, x, y, z))] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace

bool AffineDraw::IsIdentity() const {
  for (int a = 0; a < 3; ++a) {
    if (angles[a] != 0.0 || translation[a] != 0.0 || scale[a] != 1.0) return false;
  }
  return true;
}

VoxelGrid ApplyAffine(const VoxelGrid& grid, const AffineDraw& a, bool nearest) {
  if (a.IsIdentity()) return grid;
  const Index3& d = grid.dims();
  const Mat3 r = Rotation(a.angles);
  const Vec3 c{(d[0] - 1) * 0.5, (d[1] - 1) * 0.5, (d[2] - 1) * 0.5};
  std::vector<float> out(static_cast<size_t>(grid.size()));
  size_t n = 0;
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        // p = S^-1 R^T (q - c - t) + c
        const double q[3] = {x - c[0] - a.translation[0], y - c[1] - a.translation[1],
                             z - c[2] - a.translation[2]};
        double p[3];
        for (int i = 0; i < 3; ++i) {
          const double rt = r[0][i] * q[0] + r[1][i] * q[1] + r[2][i] * q[2];
          p[i] = rt / a.scale[i] + c[i];
        }
        out[n++] = nearest ? SampleNearest(grid, p[0], p[1], p[2])
                           : SampleTrilinear(grid, p[0], p[1], p[2]);
      }
    }
  }
  return grid.WithValues(std::move(out));
}

VoxelGrid FlipAxis(const VoxelGrid& grid, int axis) {
  if (axis < 0 || axis > 2) throw InvalidArgument("flip axis must be 0, 1 or 2");
  const Index3& d = grid.dims();
  std::vector<float> out(static_cast<size_t>(grid.size()));
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        Index3 s{x, y, z};
        s[static_cast<size_t>(axis)] = d[static_cast<size_t>(axis)] - 1 - s[static_cast<size_t>(axis)];
        out[static_cast<size_t>(LinearIndex(d, x, y, z))] = grid.at(s[0], s[1], s[2]);
      }
    }
  }
  return grid.WithValues(std::move(out));
}

BinaryVolume FlipAxis(const BinaryVolume& mask, int axis) { return ToMask(FlipAxis(ToGrid(mask), axis)); }

VoxelGrid GaussianSmooth(const VoxelGrid& grid, const Vec3& sigma) {
  std::vector<float> v = grid.values();
  for (int a = 0; a < 3; ++a) v = Blur1D(v, grid.dims(), a, sigma[static_cast<size_t>(a)]);
  return grid.WithValues(std::move(v));
}

AugmentResult Augment(const VoxelGrid& image, const VoxelGrid& labels, std::mt19937_64& rng,
                      const AugmentParams& p, const BinaryVolume* roi) {
  if (image.dims() != labels.dims()) throw ShapeMismatch("image and label dims differ");
  if (roi && roi->dims != image.dims()) throw ShapeMismatch("roi dims differ from image dims");
  p.Validate();
  AugmentResult r{image, labels, roi ? std::optional<BinaryVolume>(*roi) : std::nullopt};

  if (Chance(rng, p.affine_p)) {
    AffineDraw a;
    a.angles = {Symmetric(rng, p.rot_xy_max), Symmetric(rng, p.rot_xy_max),
                Symmetric(rng, p.rot_z_max)};
    a.translation = {Symmetric(rng, p.trans_xy_max), Symmetric(rng, p.trans_xy_max),
                     Symmetric(rng, p.trans_z_max)};
    for (double& s : a.scale) s = 1.0 + Symmetric(rng, p.scale_max);
    r.image = ApplyAffine(r.image, a, false);
    r.labels = ApplyAffine(r.labels, a, true);
    if (r.roi) r.roi = ToMask(ApplyAffine(ToGrid(*r.roi), a, true));
  }
  for (int axis = 0; axis < 3; ++axis) {
    if (!Chance(rng, p.flip_p)) continue;
    r.image = FlipAxis(r.image, axis);
    r.labels = FlipAxis(r.labels, axis);
    if (r.roi) r.roi = FlipAxis(*r.roi, axis);
  }
  std::vector<float> v = r.image.values();
  if (Chance(rng, p.int_scale_p)) {
    const double f = 1.0 + Symmetric(rng, p.int_scale_factor);
    for (float& x : v) x = static_cast<float>(x * f);
  }
  if (Chance(rng, p.int_shift_p)) {
    const double s = Symmetric(rng, p.int_shift_offset);
    for (float& x : v) x = static_cast<float>(x + s);
  }
  if (Chance(rng, p.noise_p)) {
    std::normal_distribution<double> noise(p.noise_mean, p.noise_std);
    for (float& x : v) x = static_cast<float>(x + noise(rng));
  }
  r.image = r.image.WithValues(std::move(v));
  if (Chance(rng, p.smooth_p)) {
    Vec3 sigma;
    for (double& s : sigma) {
      s = p.smooth_sigma_min + Unit(rng) * (p.smooth_sigma_max - p.smooth_sigma_min);
    }
    r.image = GaussianSmooth(r.image, sigma);
  }
  return r;
}

}  // namespace sparseseg
