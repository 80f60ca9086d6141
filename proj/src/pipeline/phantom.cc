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

#include "sparseseg/pipeline/phantom.h"

#include <algorithm>
#include <random>
#include <vector>

#include "sparseseg/common/errors.h"
#include "sparseseg/volume/multilabel.h"

namespace sparseseg {

Phantom MakePhantom(const PhantomParams& p, uint64_t seed) {
  for (int a = 0; a < 3; ++a) {
    if (p.dims[a] < 1 || !(p.spacing[a] > 0.0)) throw InvalidArgument("phantom grid must be non-empty");
  }
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  };
  Vec3 extent;
  for (int a = 0; a < 3; ++a) extent[a] = p.dims[a] * p.spacing[a];

  struct Ellipsoid {
    Vec3 centre, semi;
  };
  struct Sphere {
    Vec3 centre;
    double radius;
  };
  std::vector<Ellipsoid> kidneys;
  std::vector<Sphere> tumours;
  for (int k = 0; k < 2; ++k) {
    Ellipsoid e;
    for (int a = 0; a < 3; ++a) e.semi[a] = uniform(p.kidney_semi_min[a], p.kidney_semi_max[a]);
    // Left and right halves along x, jittered by a few mm.
    e.centre = {extent[0] * (k == 0 ? 0.27 : 0.73) + uniform(-2, 2),
                extent[1] * 0.5 + uniform(-2, 2), extent[2] * 0.5 + uniform(-2, 2)};
    kidneys.push_back(e);
    Sphere s;
    s.radius = uniform(p.tumour_radius_min, p.tumour_radius_max);
    // Inside the kidney, pushed towards one pole so it is embedded but not central.
    const double shift = std::max(0.0, e.semi[2] - s.radius) * uniform(0.2, 0.6);
    s.centre = {e.centre[0] + uniform(-1, 1), e.centre[1] + uniform(-1, 1),
                e.centre[2] + (k == 0 ? shift : -shift)};
    tumours.push_back(s);
  }

  const int64_t n = VoxelCount(p.dims);
  std::vector<float> img(static_cast<size_t>(n)), lab(static_cast<size_t>(n), 0.f);
  std::normal_distribution<double> noise(0.0, p.noise_std);
  for (int64_t i = 0; i < n; ++i) {
    const Index3 v = UnravelIndex(p.dims, i);
    Vec3 x;
    for (int a = 0; a < 3; ++a) x[a] = (v[a] + 0.5) * p.spacing[a];
    int code = kBackground;
    for (const auto& e : kidneys) {
      double r = 0;
      for (int a = 0; a < 3; ++a) r += (x[a] - e.centre[a]) * (x[a] - e.centre[a]) / (e.semi[a] * e.semi[a]);
      if (r <= 1.0) code = kKidney;
    }
    for (const auto& s : tumours) {
      double r = 0;
      for (int a = 0; a < 3; ++a) r += (x[a] - s.centre[a]) * (x[a] - s.centre[a]);
      if (r <= s.radius * s.radius) code = kTumour;
    }
    const double base = code == kTumour ? p.tumour_hu : code == kKidney ? p.kidney_hu : p.background_hu;
    img[static_cast<size_t>(i)] = static_cast<float>(base + (p.noise_std > 0 ? noise(rng) : 0.0));
    lab[static_cast<size_t>(i)] = static_cast<float>(code);
  }
  return {VoxelGrid(p.dims, p.spacing, {0, 0, 0}, VolumeKind::kIntensity, std::move(img)),
          VoxelGrid(p.dims, p.spacing, {0, 0, 0}, VolumeKind::kLabel, std::move(lab))};
}

}  // namespace sparseseg
