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

#include "sparseseg/oracles/oracles.h"

#include <algorithm>
#include <numeric>
#include <string>

namespace sparseseg::oracles {

NaiveVolume NaiveConv(const NaiveVolume& in, const WeightFn& w, const std::array<int, 3>& kernel,
                      int out_channels, const std::vector<double>& bias, bool centred,
                      const std::array<int, 3>& stride) {
  Index3 od = in.dims;
  if (!centred) {
    for (int a = 0; a < 3; ++a) od[a] = (in.dims[a] + stride[a] - 1) / stride[a];
  }
  NaiveVolume out(od, out_channels);
  const int rx = centred ? kernel[0] / 2 : 0;
  const int ry = centred ? kernel[1] / 2 : 0;
  const int rz = centred ? kernel[2] / 2 : 0;
  for (int oz = 0; oz < od[2]; ++oz) {
    for (int oy = 0; oy < od[1]; ++oy) {
      for (int ox = 0; ox < od[0]; ++ox) {
        for (int kz = 0; kz < kernel[2]; ++kz) {
          for (int ky = 0; ky < kernel[1]; ++ky) {
            for (int kx = 0; kx < kernel[0]; ++kx) {
              const int ix = (centred ? ox : ox * stride[0]) + kx - rx;
              const int iy = (centred ? oy : oy * stride[1]) + ky - ry;
              const int iz = (centred ? oz : oz * stride[2]) + kz - rz;
              if (!InBounds(in.dims, {ix, iy, iz})) continue;
              const int k = (kz * kernel[1] + ky) * kernel[0] + kx;
              for (int co = 0; co < out_channels; ++co) {
                for (int ci = 0; ci < in.channels; ++ci) {
                  out.at(ox, oy, oz, co) += in.at(ix, iy, iz, ci) * w(k, ci, co);
                }
              }
            }
          }
        }
        for (int co = 0; co < out_channels; ++co) {
          if (!bias.empty()) out.at(ox, oy, oz, co) += bias[static_cast<size_t>(co)];
        }
      }
    }
  }
  return out;
}

NaiveVolume NaiveTransposedConv(const NaiveVolume& in, const WeightFn& w,
                                const std::array<int, 3>& kernel, int out_channels,
                                const std::vector<double>& bias,
                                const std::array<int, 3>& stride, const Index3& out_dims) {
  NaiveVolume out(out_dims, out_channels);
  for (int z = 0; z < in.dims[2]; ++z) {
    for (int y = 0; y < in.dims[1]; ++y) {
      for (int x = 0; x < in.dims[0]; ++x) {
        for (int kz = 0; kz < kernel[2]; ++kz) {
          for (int ky = 0; ky < kernel[1]; ++ky) {
            for (int kx = 0; kx < kernel[0]; ++kx) {
              const Index3 f{x * stride[0] + kx, y * stride[1] + ky, z * stride[2] + kz};
              if (!InBounds(out_dims, f)) continue;
              const int k = (kz * kernel[1] + ky) * kernel[0] + kx;
              for (int co = 0; co < out_channels; ++co) {
                for (int ci = 0; ci < in.channels; ++ci) {
                  out.at(f[0], f[1], f[2], co) += in.at(x, y, z, ci) * w(k, ci, co);
                }
              }
            }
          }
        }
      }
    }
  }
  if (!bias.empty()) {
    for (size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] += bias[i % static_cast<size_t>(out_channels)];
    }
  }
  return out;
}

PairSet QuadraticSubmanifoldPairs(std::span<const Coord> coords, const Stride& stride,
                                  const std::array<int, 3>& kernel) {
  PairSet pairs;
  const int rx = kernel[0] / 2, ry = kernel[1] / 2, rz = kernel[2] / 2;
  for (size_t j = 0; j < coords.size(); ++j) {
    for (size_t i = 0; i < coords.size(); ++i) {
      if (coords[i].b != coords[j].b) continue;
      for (int kz = 0; kz < kernel[2]; ++kz) {
        for (int ky = 0; ky < kernel[1]; ++ky) {
          for (int kx = 0; kx < kernel[0]; ++kx) {
            if (coords[i].x == coords[j].x + (kx - rx) * stride[0] &&
                coords[i].y == coords[j].y + (ky - ry) * stride[1] &&
                coords[i].z == coords[j].z + (kz - rz) * stride[2]) {
              pairs.emplace((kz * kernel[1] + ky) * kernel[0] + kx, static_cast<int64_t>(i),
                            static_cast<int64_t>(j));
            }
          }
        }
      }
    }
  }
  return pairs;
}

PairSet QuadraticStridedPairs(std::span<const Coord> in, const Stride& in_stride,
                              std::span<const Coord> out, const std::array<int, 3>& kernel) {
  PairSet pairs;
  for (size_t j = 0; j < out.size(); ++j) {
    for (size_t i = 0; i < in.size(); ++i) {
      if (in[i].b != out[j].b) continue;
      for (int kz = 0; kz < kernel[2]; ++kz) {
        for (int ky = 0; ky < kernel[1]; ++ky) {
          for (int kx = 0; kx < kernel[0]; ++kx) {
            if (in[i].x == out[j].x + kx * in_stride[0] &&
                in[i].y == out[j].y + ky * in_stride[1] &&
                in[i].z == out[j].z + kz * in_stride[2]) {
              pairs.emplace((kz * kernel[1] + ky) * kernel[0] + kx, static_cast<int64_t>(i),
                            static_cast<int64_t>(j));
            }
          }
        }
      }
    }
  }
  return pairs;
}

int64_t QuadraticCellCount(std::span<const Coord> coords, const Stride& cell) {
  auto cell_of = [&](const Coord& c) {
    auto fl = [](int v, int s) {
      return static_cast<int>(std::floor(static_cast<double>(v) / s));
    };
    return std::array<int, 4>{c.b, fl(c.x, cell[0]), fl(c.y, cell[1]), fl(c.z, cell[2])};
  };
  int64_t distinct = 0;
  for (size_t i = 0; i < coords.size(); ++i) {
    bool seen = false;
    for (size_t j = 0; j < i && !seen; ++j) seen = cell_of(coords[i]) == cell_of(coords[j]);
    if (!seen) ++distinct;
  }
  return distinct;
}

double PercentileBySort(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

namespace {

struct UnionFind {
  std::vector<int64_t> parent;
  explicit UnionFind(int64_t n) : parent(static_cast<size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int64_t Find(int64_t a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  }
  void Union(int64_t a, int64_t b) { parent[static_cast<size_t>(Find(a))] = Find(b); }
};

}  // namespace

std::vector<int64_t> UnionFindComponentSizes(const BinaryVolume& mask, int connectivity) {
  const Index3& d = mask.dims;
  const int64_t n = VoxelCount(d);
  UnionFind uf(n);
  for (int64_t i = 0; i < n; ++i) {
    if (!mask.values[static_cast<size_t>(i)]) continue;
    const Index3 p = UnravelIndex(d, i);
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
          if (manhattan == 0 || (connectivity == 6 && manhattan != 1)) continue;
          const Index3 q{p[0] + dx, p[1] + dy, p[2] + dz};
          if (!InBounds(d, q)) continue;
          const int64_t j = LinearIndex(d, q[0], q[1], q[2]);
          if (mask.values[static_cast<size_t>(j)]) uf.Union(i, j);
        }
      }
    }
  }
  std::vector<int64_t> size(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < n; ++i) {
    if (mask.values[static_cast<size_t>(i)]) ++size[static_cast<size_t>(uf.Find(i))];
  }
  std::vector<int64_t> sizes;
  for (int64_t s : size) {
    if (s > 0) sizes.push_back(s);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

int64_t BallLatticeCount(int radius) {
  int64_t count = 0;
  const double r = radius;
  for (int z = -radius; z <= radius; ++z) {
    for (int y = -radius; y <= radius; ++y) {
      for (int x = -radius; x <= radius; ++x) {
        if ((x / r) * (x / r) + (y / r) * (y / r) + (z / r) * (z / r) <= 1.0) ++count;
      }
    }
  }
  return count;
}

FdReport CheckGradients(const std::function<double()>& loss,
                        const std::vector<std::pair<std::string, VarPtr<double>>>& params,
                        const std::vector<Matrix<double>>& analytic, double step, double floor) {
  FdReport report;
  for (size_t p = 0; p < params.size(); ++p) {
    Matrix<double>& v = params[p].second->value;
    for (int64_t i = 0; i < v.size(); ++i) {
      const double saved = v.data()[i];
      v.data()[i] = saved + step;
      const double up = loss();
      v.data()[i] = saved - step;
      const double down = loss();
      v.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p].empty() ? 0.0 : analytic[p].data()[i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = params[p].first + "[" + std::to_string(i) + "] analytic=" +
                       std::to_string(a) + " numeric=" + std::to_string(numeric);
      }
    }
  }
  return report;
}

}  // namespace sparseseg::oracles
