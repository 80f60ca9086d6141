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

#include "sparseseg/pipeline/roi.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sparseseg/common/errors.h"

namespace sparseseg {
namespace {

std::vector<Index3> NeighbourOffsets(int connectivity) {
  if (connectivity != 6 && connectivity != 26) {
    throw InvalidArgument("connectivity must be 6 or 26");
  }
  std::vector<Index3> out;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int m = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (m == 0 || (connectivity == 6 && m != 1)) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

Index3 ToIndex3(const nlohmann::json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

}  // namespace

BinaryVolume RoiFromProbabilities(const CoordinateSet& coords, const Matrix<float>& probs,
                                  const Index3& dims, double threshold) {
  if (probs.rows() != coords.size()) throw ShapeMismatch("probability rows differ from coordinates");
  BinaryVolume mask(dims);
  for (int64_t r = 0; r < probs.rows(); ++r) {
    float best = probs(r, 0);
    for (int64_t c = 1; c < probs.cols(); ++c) best = std::max(best, probs(r, c));
    if (!(static_cast<double>(best) > threshold)) continue;
    const Coord& p = coords[r];
    if (!InBounds(dims, {p.x, p.y, p.z})) throw InvalidArgument("ROI coordinate outside grid");
    mask.at(p.x, p.y, p.z) = 1;
  }
  return mask;
}

BinaryVolume PredictRoi(const SparseUNet<float>& model, const SparseTensor<float>& st,
                        const Index3& dims, double threshold) {
  if (st.size() == 0) return BinaryVolume(dims);
  const auto heads = model.Forward(st, nullptr, 1);
  return RoiFromProbabilities(*heads[0].coords, heads[0].values(), dims, threshold);
}

std::vector<Index3> BallOffsets(int diameter) {
  if (diameter < 1 || diameter % 2 == 0) throw InvalidArgument("dilation diameter must be odd and positive");
  const int r = (diameter - 1) / 2;
  std::vector<Index3> out;
  if (r == 0) return {{0, 0, 0}};
  const double rr = r;
  for (int z = -r; z <= r; ++z) {
    for (int y = -r; y <= r; ++y) {
      for (int x = -r; x <= r; ++x) {
        if ((x / rr) * (x / rr) + (y / rr) * (y / rr) + (z / rr) * (z / rr) <= 1.0) {
          out.push_back({x, y, z});
        }
      }
    }
  }
  return out;
}

BinaryVolume Dilate(const BinaryVolume& mask, int diameter) {
  const std::vector<Index3> ball = BallOffsets(diameter);
  const Index3& d = mask.dims;
  BinaryVolume out(d);
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        if (!mask.at(x, y, z)) continue;
        for (const Index3& o : ball) {
          const Index3 q{x + o[0], y + o[1], z + o[2]};
          if (InBounds(d, q)) out.at(q[0], q[1], q[2]) = 1;
        }
      }
    }
  }
  return out;
}

std::vector<ComponentROI> ConnectedComponents(const BinaryVolume& mask, int connectivity) {
  const std::vector<Index3> nbrs = NeighbourOffsets(connectivity);
  const Index3& d = mask.dims;
  std::vector<uint8_t> seen(mask.values.size(), 0);
  std::vector<ComponentROI> comps;
  std::deque<int64_t> queue;
  for (int64_t start = 0; start < VoxelCount(d); ++start) {
    if (!mask.values[static_cast<size_t>(start)] || seen[static_cast<size_t>(start)]) continue;
    ComponentROI c;
    c.low_dims = d;
    c.bbox_lo = UnravelIndex(d, start);
    c.bbox_hi = c.bbox_lo;
    seen[static_cast<size_t>(start)] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const int64_t i = queue.front();
      queue.pop_front();
      c.voxels.push_back(i);
      const Index3 p = UnravelIndex(d, i);
      for (int a = 0; a < 3; ++a) {
        c.bbox_lo[a] = std::min(c.bbox_lo[a], p[a]);
        c.bbox_hi[a] = std::max(c.bbox_hi[a], p[a]);
      }
      for (const Index3& o : nbrs) {
        const Index3 q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
        if (!InBounds(d, q)) continue;
        const int64_t j = LinearIndex(d, q[0], q[1], q[2]);
        const auto js = static_cast<size_t>(j);
        if (mask.values[js] && !seen[js]) {
          seen[js] = 1;
          queue.push_back(j);
        }
      }
    }
    for (int& v : c.bbox_hi) ++v;
    std::sort(c.voxels.begin(), c.voxels.end());
    comps.push_back(std::move(c));
  }
  // Discovery order is by smallest linear index already; stable sort keeps it
  // as the tie-breaker.
  std::stable_sort(comps.begin(), comps.end(),
                   [](const ComponentROI& a, const ComponentROI& b) { return a.size() > b.size(); });
  for (size_t i = 0; i < comps.size(); ++i) comps[i].id = static_cast<int>(i);
  return comps;
}

std::vector<ComponentROI> FilterComponents(std::vector<ComponentROI> comps, int64_t min_size) {
  std::erase_if(comps, [&](const ComponentROI& c) { return c.size() < min_size; });
  return comps;
}

void LiftToHighres(ComponentROI& comp, const Vec3& low_spacing, const Vec3& low_origin,
                   const VoxelGrid& high_grid) {
  const Index3& hd = high_grid.dims();
  const Vec3& hs = high_grid.spacing();
  const Vec3& ho = high_grid.origin();
  // Per axis: the low-res index whose cell holds each high-res voxel centre.
  std::array<std::vector<int>, 3> owner;
  for (int a = 0; a < 3; ++a) {
    owner[a].resize(static_cast<size_t>(hd[a]));
    for (int i = 0; i < hd[a]; ++i) {
      const double phys = ho[a] + (i + 0.5) * hs[a];
      owner[a][static_cast<size_t>(i)] =
          static_cast<int>(std::floor((phys - low_origin[a]) / low_spacing[a]));
    }
  }
  BinaryVolume low(comp.low_dims);
  for (int64_t v : comp.voxels) low.values[static_cast<size_t>(v)] = 1;
  // High-res index range covering the low-res bbox on each axis.
  std::array<int, 3> from{}, to{};
  for (int a = 0; a < 3; ++a) {
    const auto& o = owner[a];
    from[a] = static_cast<int>(std::lower_bound(o.begin(), o.end(), comp.bbox_lo[a]) - o.begin());
    to[a] = static_cast<int>(std::lower_bound(o.begin(), o.end(), comp.bbox_hi[a]) - o.begin());
  }
  comp.high_dims = hd;
  comp.high_voxels.clear();
  comp.high_bbox_lo = hd;
  comp.high_bbox_hi = {0, 0, 0};
  for (int z = from[2]; z < to[2]; ++z) {
    for (int y = from[1]; y < to[1]; ++y) {
      for (int x = from[0]; x < to[0]; ++x) {
        const Index3 l{owner[0][static_cast<size_t>(x)], owner[1][static_cast<size_t>(y)],
                       owner[2][static_cast<size_t>(z)]};
        if (!InBounds(comp.low_dims, l) || !low.at(l[0], l[1], l[2])) continue;
        comp.high_voxels.push_back(LinearIndex(hd, x, y, z));
        const Index3 p{x, y, z};
        for (int a = 0; a < 3; ++a) {
          comp.high_bbox_lo[a] = std::min(comp.high_bbox_lo[a], p[a]);
          comp.high_bbox_hi[a] = std::max(comp.high_bbox_hi[a], p[a] + 1);
        }
      }
    }
  }
  if (comp.high_voxels.empty()) {
    throw InvalidArgument("component " + std::to_string(comp.id) +
                          " falls outside the high-resolution grid");
  }
}

BinaryVolume ComponentsMask(const std::vector<ComponentROI>& comps, const Index3& dims, bool high) {
  BinaryVolume mask(dims);
  for (const auto& c : comps) {
    if ((high ? c.high_dims : c.low_dims) != dims) throw ShapeMismatch("component grid differs from mask grid");
    for (int64_t v : high ? c.high_voxels : c.voxels) mask.values[static_cast<size_t>(v)] = 1;
  }
  return mask;
}

std::vector<std::array<int64_t, 2>> EncodeRuns(const std::vector<int64_t>& sorted) {
  std::vector<std::array<int64_t, 2>> runs;
  for (int64_t v : sorted) {
    if (!runs.empty() && runs.back()[0] + runs.back()[1] == v) {
      ++runs.back()[1];
    } else {
      if (!runs.empty() && v < runs.back()[0] + runs.back()[1]) {
        throw InvalidArgument("run-length input must be strictly ascending");
      }
      runs.push_back({v, 1});
    }
  }
  return runs;
}

std::vector<int64_t> DecodeRuns(const std::vector<std::array<int64_t, 2>>& runs) {
  std::vector<int64_t> out;
  for (const auto& r : runs) {
    if (r[1] < 1) throw FormatError("run length must be positive");
    for (int64_t i = 0; i < r[1]; ++i) out.push_back(r[0] + i);
  }
  return out;
}

void WriteRoiFile(const std::string& path, const RoiFile& roi) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : roi.components) {
    comps.push_back({{"id", c.id},
                     {"size", c.size()},
                     {"bbox_lo", c.bbox_lo},
                     {"bbox_hi", c.bbox_hi},
                     {"voxels_rle", EncodeRuns(c.voxels)}});
  }
  const nlohmann::json j = {{"spacing_mm", roi.spacing_mm},
                            {"origin_mm", roi.origin_mm},
                            {"grid_dims", roi.grid_dims},
                            {"components", comps}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write ROI file " + path);
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing ROI file " + path);
}

RoiFile ReadRoiFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ROI file " + path);
  RoiFile roi;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (int a = 0; a < 3; ++a) roi.spacing_mm[a] = j.at("spacing_mm").at(a).get<double>();
    if (j.contains("origin_mm")) {
      for (int a = 0; a < 3; ++a) roi.origin_mm[a] = j.at("origin_mm").at(a).get<double>();
    }
    roi.grid_dims = ToIndex3(j.at("grid_dims"));
    for (const auto& jc : j.at("components")) {
      ComponentROI c;
      c.id = jc.at("id").get<int>();
      c.low_dims = roi.grid_dims;
      c.bbox_lo = ToIndex3(jc.at("bbox_lo"));
      c.bbox_hi = ToIndex3(jc.at("bbox_hi"));
      c.voxels = DecodeRuns(jc.at("voxels_rle").get<std::vector<std::array<int64_t, 2>>>());
      if (c.size() != jc.at("size").get<int64_t>()) {
        throw FormatError("component " + std::to_string(c.id) + " size disagrees with its runs");
      }
      for (int64_t v : c.voxels) {
        if (v < 0 || v >= VoxelCount(roi.grid_dims)) throw FormatError("ROI voxel outside grid");
      }
      roi.components.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse ROI file " + path + ": " + e.what());
  }
  return roi;
}

}  // namespace sparseseg
