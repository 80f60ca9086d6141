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

#include "sparseseg/core/sparse_tensor.h"

#include <string>
#include <utility>

#include "sparseseg/common/errors.h"

namespace sparseseg {

template <typename T>
SparseTensor<T> MakeSparseTensor(std::vector<Coord> coords, Matrix<T> feats,
                                 Stride stride, bool requires_grad) {
  if (static_cast<int64_t>(coords.size()) != feats.rows()) {
    throw ShapeMismatch("coordinate count " + std::to_string(coords.size()) +
                        " != feature rows " + std::to_string(feats.rows()));
  }
  auto pyramid = std::make_shared<CoordinatePyramid>();
  auto set = pyramid->Register(CoordinateSet(std::move(coords), stride));
  return {std::move(pyramid), std::move(set), MakeVar(std::move(feats), requires_grad)};
}

template <typename T>
SparseTensor<T> SparsifyDense(const VoxelGrid& grid, const BinaryVolume& mask,
                              int batch_index) {
  if (mask.dims != grid.dims()) throw ShapeMismatch("mask dims differ from grid dims");
  const int64_t n = mask.Count();
  std::vector<Coord> coords;
  coords.reserve(static_cast<size_t>(n));
  Matrix<T> feats(n, 1);
  const Index3& d = grid.dims();
  for (int64_t i = 0; i < VoxelCount(d); ++i) {
    if (!mask.values[static_cast<size_t>(i)]) continue;
    const Index3 p = UnravelIndex(d, i);
    feats(static_cast<int64_t>(coords.size()), 0) = static_cast<T>(grid[i]);
    coords.push_back({batch_index, p[0], p[1], p[2]});
  }
  return MakeSparseTensor(std::move(coords), std::move(feats));
}

template <typename T>
DenseVolume<T> Densify(const SparseTensor<T>& st, const Index3& dims, T fill,
                       int batch) {
  DenseVolume<T> out(batch, dims, st.channels(), fill);
  const Stride& s = st.stride();
  const int channels = st.channels();
  for (int64_t r = 0; r < st.size(); ++r) {
    const Coord& c = (*st.coords)[r];
    const Index3 p{FloorDiv(c.x, s[0]), FloorDiv(c.y, s[1]), FloorDiv(c.z, s[2])};
    if (!InBounds(dims, p) || c.b < 0 || c.b >= batch) {
      throw InvalidArgument("coordinate outside densify bounds");
    }
    std::copy_n(st.values().row(r), channels, out.at(c.b, p[0], p[1], p[2]));
  }
  return out;
}

template SparseTensor<float> MakeSparseTensor(std::vector<Coord>, Matrix<float>, Stride, bool);
template SparseTensor<double> MakeSparseTensor(std::vector<Coord>, Matrix<double>, Stride, bool);
template SparseTensor<float> SparsifyDense(const VoxelGrid&, const BinaryVolume&, int);
template SparseTensor<double> SparsifyDense(const VoxelGrid&, const BinaryVolume&, int);
template DenseVolume<float> Densify(const SparseTensor<float>&, const Index3&, float, int);
template DenseVolume<double> Densify(const SparseTensor<double>&, const Index3&, double, int);

}  // namespace sparseseg
