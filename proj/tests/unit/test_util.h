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

#ifndef SPARSESEG_TESTS_UNIT_TEST_UTIL_H_
#define SPARSESEG_TESTS_UNIT_TEST_UTIL_H_

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sparseseg/core/coords.h"
#include "sparseseg/core/matrix.h"
#include "sparseseg/nn/ops.h"
#include "sparseseg/oracles/oracles.h"

namespace sparseseg::testing {

inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sparseseg_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Distinct coordinates inside [0, dims) with the given occupancy, canonical
// order.
inline std::vector<Coord> RandomCoords(std::mt19937_64& rng, const Index3& dims,
                                       double occupancy, int batch = 1) {
  std::bernoulli_distribution keep(occupancy);
  std::vector<Coord> coords;
  for (int b = 0; b < batch; ++b) {
    for (int z = 0; z < dims[2]; ++z) {
      for (int y = 0; y < dims[1]; ++y) {
        for (int x = 0; x < dims[0]; ++x) {
          if (keep(rng)) coords.push_back({b, x, y, z});
        }
      }
    }
  }
  if (coords.empty()) coords.push_back({0, dims[0] / 2, dims[1] / 2, dims[2] / 2});
  return coords;
}

template <typename T>
Matrix<T> RandomMatrix(std::mt19937_64& rng, int64_t rows, int64_t cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix<T> m(rows, cols);
  for (int64_t i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
  return m;
}

template <typename T>
void Randomize(std::mt19937_64& rng, const VarPtr<T>& v, double scale = 1.0) {
  if (!v) return;
  v->value = RandomMatrix<T>(rng, v->value.rows(), v->value.cols(), scale);
}

template <typename T>
oracles::NaiveVolume ToNaive(const SparseTensor<T>& st, const Index3& dims) {
  oracles::NaiveVolume vol(dims, st.channels());
  const Stride& s = st.stride();
  for (int64_t r = 0; r < st.size(); ++r) {
    const Coord& c = (*st.coords)[r];
    for (int ch = 0; ch < st.channels(); ++ch) {
      vol.at(c.x / s[0], c.y / s[1], c.z / s[2], ch) = static_cast<double>(st.values()(r, ch));
    }
  }
  return vol;
}

template <typename T>
oracles::WeightFn WeightsOf(const ConvParams<T>& p) {
  const Matrix<T> w = p.weight->value;
  const int cin = p.in_channels;
  const bool dw = p.depthwise;
  return [w, cin, dw](int k, int ci, int co) -> double {
    if (dw) return ci == co ? static_cast<double>(w(k, ci)) : 0.0;
    return static_cast<double>(w(static_cast<int64_t>(k) * cin + ci, co));
  };
}

template <typename T>
std::vector<double> BiasOf(const ConvParams<T>& p) {
  std::vector<double> b;
  if (!p.bias) return b;
  for (int c = 0; c < p.out_channels; ++c) b.push_back(static_cast<double>(p.bias->value(0, c)));
  return b;
}

}  // namespace sparseseg::testing

#endif  // SPARSESEG_TESTS_UNIT_TEST_UTIL_H_
