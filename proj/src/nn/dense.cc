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

#include "sparseseg/nn/dense.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparseseg/common/errors.h"

namespace sparseseg {
namespace {

template <typename T>
using ConstRows = Eigen::Map<const EigenRowMajor<T>>;
template <typename T>
using Rows = Eigen::Map<EigenRowMajor<T>>;

template <typename T>
ConstRows<T> AsRows(const DenseVolume<T>& v) {
  return ConstRows<T>(v.data.data(), v.batch * v.voxels(), v.channels);
}
template <typename T>
Rows<T> AsRows(DenseVolume<T>& v) {
  return Rows<T>(v.data.data(), v.batch * v.voxels(), v.channels);
}

template <typename T>
void AddBiasDense(DenseVolume<T>& out, const VarPtr<T>& bias) {
  if (!bias) return;
  AsRows(out).rowwise() += bias->value.map().row(0);
}

int CeilDiv(int a, int b) { return (a + b - 1) / b; }

}  // namespace

int64_t DenseMask::Count() const {
  return std::count_if(active.begin(), active.end(), [](uint8_t v) { return v != 0; });
}

template <typename T>
DenseVolume<T> DenseConv(const DenseVolume<T>& in, const ConvParams<T>& p,
                         const std::array<int, 3>& stride) {
  if (p.depthwise) throw InvalidArgument("DenseConv: depthwise parameters");
  if (in.channels != p.in_channels) throw ShapeMismatch("DenseConv: channel mismatch");
  const int cin = p.in_channels, cout = p.out_channels;
  const Matrix<T>& w = p.weight->value;
  if (stride == std::array<int, 3>{1, 1, 1}) {
    const auto offsets = CenteredOffsets(p.kernel);
    DenseVolume<T> out(in.batch, in.dims, cout);
    DenseVolume<T> product(in.batch, in.dims, cout);
    const Index3& d = in.dims;
    for (size_t k = 0; k < offsets.size(); ++k) {
      const auto& o = offsets[k];
      AsRows(product).noalias() =
          AsRows(in) * w.map().middleRows(static_cast<int64_t>(k) * cin, cin);
      const int x0 = std::max(0, -o[0]), x1 = std::min(d[0], d[0] - o[0]);
      if (x0 >= x1) continue;
      for (int b = 0; b < in.batch; ++b) {
        for (int z = std::max(0, -o[2]); z < std::min(d[2], d[2] - o[2]); ++z) {
          for (int y = std::max(0, -o[1]); y < std::min(d[1], d[1] - o[1]); ++y) {
            T* dst = out.at(b, x0, y, z);
            const T* src = product.at(b, x0 + o[0], y + o[1], z + o[2]);
            const int64_t n = static_cast<int64_t>(x1 - x0) * cout;
            for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
          }
        }
      }
    }
    AddBiasDense(out, p.bias);
    return out;
  }
  const Index3 od{CeilDiv(in.dims[0], stride[0]), CeilDiv(in.dims[1], stride[1]),
                  CeilDiv(in.dims[2], stride[2])};
  DenseVolume<T> out(in.batch, od, cout);
  DenseVolume<T> gathered(in.batch, od, cin);
  const auto offsets = WindowOffsets(p.kernel);
  for (size_t k = 0; k < offsets.size(); ++k) {
    const auto& o = offsets[k];
    std::fill(gathered.data.begin(), gathered.data.end(), T(0));
    for (int b = 0; b < in.batch; ++b) {
      for (int z = 0; z < od[2]; ++z) {
        const int iz = z * stride[2] + o[2];
        if (iz >= in.dims[2]) continue;
        for (int y = 0; y < od[1]; ++y) {
          const int iy = y * stride[1] + o[1];
          if (iy >= in.dims[1]) continue;
          for (int x = 0; x < od[0]; ++x) {
            const int ix = x * stride[0] + o[0];
            if (ix >= in.dims[0]) continue;
            std::copy_n(in.at(b, ix, iy, iz), cin, gathered.at(b, x, y, z));
          }
        }
      }
    }
    AsRows(out).noalias() +=
        AsRows(gathered) * w.map().middleRows(static_cast<int64_t>(k) * cin, cin);
  }
  AddBiasDense(out, p.bias);
  return out;
}

template <typename T>
DenseVolume<T> DenseTransposedConv(const DenseVolume<T>& in, const ConvParams<T>& p,
                                   const std::array<int, 3>& stride, const Index3& out_dims) {
  if (in.channels != p.in_channels) {
    throw ShapeMismatch("DenseTransposedConv: channel mismatch");
  }
  const int cin = p.in_channels, cout = p.out_channels;
  DenseVolume<T> out(in.batch, out_dims, cout);
  DenseVolume<T> product(in.batch, in.dims, cout);
  const auto offsets = WindowOffsets(p.kernel);
  for (size_t k = 0; k < offsets.size(); ++k) {
    const auto& o = offsets[k];
    AsRows(product).noalias() =
        AsRows(in) * p.weight->value.map().middleRows(static_cast<int64_t>(k) * cin, cin);
    for (int b = 0; b < in.batch; ++b) {
      for (int z = 0; z < in.dims[2]; ++z) {
        const int fz = z * stride[2] + o[2];
        if (fz >= out_dims[2]) continue;
        for (int y = 0; y < in.dims[1]; ++y) {
          const int fy = y * stride[1] + o[1];
          if (fy >= out_dims[1]) continue;
          for (int x = 0; x < in.dims[0]; ++x) {
            const int fx = x * stride[0] + o[0];
            if (fx >= out_dims[0]) continue;
            T* dst = out.at(b, fx, fy, fz);
            const T* src = product.at(b, x, y, z);
            for (int c = 0; c < cout; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
  AddBiasDense(out, p.bias);
  return out;
}

template <typename T>
DenseVolume<T> DenseDepthwiseConv(const DenseVolume<T>& in, const ConvParams<T>& p) {
  if (!p.depthwise || in.channels != p.in_channels) {
    throw InvalidArgument("DenseDepthwiseConv: parameters are not depthwise for this input");
  }
  const int ch = in.channels;
  const Index3& d = in.dims;
  DenseVolume<T> out(in.batch, d, ch);
  const auto offsets = CenteredOffsets(p.kernel);
  for (size_t k = 0; k < offsets.size(); ++k) {
    const auto& o = offsets[k];
    const T* wk = p.weight->value.row(static_cast<int64_t>(k));
    const int x0 = std::max(0, -o[0]), x1 = std::min(d[0], d[0] - o[0]);
    if (x0 >= x1) continue;
    for (int b = 0; b < in.batch; ++b) {
      for (int z = std::max(0, -o[2]); z < std::min(d[2], d[2] - o[2]); ++z) {
        for (int y = std::max(0, -o[1]); y < std::min(d[1], d[1] - o[1]); ++y) {
          T* dst = out.at(b, x0, y, z);
          const T* src = in.at(b, x0 + o[0], y + o[1], z + o[2]);
          for (int x = x0; x < x1; ++x, dst += ch, src += ch) {
            for (int c = 0; c < ch; ++c) dst[c] += src[c] * wk[c];
          }
        }
      }
    }
  }
  AddBiasDense(out, p.bias);
  return out;
}

template <typename T>
DenseVolume<T> DensePointwiseLinear(const DenseVolume<T>& in, const LinearParams<T>& p) {
  if (in.channels != p.weight->value.rows()) {
    throw ShapeMismatch("DensePointwiseLinear: channel mismatch");
  }
  DenseVolume<T> out(in.batch, in.dims, static_cast<int>(p.weight->value.cols()));
  AsRows(out).noalias() = AsRows(in) * p.weight->value.map();
  AddBiasDense(out, p.bias);
  return out;
}

template <typename T>
DenseVolume<T> DenseLayerNorm(const DenseVolume<T>& in, const AffineNormParams<T>& p) {
  const int ch = in.channels;
  DenseVolume<T> out(in.batch, in.dims, ch);
  const T* gamma = p.gamma->value.data();
  const T* beta = p.beta->value.data();
  const T eps = static_cast<T>(p.eps);
  const int64_t rows = in.batch * in.voxels();
  for (int64_t r = 0; r < rows; ++r) {
    const T* src = in.data.data() + r * ch;
    T* dst = out.data.data() + r * ch;
    T mean = 0;
    for (int c = 0; c < ch; ++c) mean += src[c];
    mean /= ch;
    T var = 0;
    for (int c = 0; c < ch; ++c) var += (src[c] - mean) * (src[c] - mean);
    var /= ch;
    const T is = T(1) / std::sqrt(var + eps);
    for (int c = 0; c < ch; ++c) dst[c] = gamma[c] * ((src[c] - mean) * is) + beta[c];
  }
  return out;
}

template <typename T>
DenseVolume<T> DenseGrn(const DenseVolume<T>& in, const AffineNormParams<T>& p) {
  const int ch = in.channels;
  DenseVolume<T> out(in.batch, in.dims, ch);
  const T* gamma = p.gamma->value.data();
  const T* beta = p.beta->value.data();
  const T eps = static_cast<T>(p.eps);
  const int64_t per_item = in.voxels();
  std::vector<T> g(static_cast<size_t>(ch)), n(static_cast<size_t>(ch));
  for (int b = 0; b < in.batch; ++b) {
    std::fill(g.begin(), g.end(), T(0));
    const T* base = in.data.data() + b * per_item * ch;
    for (int64_t r = 0; r < per_item; ++r) {
      for (int c = 0; c < ch; ++c) g[static_cast<size_t>(c)] += base[r * ch + c] * base[r * ch + c];
    }
    T mean = 0;
    for (auto& v : g) {
      v = std::sqrt(v);
      mean += v;
    }
    mean /= ch;
    for (int c = 0; c < ch; ++c) n[static_cast<size_t>(c)] = g[static_cast<size_t>(c)] / (mean + eps);
    T* dst = out.data.data() + b * per_item * ch;
    for (int64_t r = 0; r < per_item; ++r) {
      for (int c = 0; c < ch; ++c) {
        const T x = base[r * ch + c];
        dst[r * ch + c] = gamma[c] * (x * n[static_cast<size_t>(c)]) + beta[c] + x;
      }
    }
  }
  return out;
}

template <typename T>
void DenseGeluInPlace(DenseVolume<T>& v) {
  for (auto& x : v.data) x = GeluScalar(x);
}

template <typename T>
void DenseSigmoidInPlace(DenseVolume<T>& v) {
  for (auto& x : v.data) x = SigmoidScalar(x);
}

template <typename T>
void DenseAddInPlace(DenseVolume<T>& acc, const DenseVolume<T>& other) {
  if (acc.data.size() != other.data.size()) throw ShapeMismatch("DenseAddInPlace: shape mismatch");
  for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += other.data[i];
}

template <typename T>
void ApplyMask(DenseVolume<T>& v, const DenseMask& mask) {
  if (mask.dims != v.dims || mask.batch != v.batch) throw ShapeMismatch("ApplyMask: shape mismatch");
  const int ch = v.channels;
  for (size_t i = 0; i < mask.active.size(); ++i) {
    if (!mask.active[i]) std::fill_n(v.data.data() + i * static_cast<size_t>(ch), ch, T(0));
  }
}

DenseMask DownsampleMask(const DenseMask& mask, const std::array<int, 3>& stride) {
  const Index3 od{CeilDiv(mask.dims[0], stride[0]), CeilDiv(mask.dims[1], stride[1]),
                  CeilDiv(mask.dims[2], stride[2])};
  DenseMask out(mask.batch, od);
  const int64_t in_vox = VoxelCount(mask.dims), out_vox = VoxelCount(od);
  for (int b = 0; b < mask.batch; ++b) {
    for (int z = 0; z < mask.dims[2]; ++z) {
      for (int y = 0; y < mask.dims[1]; ++y) {
        for (int x = 0; x < mask.dims[0]; ++x) {
          if (!mask.active[static_cast<size_t>(b * in_vox + LinearIndex(mask.dims, x, y, z))]) continue;
          out.active[static_cast<size_t>(
              b * out_vox + LinearIndex(od, x / stride[0], y / stride[1], z / stride[2]))] = 1;
        }
      }
    }
  }
  return out;
}

template <typename T>
DenseMask MaskOf(const SparseTensor<T>& st, const Index3& dims, int batch) {
  DenseMask mask(batch, dims);
  const Stride& s = st.stride();
  for (int64_t r = 0; r < st.size(); ++r) {
    const Coord& c = (*st.coords)[r];
    const Index3 p{FloorDiv(c.x, s[0]), FloorDiv(c.y, s[1]), FloorDiv(c.z, s[2])};
    if (!InBounds(dims, p) || c.b < 0 || c.b >= batch) {
      throw InvalidArgument("MaskOf: coordinate outside bounds");
    }
    mask.active[static_cast<size_t>(c.b * VoxelCount(dims) + LinearIndex(dims, p[0], p[1], p[2]))] = 1;
  }
  return mask;
}

#define SPARSESEG_INSTANTIATE_DENSE(T)                                                       \
  template DenseVolume<T> DenseConv(const DenseVolume<T>&, const ConvParams<T>&,             \
                                    const std::array<int, 3>&);                              \
  template DenseVolume<T> DenseTransposedConv(const DenseVolume<T>&, const ConvParams<T>&,   \
                                              const std::array<int, 3>&, const Index3&);     \
  template DenseVolume<T> DenseDepthwiseConv(const DenseVolume<T>&, const ConvParams<T>&);   \
  template DenseVolume<T> DensePointwiseLinear(const DenseVolume<T>&, const LinearParams<T>&); \
  template DenseVolume<T> DenseLayerNorm(const DenseVolume<T>&, const AffineNormParams<T>&); \
  template DenseVolume<T> DenseGrn(const DenseVolume<T>&, const AffineNormParams<T>&);       \
  template void DenseGeluInPlace(DenseVolume<T>&);                                           \
  template void DenseSigmoidInPlace(DenseVolume<T>&);                                        \
  template void DenseAddInPlace(DenseVolume<T>&, const DenseVolume<T>&);                     \
  template void ApplyMask(DenseVolume<T>&, const DenseMask&);                                \
  template DenseMask MaskOf(const SparseTensor<T>&, const Index3&, int);

SPARSESEG_INSTANTIATE_DENSE(float)
SPARSESEG_INSTANTIATE_DENSE(double)

#undef SPARSESEG_INSTANTIATE_DENSE

}  // namespace sparseseg
