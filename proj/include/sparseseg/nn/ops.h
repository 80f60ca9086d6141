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

#ifndef SPARSESEG_NN_OPS_H_
#define SPARSESEG_NN_OPS_H_

#include <array>

#include "sparseseg/core/kernel_map.h"
#include "sparseseg/core/matrix.h"
#include "sparseseg/core/sparse_tensor.h"
#include "sparseseg/nn/tape.h"

namespace sparseseg {

// Convolution weights stored as one (K * C_in) x C_out matrix: rows
// [k * C_in, (k + 1) * C_in) hold the C_in x C_out block for kernel offset
// k. Depthwise weights are K x C (one channel vector per offset).
template <typename T>
struct ConvParams {
  std::array<int, 3> kernel{3, 3, 3};
  int in_channels = 0;
  int out_channels = 0;
  bool depthwise = false;
  VarPtr<T> weight;
  VarPtr<T> bias;  // 1 x C_out, may be null

  int volume() const { return kernel[0] * kernel[1] * kernel[2]; }

  // Zero-initialised, trainable.
  static ConvParams Create(std::array<int, 3> kernel, int in_channels,
                           int out_channels, bool with_bias, bool depthwise = false);
};

template <typename T>
struct LinearParams {
  VarPtr<T> weight;  // C_in x C_out
  VarPtr<T> bias;    // 1 x C_out, may be null

  static LinearParams Create(int in_channels, int out_channels, bool with_bias);
};

template <typename T>
struct AffineNormParams {
  VarPtr<T> gamma;  // 1 x C
  VarPtr<T> beta;   // 1 x C
  double eps = 1e-6;

  // gamma = gamma_init, beta = 0.
  static AffineNormParams Create(int channels, double eps, T gamma_init = T(1));
};

// All ops record onto `tape` when it is non-null; pass nullptr for
// inference. Outputs require grad iff any input (or parameter) does.

// out[j] = sum_k sum_{(i,j) in map_k} x[i] W_k + b. Coordinates unchanged.
template <typename T>
SparseTensor<T> SubmConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p);
template <typename T>
SparseTensor<T> SubmConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p,
                         const KernelMap& map);

// Window convolution onto DownsampleCoords(x, factor) at stride x.stride*factor.
template <typename T>
SparseTensor<T> StridedConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p,
                            const std::array<int, 3>& factor);

// Inverse of StridedConv's map onto the registered level x.stride / factor.
// Weight block k is C_in(coarse) x C_out(fine).
template <typename T>
SparseTensor<T> TransposedConv(Tape<T>* tape, const SparseTensor<T>& x,
                               const ConvParams<T>& p, const std::array<int, 3>& factor);

// out[j, c] = sum_k sum_{(i,j)} x[i, c] w_k[c] + b[c].
template <typename T>
SparseTensor<T> DepthwiseConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p);
template <typename T>
SparseTensor<T> DepthwiseConv(Tape<T>* tape, const SparseTensor<T>& x,
                              const ConvParams<T>& p, const KernelMap& map);

// Mean over the active voxels of each output cell (divisor = active count).
template <typename T>
SparseTensor<T> AvgPool(Tape<T>* tape, const SparseTensor<T>& x, const std::array<int, 3>& factor);

// Per-row normalisation over the channel axis.
template <typename T>
SparseTensor<T> LayerNorm(Tape<T>* tape, const SparseTensor<T>& x, const AffineNormParams<T>& p);

// Global response normalisation; statistics per batch item over its active
// voxels: g_c = ||x_c||_2, n_c = g_c / (mean_c g + eps),
// y = gamma * (x * n) + beta + x.
template <typename T>
SparseTensor<T> Grn(Tape<T>* tape, const SparseTensor<T>& x, const AffineNormParams<T>& p);

// Exact erf form.
template <typename T>
SparseTensor<T> Gelu(Tape<T>* tape, const SparseTensor<T>& x);

template <typename T>
SparseTensor<T> Sigmoid(Tape<T>* tape, const SparseTensor<T>& x);

template <typename T>
SparseTensor<T> PointwiseLinear(Tape<T>* tape, const SparseTensor<T>& x, const LinearParams<T>& p);

// Element-wise sum; both operands must share one coordinate set.
template <typename T>
SparseTensor<T> Add(Tape<T>* tape, const SparseTensor<T>& a, const SparseTensor<T>& b);

template <typename T>
T GeluScalar(T x);
template <typename T>
T SigmoidScalar(T x);

}  // namespace sparseseg

#endif  // SPARSESEG_NN_OPS_H_
