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

#ifndef SPARSESEG_MODEL_UNET_H_
#define SPARSESEG_MODEL_UNET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sparseseg/core/sparse_tensor.h"
#include "sparseseg/model/config.h"
#include "sparseseg/nn/dense.h"
#include "sparseseg/nn/ops.h"
#include "sparseseg/nn/tape.h"

namespace sparseseg {

template <typename T>
struct NamedParam {
  std::string name;
  VarPtr<T> var;
};

// depthwise conv -> LN -> pointwise expansion -> GELU -> GRN -> pointwise
// projection -> residual add.
template <typename T>
struct ConvNeXtBlock {
  ConvParams<T> dw;
  AffineNormParams<T> norm;
  LinearParams<T> expand;
  AffineNormParams<T> grn;
  LinearParams<T> project;
};

template <typename T>
struct DownSample {
  AffineNormParams<T> norm;
  ConvParams<T> conv;
};

template <typename T>
struct DecoderStage {
  AffineNormParams<T> norm;
  ConvParams<T> up;  // transposed, 2C -> C
  std::vector<ConvNeXtBlock<T>> blocks;
};

template <typename T>
struct Head {
  AffineNormParams<T> norm;
  ConvNeXtBlock<T> block;
  ConvParams<T> classifier;
};

template <typename T>
class SparseUNet {
 public:
  // Truncated-normal (std 0.02, +-2 std) conv and linear weights, zero biases,
  // unit norm scales.
  static SparseUNet Build(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<NamedParam<T>>& parameters() const { return params_; }
  int64_t ParameterCount() const;
  int head_count() const { return static_cast<int>(heads_.size()); }

  // Post-sigmoid probabilities of the `num_heads` finest heads; element i
  // lives at stride 2^i. num_heads < 0 means config().ds_heads. A null tape
  // runs inference without recording.
  std::vector<SparseTensor<T>> Forward(const SparseTensor<T>& x, Tape<T>* tape,
                                       int num_heads = -1) const;

  // Dense counterpart: every intermediate is masked to the active set of its
  // level, so results equal Forward() on active sites.
  std::vector<DenseVolume<T>> DenseForward(const DenseVolume<T>& x, const DenseMask& mask,
                                           int num_heads = -1) const;

  void ZeroGrad() const;

 private:
  SparseUNet() = default;
  SparseTensor<T> Block(const ConvNeXtBlock<T>& b, const SparseTensor<T>& x, Tape<T>* tape) const;
  DenseVolume<T> DenseBlock(const ConvNeXtBlock<T>& b, const DenseVolume<T>& x,
                            const DenseMask& mask) const;

  ModelConfig cfg_;
  LinearParams<T> stem_;
  AffineNormParams<T> stem_norm_;
  std::vector<std::vector<ConvNeXtBlock<T>>> encoder_;
  std::vector<DownSample<T>> down_;
  std::vector<DecoderStage<T>> decoder_;  // decoder_[i] produces stride-2^i output
  std::vector<Head<T>> heads_;            // heads_[i] reads the stride-2^i output
  std::vector<NamedParam<T>> params_;
};

}  // namespace sparseseg

#endif  // SPARSESEG_MODEL_UNET_H_
