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

#ifndef SPARSESEG_TRAIN_LOSS_H_
#define SPARSESEG_TRAIN_LOSS_H_

#include <span>
#include <vector>

#include "sparseseg/core/sparse_tensor.h"
#include "sparseseg/nn/tape.h"

namespace sparseseg {

inline constexpr double kDefaultDiceEps = 1e-5;

// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps) for one channel.
double DiceLossValue(std::span<const double> pred, std::span<const double> target,
                     double eps = kDefaultDiceEps);

// Weight 1/2^i for head i.
std::vector<double> DeepSupervisionWeights(int heads);

template <typename T>
struct LossResult {
  VarPtr<T> total;  // 1x1, differentiable
  // per_head[i][c]: unweighted Dice loss of head i, channel c.
  std::vector<std::vector<double>> per_head;
  // Deep-supervision weighted sum per channel: sum_i w_i per_head[i][c].
  std::vector<double> per_channel;
};

// Sum of per-channel Dice losses of `pred` against `target` (same rows).
template <typename T>
LossResult<T> DiceLoss(Tape<T>* tape, const SparseTensor<T>& pred, const Matrix<T>& target,
                       double eps = kDefaultDiceEps);

// sum_i 1/2^i DiceLoss(heads[i], avg_pool^i(labels)). `labels` must share the
// heads' pyramid and sit at stride 1.
template <typename T>
LossResult<T> DeepSupervisedLoss(Tape<T>* tape, const std::vector<SparseTensor<T>>& heads,
                                 const SparseTensor<T>& labels, double eps = kDefaultDiceEps);

// Soft targets for every head level: element i is avg_pool^i(labels).
template <typename T>
std::vector<SparseTensor<T>> PooledTargets(const SparseTensor<T>& labels, int levels);

}  // namespace sparseseg

#endif  // SPARSESEG_TRAIN_LOSS_H_
