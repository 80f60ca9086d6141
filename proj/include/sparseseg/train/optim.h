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

#ifndef SPARSESEG_TRAIN_OPTIM_H_
#define SPARSESEG_TRAIN_OPTIM_H_

#include <cstdint>
#include <vector>

#include "sparseseg/core/matrix.h"
#include "sparseseg/train/config.h"

namespace sparseseg {

// AdamW with decoupled weight decay:
//   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
//   p -= lr (m / (1 - b1^t) / (sqrt(v / (1 - b2^t)) + eps) + wd p)
// A parameter without a gradient is stepped with g = 0.
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<VarPtr<T>> params, double beta1, double beta2, double eps,
        double weight_decay);
  AdamW(std::vector<VarPtr<T>> params, const TrainConfig& cfg)
      : AdamW(std::move(params), cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay) {}

  void Step(double lr);
  int64_t step_count() const { return t_; }

 private:
  std::vector<VarPtr<T>> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_, wd_;
  int64_t t_ = 0;
};

// Learning rate at `epoch` plus a fraction of it. Linear warmup from 0,
// constant plateau, then cosine decay to 0. epoch == epochs with fraction 0
// returns the end-of-schedule limit; anything later throws.
double LrAtEpoch(const TrainConfig& cfg, int epoch, double fraction = 0.0);

}  // namespace sparseseg

#endif  // SPARSESEG_TRAIN_OPTIM_H_
