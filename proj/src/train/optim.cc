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

#include "sparseseg/train/optim.h"

#include <cmath>
#include <numbers>
#include <string>

#include "sparseseg/common/errors.h"

namespace sparseseg {

template <typename T>
AdamW<T>::AdamW(std::vector<VarPtr<T>> params, double beta1, double beta2, double eps,
                double weight_decay)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {
  for (const auto& p : params_) {
    m_.emplace_back(static_cast<size_t>(p->value.size()), 0.0);
    v_.emplace_back(static_cast<size_t>(p->value.size()), 0.0);
  }
}

template <typename T>
void AdamW<T>::Step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Variable<T>& p = *params_[i];
    const bool has = !p.grad.empty();
    if (has && !p.grad.SameShape(p.value)) {
      throw ShapeMismatch("gradient shape differs from parameter shape");
    }
    if (static_cast<size_t>(p.value.size()) != m_[i].size()) {
      throw ShapeMismatch("parameter resized after optimizer construction");
    }
    T* w = p.value.data();
    for (int64_t k = 0; k < p.value.size(); ++k) {
      const auto ks = static_cast<size_t>(k);
      const double g = has ? static_cast<double>(p.grad.data()[k]) : 0.0;
      m_[i][ks] = beta1_ * m_[i][ks] + (1.0 - beta1_) * g;
      v_[i][ks] = beta2_ * v_[i][ks] + (1.0 - beta2_) * g * g;
      const double mhat = m_[i][ks] / c1;
      const double vhat = v_[i][ks] / c2;
      const double wv = static_cast<double>(w[k]);
      w[k] = static_cast<T>(wv - lr * (mhat / (std::sqrt(vhat) + eps_) + wd_ * wv));
    }
  }
}

double LrAtEpoch(const TrainConfig& cfg, int epoch, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("step fraction must lie in [0, 1)");
  if (epoch < 0 || epoch > cfg.epochs || (epoch == cfg.epochs && fraction > 0.0)) {
    throw InvalidArgument("epoch " + std::to_string(epoch) + " outside schedule of " +
                          std::to_string(cfg.epochs) + " epochs");
  }
  const double t = epoch + fraction;
  if (epoch < cfg.warmup_epochs) return cfg.lr * t / cfg.warmup_epochs;
  const int cosine_start = cfg.warmup_epochs + cfg.constant_epochs;
  if (epoch < cosine_start || cfg.cosine_epochs == 0) return cfg.lr;
  const double progress = (t - cosine_start) / cfg.cosine_epochs;
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace sparseseg
