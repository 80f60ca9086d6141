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

#include "sparseseg/train/loss.h"

#include <string>

#include "sparseseg/common/errors.h"
#include "sparseseg/nn/ops.h"

namespace sparseseg {

double DiceLossValue(std::span<const double> pred, std::span<const double> target, double eps) {
  if (pred.size() != target.size()) throw ShapeMismatch("dice: prediction/target length differ");
  double inter = 0, sp = 0, st = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * target[i];
    sp += pred[i];
    st += target[i];
  }
  return 1.0 - (2.0 * inter + eps) / (sp + st + eps);
}

std::vector<double> DeepSupervisionWeights(int heads) {
  std::vector<double> w(static_cast<size_t>(heads));
  for (int i = 0; i < heads; ++i) w[static_cast<size_t>(i)] = 1.0 / static_cast<double>(1 << i);
  return w;
}

namespace {

struct DiceStats {
  std::vector<double> inter, sum_p, sum_t;
};

template <typename T>
DiceStats Stats(const Matrix<T>& p, const Matrix<T>& t) {
  const auto c = static_cast<size_t>(p.cols());
  DiceStats s{std::vector<double>(c), std::vector<double>(c), std::vector<double>(c)};
  for (int64_t r = 0; r < p.rows(); ++r) {
    for (size_t k = 0; k < c; ++k) {
      const double pv = p(r, static_cast<int64_t>(k)), tv = t(r, static_cast<int64_t>(k));
      s.inter[k] += pv * tv;
      s.sum_p[k] += pv;
      s.sum_t[k] += tv;
    }
  }
  return s;
}

// Accumulates weight * dDice/dpred into `grad` rows.
template <typename T>
void DiceGrad(const Matrix<T>& t, const DiceStats& s, double eps, double weight, double seed,
              Matrix<T>& grad) {
  const auto c = static_cast<size_t>(t.cols());
  std::vector<double> a(c), b(c);
  for (size_t k = 0; k < c; ++k) {
    const double denom = s.sum_p[k] + s.sum_t[k] + eps;
    a[k] = -2.0 / denom;                                    // coefficient of t_r
    b[k] = (2.0 * s.inter[k] + eps) / (denom * denom);      // constant term
  }
  for (int64_t r = 0; r < t.rows(); ++r) {
    for (size_t k = 0; k < c; ++k) {
      const auto kc = static_cast<int64_t>(k);
      grad(r, kc) += static_cast<T>(seed * weight * (a[k] * t(r, kc) + b[k]));
    }
  }
}

}  // namespace

template <typename T>
LossResult<T> DiceLoss(Tape<T>* tape, const SparseTensor<T>& pred, const Matrix<T>& target,
                       double eps) {
  if (!pred.values().SameShape(target)) {
    throw ShapeMismatch("dice: prediction is " + std::to_string(pred.values().rows()) + "x" +
                        std::to_string(pred.values().cols()) + ", target is " +
                        std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
  }
  const DiceStats s = Stats(pred.values(), target);
  LossResult<T> out;
  double total = 0;
  out.per_head.emplace_back();
  for (size_t k = 0; k < s.inter.size(); ++k) {
    const double l = 1.0 - (2.0 * s.inter[k] + eps) / (s.sum_p[k] + s.sum_t[k] + eps);
    out.per_head[0].push_back(l);
    total += l;
  }
  out.per_channel = out.per_head[0];
  out.total = MakeVar(Matrix<T>(1, 1, static_cast<T>(total)), tape && pred.feats->requires_grad);
  if (tape && pred.feats->requires_grad) {
    tape->Record([pv = pred.feats, lv = out.total, target, s, eps]() {
      if (!lv->has_grad()) return;
      DiceGrad(target, s, eps, 1.0, static_cast<double>(lv->grad(0, 0)), pv->Grad());
    });
  }
  return out;
}

template <typename T>
std::vector<SparseTensor<T>> PooledTargets(const SparseTensor<T>& labels, int levels) {
  if (labels.stride() != Stride{1, 1, 1}) throw InvalidArgument("labels must be at stride 1");
  std::vector<SparseTensor<T>> targets{labels};
  for (int i = 1; i < levels; ++i) {
    targets.push_back(AvgPool<T>(nullptr, targets.back(), {2, 2, 2}));
  }
  return targets;
}

template <typename T>
LossResult<T> DeepSupervisedLoss(Tape<T>* tape, const std::vector<SparseTensor<T>>& heads,
                                 const SparseTensor<T>& labels, double eps) {
  if (heads.empty()) throw InvalidArgument("deep supervision needs at least one head");
  const auto targets = PooledTargets(labels, static_cast<int>(heads.size()));
  const auto weights = DeepSupervisionWeights(static_cast<int>(heads.size()));
  LossResult<T> out;
  std::vector<DiceStats> stats;
  double total = 0;
  bool needs_grad = false;
  for (size_t i = 0; i < heads.size(); ++i) {
    const Stride expected{1 << i, 1 << i, 1 << i};
    if (heads[i].stride() != expected || !heads[i].pyramid->Has(expected)) {
      throw InvalidArgument("head " + std::to_string(i) + " is not at stride " +
                            StrideToString(expected));
    }
    if (heads[i].coords.get() != targets[i].coords.get() &&
        !heads[i].coords->SameCoordinates(*targets[i].coords)) {
      throw ShapeMismatch("head " + std::to_string(i) + " rows differ from its target level");
    }
    if (!heads[i].values().SameShape(targets[i].values())) {
      throw ShapeMismatch("head " + std::to_string(i) + " shape differs from its target");
    }
    stats.push_back(Stats(heads[i].values(), targets[i].values()));
    const DiceStats& s = stats.back();
    std::vector<double> per;
    for (size_t k = 0; k < s.inter.size(); ++k) {
      per.push_back(1.0 - (2.0 * s.inter[k] + eps) / (s.sum_p[k] + s.sum_t[k] + eps));
      total += weights[i] * per.back();
    }
    if (out.per_channel.empty()) out.per_channel.assign(per.size(), 0.0);
    for (size_t k = 0; k < per.size(); ++k) out.per_channel[k] += weights[i] * per[k];
    out.per_head.push_back(std::move(per));
    needs_grad |= heads[i].feats->requires_grad;
  }
  out.total = MakeVar(Matrix<T>(1, 1, static_cast<T>(total)), tape && needs_grad);
  if (tape && needs_grad) {
    std::vector<VarPtr<T>> preds;
    std::vector<Matrix<T>> target_values;
    for (size_t i = 0; i < heads.size(); ++i) {
      preds.push_back(heads[i].feats);
      target_values.push_back(targets[i].values());
    }
    tape->Record([preds, target_values, stats, weights, lv = out.total, eps]() {
      if (!lv->has_grad()) return;
      const double seed = static_cast<double>(lv->grad(0, 0));
      for (size_t i = 0; i < preds.size(); ++i) {
        if (!preds[i]->requires_grad) continue;
        DiceGrad(target_values[i], stats[i], eps, weights[i], seed, preds[i]->Grad());
      }
    });
  }
  return out;
}

template LossResult<float> DiceLoss(Tape<float>*, const SparseTensor<float>&, const Matrix<float>&, double);
template LossResult<double> DiceLoss(Tape<double>*, const SparseTensor<double>&, const Matrix<double>&, double);
template std::vector<SparseTensor<float>> PooledTargets(const SparseTensor<float>&, int);
template std::vector<SparseTensor<double>> PooledTargets(const SparseTensor<double>&, int);
template LossResult<float> DeepSupervisedLoss(Tape<float>*, const std::vector<SparseTensor<float>>&,
                                              const SparseTensor<float>&, double);
template LossResult<double> DeepSupervisedLoss(Tape<double>*, const std::vector<SparseTensor<double>>&,
                                               const SparseTensor<double>&, double);

}  // namespace sparseseg
