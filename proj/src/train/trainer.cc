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

#include "sparseseg/train/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sparseseg/common/errors.h"
#include "sparseseg/model/checkpoint.h"
#include "sparseseg/train/augment.h"
#include "sparseseg/train/kfold.h"
#include "sparseseg/train/loss.h"
#include "sparseseg/train/optim.h"
#include "sparseseg/volume/multilabel.h"

namespace sparseseg {
namespace {

struct Accumulator {
  std::array<double, 3> channel{0, 0, 0};
  int count = 0;

  void Add(const std::vector<double>& per_channel) {
    for (size_t k = 0; k < channel.size(); ++k) channel[k] += per_channel[k];
    ++count;
  }
  void Emit(int epoch, const std::string& split, std::vector<LossLogRow>& rows) const {
    if (count == 0) return;
    double total = 0;
    for (size_t k = 0; k < channel.size(); ++k) {
      rows.push_back({epoch, kChannelNames[k], split, channel[k] / count});
      total += channel[k] / count;
    }
    rows.push_back({epoch, "total", split, total});
  }
  double Total() const {
    return count ? (channel[0] + channel[1] + channel[2]) / count : 0.0;
  }
};

void CheckFinite(const LossResult<float>& l, int epoch) {
  for (double v : l.per_channel) {
    if (!std::isfinite(v)) throw Error("non-finite loss in epoch " + std::to_string(epoch));
  }
}

}  // namespace

Sample MakeSample(const std::vector<const TrainingCase*>& cases, const HUWindow& window) {
  std::vector<Coord> coords;
  std::vector<float> feats, targets;
  for (size_t b = 0; b < cases.size(); ++b) {
    const TrainingCase& c = *cases[b];
    if (c.image.dims() != c.labels.dims()) throw ShapeMismatch(c.id + ": image and label dims differ");
    const BinaryVolume active = c.roi ? *c.roi : ApplyHuWindow(c.image, window);
    if (active.dims != c.image.dims()) throw ShapeMismatch(c.id + ": roi dims differ from image");
    const MultiLabelMask ml = MakeMultiLabel(c.labels);
    const Index3& d = c.image.dims();
    for (int64_t i = 0; i < c.image.size(); ++i) {
      const auto at = static_cast<size_t>(i);
      if (!active.values[at]) continue;
      const Index3 p = UnravelIndex(d, i);
      coords.push_back({static_cast<int>(b), p[0], p[1], p[2]});
      feats.push_back(static_cast<float>(NormalizeIntensity(c.image[i], window)));
      for (const auto& ch : ml.channels) targets.push_back(static_cast<float>(ch[at]));
    }
  }
  const auto n = static_cast<int64_t>(coords.size());
  Matrix<float> f(n, 1), t(n, MultiLabelMask::kChannels);
  std::copy(feats.begin(), feats.end(), f.data());
  std::copy(targets.begin(), targets.end(), t.data());
  Sample s;
  s.input = MakeSparseTensor(std::move(coords), std::move(f));
  s.labels = s.input.WithFeatures(MakeVar(std::move(t)));
  return s;
}

TrainResult TrainStage(const std::vector<TrainingCase>& cases, const TrainConfig& cfg,
                       const ModelConfig& model_cfg, const TrainOptions& opts) {
  cfg.Validate();
  model_cfg.Validate();
  opts.window.Validate();
  std::vector<int> train, validation;
  if (opts.fold < 0) {
    for (int i = 0; i < static_cast<int>(cases.size()); ++i) train.push_back(i);
  } else {
    const FoldAssignment a =
        SelectFold(KFoldSplit(static_cast<int>(cases.size()), opts.folds, opts.split_seed), opts.fold);
    train = a.train;
    validation = a.validation;
  }
  if (train.empty()) throw InvalidArgument("empty training set");

  TrainResult result{SparseUNet<float>::Build(model_cfg, cfg.seed), {}, {}, 0, 0};
  const SparseUNet<float>& model = result.model;
  std::vector<VarPtr<float>> vars;
  for (const auto& p : model.parameters()) vars.push_back(p.var);
  AdamW<float> opt(vars, cfg);
  std::mt19937_64 rng(cfg.seed ^ 0x5eed5eedULL);
  const int batches = (static_cast<int>(train.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const int steps = (batches + cfg.grad_accum - 1) / cfg.grad_accum;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = train;
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    Accumulator train_acc;
    int epoch_steps = 0;
    for (int step = 0; step < steps; ++step) {
      const int first = step * cfg.grad_accum;
      const int group = std::min(cfg.grad_accum, batches - first);
      for (int b = first; b < first + group; ++b) {
        std::vector<TrainingCase> augmented;
        std::vector<const TrainingCase*> members;
        const auto lo = static_cast<size_t>(b * cfg.batch_size);
        const size_t hi = std::min(order.size(), lo + static_cast<size_t>(cfg.batch_size));
        augmented.reserve(hi - lo);
        for (size_t i = lo; i < hi; ++i) {
          const TrainingCase& c = cases[static_cast<size_t>(order[i])];
          if (cfg.augment) {
            AugmentResult r = Augment(c.image, c.labels, rng, cfg.augmentation,
                                      c.roi ? &*c.roi : nullptr);
            augmented.push_back({c.id, std::move(r.image), std::move(r.labels), std::move(r.roi)});
            members.push_back(&augmented.back());
          } else {
            members.push_back(&c);
          }
        }
        const Sample s = MakeSample(members, opts.window);
        if (s.input.size() == 0) continue;
        Tape<float> tape;
        const auto heads = model.Forward(s.input, &tape);
        const LossResult<float> loss = DeepSupervisedLoss(&tape, heads, s.labels, cfg.dice_eps);
        CheckFinite(loss, epoch);
        train_acc.Add(loss.per_channel);
        tape.Backward(loss.total, 1.0f / static_cast<float>(group));
      }
      opt.Step(LrAtEpoch(cfg, epoch, static_cast<double>(step) / steps));
      model.ZeroGrad();
      ++epoch_steps;
    }
    result.optimizer_steps += epoch_steps;
    result.steps_per_epoch.push_back(epoch_steps);
    train_acc.Emit(epoch, "train", result.log);
    result.final_train_loss = train_acc.Total();

    Accumulator val_acc;
    for (int v : validation) {
      const Sample s = MakeSample({&cases[static_cast<size_t>(v)]}, opts.window);
      if (s.input.size() == 0) continue;
      const auto heads = model.Forward(s.input, nullptr);
      const LossResult<float> loss = DeepSupervisedLoss<float>(nullptr, heads, s.labels, cfg.dice_eps);
      CheckFinite(loss, epoch);
      val_acc.Add(loss.per_channel);
    }
    val_acc.Emit(epoch, "validation", result.log);
    if (opts.progress) {
      char line[160];
      std::snprintf(line, sizeof(line), "epoch %d/%d train %.6f%s", epoch + 1, cfg.epochs,
                    train_acc.Total(),
                    val_acc.count ? (" validation " + std::to_string(val_acc.Total())).c_str() : "");
      opts.progress(line);
    }
  }

  if (!opts.checkpoint_path.empty()) {
    SaveCheckpoint(model, opts.checkpoint_path,
                   {{"epochs", cfg.epochs},
                    {"fold", opts.fold},
                    {"optimizer_steps", result.optimizer_steps},
                    {"train_config", ToJson(cfg)},
                    {"hu_window", {opts.window.lo, opts.window.hi}}});
  }
  if (!opts.loss_log_path.empty()) WriteLossLog(opts.loss_log_path, result.log);
  return result;
}

void WriteLossLog(const std::string& path, const std::vector<LossLogRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write loss log " + path);
  out << "epoch,channel,split,loss\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.9g", r.loss);
    out << r.epoch << ',' << r.channel << ',' << r.split << ',' << buf << '\n';
  }
  if (!out) throw IoError("failed writing loss log " + path);
}

}  // namespace sparseseg
