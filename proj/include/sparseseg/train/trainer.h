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

#ifndef SPARSESEG_TRAIN_TRAINER_H_
#define SPARSESEG_TRAIN_TRAINER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sparseseg/model/unet.h"
#include "sparseseg/pipeline/sparsify.h"
#include "sparseseg/train/config.h"
#include "sparseseg/volume/voxel_grid.h"

namespace sparseseg {

inline constexpr std::array<const char*, 3> kChannelNames = {"kidney_mass", "tumour_cyst",
                                                             "tumour"};

// One training volume. Without `roi` the active set is the HU window of the
// (augmented) image; with it, the ROI voxels are the active set.
struct TrainingCase {
  std::string id;
  VoxelGrid image;   // HU
  VoxelGrid labels;  // label codes
  std::optional<BinaryVolume> roi;
};

struct LossLogRow {
  int epoch = 0;
  std::string channel;  // a channel name or "total"
  std::string split;    // "train" or "validation"
  double loss = 0;
};

struct TrainOptions {
  HUWindow window;
  int fold = -1;  // < 0: every case trains and nothing is held out
  int folds = 5;
  uint64_t split_seed = 0;
  std::string checkpoint_path;  // empty: no checkpoint written
  std::string loss_log_path;    // empty: no CSV written
  std::function<void(const std::string&)> progress;
};

struct TrainResult {
  SparseUNet<float> model;
  std::vector<LossLogRow> log;
  std::vector<int> steps_per_epoch;
  int64_t optimizer_steps = 0;
  double final_train_loss = 0;  // mean deep-supervised total of the last epoch
};

// Input tensor (normalized intensity) and aligned multilabel targets for one
// or more cases, case i at batch index i.
struct Sample {
  SparseTensor<float> input;
  SparseTensor<float> labels;
};
Sample MakeSample(const std::vector<const TrainingCase*>& cases, const HUWindow& window);

// Trains a fresh model. Throws InvalidArgument on an empty training set.
TrainResult TrainStage(const std::vector<TrainingCase>& cases, const TrainConfig& cfg,
                       const ModelConfig& model_cfg, const TrainOptions& opts = {});

void WriteLossLog(const std::string& path, const std::vector<LossLogRow>& rows);

}  // namespace sparseseg

#endif  // SPARSESEG_TRAIN_TRAINER_H_
