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

#ifndef SPARSESEG_TRAIN_CONFIG_H_
#define SPARSESEG_TRAIN_CONFIG_H_

#include <cstdint>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

namespace sparseseg {

// Magnitudes are drawn uniformly from [-max, max]. Rotations are in radians,
// translations in voxels, scale as a fraction. Probabilities are per draw.
struct AugmentParams {
  double affine_p = 1.0;
  double rot_xy_max = std::numbers::pi / 36.0;  // about the x and y axes
  double rot_z_max = std::numbers::pi / 8.0;
  double trans_xy_max = 30.0;
  double trans_z_max = 5.0;
  double scale_max = 0.15;
  double flip_p = 0.3;  // per axis
  double int_scale_p = 0.3;
  double int_scale_factor = 0.1;
  double int_shift_p = 0.3;
  double int_shift_offset = 5.0;
  double noise_p = 0.3;
  double noise_mean = 0.0;
  double noise_std = 1.0;
  double smooth_p = 0.3;
  double smooth_sigma_min = 0.25;
  double smooth_sigma_max = 1.5;

  // Every probability and magnitude zero.
  static AugmentParams None();
  void Validate() const;
  bool operator==(const AugmentParams&) const = default;
};

struct TrainConfig {
  double lr = 5e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double adam_eps = 1e-8;
  int batch_size = 1;
  int grad_accum = 8;
  int epochs = 500;
  int warmup_epochs = 1;
  int constant_epochs = 99;
  int cosine_epochs = 400;
  double dice_eps = 1e-5;
  uint64_t seed = 0;
  bool augment = true;
  AugmentParams augmentation;

  void Validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json ToJson(const AugmentParams& p);
nlohmann::json ToJson(const TrainConfig& c);
// Unknown keys are rejected; missing keys keep their defaults.
AugmentParams AugmentParamsFromJson(const nlohmann::json& j);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);
// Reads a file holding either a bare TrainConfig or a "train" section.
TrainConfig LoadTrainConfig(const std::string& path);

}  // namespace sparseseg

#endif  // SPARSESEG_TRAIN_CONFIG_H_
