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

#include "sparseseg/train/config.h"

#include <fstream>
#include <set>

#include "sparseseg/common/errors.h"

namespace sparseseg {
namespace {

void RejectUnknown(const nlohmann::json& j, const std::set<std::string>& keys,
                   const std::string& what) {
  if (!j.is_object()) throw FormatError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw FormatError(what + ": unknown key '" + key + "'");
  }
}

void CheckProbability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
}

void CheckNonNegative(double v, const char* name) {
  if (!(v >= 0.0)) throw InvalidArgument(std::string(name) + " must be non-negative");
}

}  // namespace

AugmentParams AugmentParams::None() {
  AugmentParams p;
  p.affine_p = p.rot_xy_max = p.rot_z_max = p.trans_xy_max = p.trans_z_max = p.scale_max = 0;
  p.flip_p = p.int_scale_p = p.int_scale_factor = p.int_shift_p = p.int_shift_offset = 0;
  p.noise_p = p.noise_std = p.smooth_p = 0;
  return p;
}

void AugmentParams::Validate() const {
  CheckProbability(affine_p, "affine_p");
  CheckProbability(flip_p, "flip_p");
  CheckProbability(int_scale_p, "int_scale_p");
  CheckProbability(int_shift_p, "int_shift_p");
  CheckProbability(noise_p, "noise_p");
  CheckProbability(smooth_p, "smooth_p");
  CheckNonNegative(rot_xy_max, "rot_xy_max");
  CheckNonNegative(rot_z_max, "rot_z_max");
  CheckNonNegative(trans_xy_max, "trans_xy_max");
  CheckNonNegative(trans_z_max, "trans_z_max");
  CheckNonNegative(int_scale_factor, "int_scale_factor");
  CheckNonNegative(int_shift_offset, "int_shift_offset");
  CheckNonNegative(noise_std, "noise_std");
  CheckNonNegative(smooth_sigma_min, "smooth_sigma_min");
  if (!(scale_max >= 0.0 && scale_max < 1.0)) throw InvalidArgument("scale_max must lie in [0, 1)");
  if (!(smooth_sigma_max >= smooth_sigma_min)) {
    throw InvalidArgument("smooth_sigma_max must be >= smooth_sigma_min");
  }
}

void TrainConfig::Validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("lr must be positive");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam_eps must be positive");
  if (!(dice_eps > 0.0)) throw InvalidArgument("dice_eps must be positive");
  if (batch_size < 1 || grad_accum < 1) throw InvalidArgument("batch_size and grad_accum must be >= 1");
  if (epochs < 1 || warmup_epochs < 0 || constant_epochs < 0 || cosine_epochs < 0) {
    throw InvalidArgument("epoch counts must be non-negative and epochs >= 1");
  }
  if (warmup_epochs + constant_epochs + cosine_epochs != epochs) {
    throw InvalidArgument("warmup_epochs + constant_epochs + cosine_epochs must equal epochs");
  }
  augmentation.Validate();
}

nlohmann::json ToJson(const AugmentParams& p) {
  return {{"affine_p", p.affine_p},
          {"rot_xy_max", p.rot_xy_max},
          {"rot_z_max", p.rot_z_max},
          {"trans_xy_max", p.trans_xy_max},
          {"trans_z_max", p.trans_z_max},
          {"scale_max", p.scale_max},
          {"flip_p", p.flip_p},
          {"int_scale_p", p.int_scale_p},
          {"int_scale_factor", p.int_scale_factor},
          {"int_shift_p", p.int_shift_p},
          {"int_shift_offset", p.int_shift_offset},
          {"noise_p", p.noise_p},
          {"noise_mean", p.noise_mean},
          {"noise_std", p.noise_std},
          {"smooth_p", p.smooth_p},
          {"smooth_sigma_min", p.smooth_sigma_min},
          {"smooth_sigma_max", p.smooth_sigma_max}};
}

nlohmann::json ToJson(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"betas", {c.beta1, c.beta2}},
          {"adam_eps", c.adam_eps},
          {"batch_size", c.batch_size},
          {"grad_accum", c.grad_accum},
          {"epochs", c.epochs},
          {"warmup_epochs", c.warmup_epochs},
          {"constant_epochs", c.constant_epochs},
          {"cosine_epochs", c.cosine_epochs},
          {"dice_eps", c.dice_eps},
          {"seed", c.seed},
          {"augment", c.augment},
          {"augmentation", ToJson(c.augmentation)}};
}

AugmentParams AugmentParamsFromJson(const nlohmann::json& j) {
  AugmentParams p;
  const nlohmann::json defaults = ToJson(p);
  std::set<std::string> keys;
  for (const auto& [key, value] : defaults.items()) keys.insert(key);
  RejectUnknown(j, keys, "augmentation config");
  try {
    p.affine_p = j.value("affine_p", p.affine_p);
    p.rot_xy_max = j.value("rot_xy_max", p.rot_xy_max);
    p.rot_z_max = j.value("rot_z_max", p.rot_z_max);
    p.trans_xy_max = j.value("trans_xy_max", p.trans_xy_max);
    p.trans_z_max = j.value("trans_z_max", p.trans_z_max);
    p.scale_max = j.value("scale_max", p.scale_max);
    p.flip_p = j.value("flip_p", p.flip_p);
    p.int_scale_p = j.value("int_scale_p", p.int_scale_p);
    p.int_scale_factor = j.value("int_scale_factor", p.int_scale_factor);
    p.int_shift_p = j.value("int_shift_p", p.int_shift_p);
    p.int_shift_offset = j.value("int_shift_offset", p.int_shift_offset);
    p.noise_p = j.value("noise_p", p.noise_p);
    p.noise_mean = j.value("noise_mean", p.noise_mean);
    p.noise_std = j.value("noise_std", p.noise_std);
    p.smooth_p = j.value("smooth_p", p.smooth_p);
    p.smooth_sigma_min = j.value("smooth_sigma_min", p.smooth_sigma_min);
    p.smooth_sigma_max = j.value("smooth_sigma_max", p.smooth_sigma_max);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("augmentation config: ") + e.what());
  }
  p.Validate();
  return p;
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j) {
  RejectUnknown(j,
                {"lr", "weight_decay", "betas", "adam_eps", "batch_size", "grad_accum", "epochs",
                 "warmup_epochs", "constant_epochs", "cosine_epochs", "dice_eps", "seed",
                 "augment", "augmentation"},
                "train config");
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    if (j.contains("betas")) {
      const auto& b = j.at("betas");
      if (!b.is_array() || b.size() != 2) throw FormatError("train config: betas must be [b1, b2]");
      c.beta1 = b[0].get<double>();
      c.beta2 = b[1].get<double>();
    }
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.grad_accum = j.value("grad_accum", c.grad_accum);
    c.epochs = j.value("epochs", c.epochs);
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.constant_epochs = j.value("constant_epochs", c.constant_epochs);
    c.cosine_epochs = j.value("cosine_epochs", c.cosine_epochs);
    c.dice_eps = j.value("dice_eps", c.dice_eps);
    c.seed = j.value("seed", c.seed);
    c.augment = j.value("augment", c.augment);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("train config: ") + e.what());
  }
  if (j.contains("augmentation")) c.augmentation = AugmentParamsFromJson(j.at("augmentation"));
  c.Validate();
  return c;
}

TrainConfig LoadTrainConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open train config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse " + path + ": " + e.what());
  }
  if (j.contains("train")) return TrainConfigFromJson(j.at("train"));
  if (j.contains("model")) return TrainConfig{};
  return TrainConfigFromJson(j);
}

}  // namespace sparseseg
