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

#ifndef SPARSESEG_MODEL_CONFIG_H_
#define SPARSESEG_MODEL_CONFIG_H_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sparseseg {

enum class HeadPlacement {
  kEveryDecoderStage,  // one head per decoder output (strides 1 .. 2^(S-2))
  kLossHeadsOnly,      // only the ds_heads finest heads are built
};

struct ModelConfig {
  int in_channels = 1;
  std::vector<int> stage_widths{16, 32, 64, 128, 256, 512};
  std::vector<int> stage_depths{2, 4, 4, 8, 8, 8};
  int decoder_blocks_per_stage = 2;
  int conv_kernel = 3;
  int down_kernel = 2;  // kernel and stride of the down/up-sampling convs
  int num_classes = 3;
  int mlp_expansion = 4;
  int ds_heads = 4;
  HeadPlacement head_placement = HeadPlacement::kEveryDecoderStage;
  int head_kernel = 1;
  bool stem_bias = false;
  bool head_bias = false;
  double norm_eps = 1e-6;

  int stages() const { return static_cast<int>(stage_widths.size()); }
  // Number of classification heads that exist (and carry parameters).
  int built_heads() const;
  // Throws InvalidArgument describing the first violated constraint.
  void Validate() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json ToJson(const ModelConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig ModelConfigFromJson(const nlohmann::json& j);
ModelConfig LoadModelConfig(const std::string& path);

}  // namespace sparseseg

#endif  // SPARSESEG_MODEL_CONFIG_H_
