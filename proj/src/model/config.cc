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

#include "sparseseg/model/config.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "sparseseg/common/errors.h"

namespace sparseseg {

int ModelConfig::built_heads() const {
  const int decoder_levels = std::max(1, stages() - 1);
  return head_placement == HeadPlacement::kEveryDecoderStage ? decoder_levels
                                                             : std::min(ds_heads, decoder_levels);
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw InvalidArgument("model config: " + msg); };
  if (in_channels < 1) fail("in_channels must be >= 1");
  if (stage_widths.empty()) fail("stage_widths must not be empty");
  if (stage_widths.size() != stage_depths.size()) {
    fail("stage_widths and stage_depths differ in length");
  }
  for (int w : stage_widths) {
    if (w < 1) fail("stage widths must be positive");
  }
  for (int d : stage_depths) {
    if (d < 0) fail("stage depths must be non-negative");
  }
  if (decoder_blocks_per_stage < 0) fail("decoder_blocks_per_stage must be >= 0");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) fail("conv_kernel must be odd");
  if (head_kernel < 1 || head_kernel % 2 == 0) fail("head_kernel must be odd");
  if (down_kernel < 2) fail("down_kernel must be >= 2");
  if (num_classes != 3) fail("num_classes must be 3");
  if (mlp_expansion < 1) fail("mlp_expansion must be >= 1");
  if (!(norm_eps > 0.0)) fail("norm_eps must be positive");
  if (ds_heads < 1) fail("ds_heads must be >= 1");
  if (ds_heads > std::max(1, stages() - 1)) {
    fail("ds_heads = " + std::to_string(ds_heads) + " exceeds the " +
         std::to_string(std::max(1, stages() - 1)) + " available decoder outputs");
  }
}

namespace {

const char* PlacementName(HeadPlacement p) {
  return p == HeadPlacement::kEveryDecoderStage ? "every_decoder_stage" : "loss_heads_only";
}

}  // namespace

nlohmann::json ToJson(const ModelConfig& c) {
  return {{"in_channels", c.in_channels},
          {"stage_widths", c.stage_widths},
          {"stage_depths", c.stage_depths},
          {"decoder_blocks_per_stage", c.decoder_blocks_per_stage},
          {"conv_kernel", c.conv_kernel},
          {"down_kernel", c.down_kernel},
          {"num_classes", c.num_classes},
          {"mlp_expansion", c.mlp_expansion},
          {"ds_heads", c.ds_heads},
          {"head_placement", PlacementName(c.head_placement)},
          {"head_kernel", c.head_kernel},
          {"stem_bias", c.stem_bias},
          {"head_bias", c.head_bias},
          {"norm_eps", c.norm_eps}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("model config must be a JSON object");
  static const std::set<std::string> kKeys = {
      "in_channels", "stage_widths", "stage_depths", "decoder_blocks_per_stage",
      "conv_kernel", "down_kernel", "num_classes", "mlp_expansion", "ds_heads",
      "head_placement", "head_kernel", "stem_bias", "head_bias", "norm_eps"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw FormatError("model config: unknown key '" + key + "'");
  }
  ModelConfig c;
  try {
    c.in_channels = j.value("in_channels", c.in_channels);
    c.stage_widths = j.value("stage_widths", c.stage_widths);
    c.stage_depths = j.value("stage_depths", c.stage_depths);
    c.decoder_blocks_per_stage = j.value("decoder_blocks_per_stage", c.decoder_blocks_per_stage);
    c.conv_kernel = j.value("conv_kernel", c.conv_kernel);
    c.down_kernel = j.value("down_kernel", c.down_kernel);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.mlp_expansion = j.value("mlp_expansion", c.mlp_expansion);
    c.ds_heads = j.value("ds_heads", c.ds_heads);
    c.head_kernel = j.value("head_kernel", c.head_kernel);
    c.stem_bias = j.value("stem_bias", c.stem_bias);
    c.head_bias = j.value("head_bias", c.head_bias);
    c.norm_eps = j.value("norm_eps", c.norm_eps);
    const std::string placement = j.value("head_placement", std::string(PlacementName(c.head_placement)));
    if (placement == "every_decoder_stage") {
      c.head_placement = HeadPlacement::kEveryDecoderStage;
    } else if (placement == "loss_heads_only") {
      c.head_placement = HeadPlacement::kLossHeadsOnly;
    } else {
      throw FormatError("model config: unknown head_placement '" + placement + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  c.Validate();
  return c;
}

ModelConfig LoadModelConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("cannot parse " + path + ": " + e.what());
  }
  // Accept either a bare model config or a file with a "model" section.
  return ModelConfigFromJson(j.contains("model") ? j.at("model") : j);
}

}  // namespace sparseseg
