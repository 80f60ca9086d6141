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

#ifndef SPARSESEG_MODEL_CHECKPOINT_H_
#define SPARSESEG_MODEL_CHECKPOINT_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "sparseseg/model/unet.h"

namespace sparseseg {

// A checkpoint is the pair `<base>.ckpt.json` (manifest: config, tensor table,
// checksum) + `<base>.ckpt.bin` (little-endian float32 payload). Any of
// `<base>`, `<base>.ckpt`, `<base>.ckpt.json` or `<base>.ckpt.bin` names it.
std::string CheckpointBase(const std::string& path);
std::string CheckpointManifestPath(const std::string& path);
std::string CheckpointPayloadPath(const std::string& path);

uint64_t Fnv1a64(const void* data, size_t size);

// `metadata` is stored verbatim under "metadata".
template <typename T>
void SaveCheckpoint(const SparseUNet<T>& model, const std::string& path,
                     const nlohmann::json& metadata = nlohmann::json::object());

// Rebuilds the model from the stored config.
template <typename T>
SparseUNet<T> LoadCheckpoint(const std::string& path);

// Loads into an existing model. Throws ShapeMismatch naming the first tensor
// whose name or shape disagrees, ChecksumError on a damaged payload.
template <typename T>
void LoadCheckpointInto(const SparseUNet<T>& model, const std::string& path);

nlohmann::json ReadCheckpointManifest(const std::string& path);

}  // namespace sparseseg

#endif  // SPARSESEG_MODEL_CHECKPOINT_H_
