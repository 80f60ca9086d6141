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

#include "sparseseg/model/checkpoint.h"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <vector>

#include "sparseseg/common/errors.h"

namespace sparseseg {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host byte order");

namespace {

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

constexpr int kFormatVersion = 1;

}  // namespace

std::string CheckpointBase(const std::string& path) {
  for (const char* suffix : {".ckpt.json", ".ckpt.bin", ".ckpt"}) {
    if (EndsWith(path, suffix)) return path.substr(0, path.size() - std::char_traits<char>::length(suffix));
  }
  return path;
}

std::string CheckpointManifestPath(const std::string& path) {
  return CheckpointBase(path) + ".ckpt.json";
}

std::string CheckpointPayloadPath(const std::string& path) {
  return CheckpointBase(path) + ".ckpt.bin";
}

uint64_t Fnv1a64(const void* data, size_t size) {
  uint64_t h = 0xcbf29ce484222325ull;
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename T>
void SaveCheckpoint(const SparseUNet<T>& model, const std::string& path,
                    const nlohmann::json& metadata) {
  std::vector<float> payload;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    const Matrix<T>& v = p.var->value;
    tensors.push_back({{"name", p.name},
                       {"shape", {v.rows(), v.cols()}},
                       {"offset", payload.size()}});
    for (int64_t i = 0; i < v.size(); ++i) payload.push_back(static_cast<float>(v.data()[i]));
  }
  const size_t bytes = payload.size() * sizeof(float);
  const nlohmann::json manifest = {
      {"format_version", kFormatVersion},
      {"dtype", "f32"},
      {"config", ToJson(model.config())},
      {"tensors", tensors},
      {"payload_bytes", bytes},
      {"checksum_fnv1a64", Hex(Fnv1a64(payload.data(), bytes))},
      {"metadata", metadata}};
  const std::string bin_path = CheckpointPayloadPath(path);
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write checkpoint payload " + bin_path);
  bin.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(bytes));
  if (!bin) throw IoError("short write to " + bin_path);
  const std::string json_path = CheckpointManifestPath(path);
  std::ofstream js(json_path, std::ios::trunc);
  if (!js) throw IoError("cannot write checkpoint manifest " + json_path);
  js << manifest.dump(2) << "\n";
}

nlohmann::json ReadCheckpointManifest(const std::string& path) {
  const std::string json_path = CheckpointManifestPath(path);
  std::ifstream in(json_path);
  if (!in) throw IoError("checkpoint manifest not found: " + json_path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt checkpoint manifest " + json_path + ": " + e.what());
  }
}

template <typename T>
void LoadCheckpointInto(const SparseUNet<T>& model, const std::string& path) {
  const nlohmann::json manifest = ReadCheckpointManifest(path);
  const std::string bin_path = CheckpointPayloadPath(path);
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("checkpoint payload not found: " + bin_path);
  const std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion) {
      throw FormatError("unsupported checkpoint format version");
    }
    if (bytes.size() != manifest.at("payload_bytes").get<size_t>()) {
      throw ChecksumError("checkpoint payload " + bin_path + " has " + std::to_string(bytes.size()) +
                          " bytes, manifest records " +
                          std::to_string(manifest.at("payload_bytes").get<size_t>()));
    }
    if (Hex(Fnv1a64(bytes.data(), bytes.size())) != manifest.at("checksum_fnv1a64").get<std::string>()) {
      throw ChecksumError("checksum mismatch for " + bin_path);
    }
    const auto& tensors = manifest.at("tensors");
    const auto& params = model.parameters();
    const size_t n = std::max(tensors.size(), params.size());
    for (size_t i = 0; i < n; ++i) {
      if (i >= params.size()) {
        throw ShapeMismatch("checkpoint tensor '" + tensors[i].at("name").get<std::string>() +
                            "' has no counterpart in the model");
      }
      const auto& p = params[i];
      if (i >= tensors.size()) throw ShapeMismatch("checkpoint lacks tensor '" + p.name + "'");
      const auto& t = tensors[i];
      const auto name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<int64_t>>();
      if (name != p.name) {
        throw ShapeMismatch("tensor '" + p.name + "': checkpoint has '" + name + "' at this position");
      }
      if (shape.size() != 2 || shape[0] != p.var->value.rows() || shape[1] != p.var->value.cols()) {
        throw ShapeMismatch("tensor '" + p.name + "': checkpoint shape [" +
                            std::to_string(shape.empty() ? 0 : shape[0]) + ", " +
                            std::to_string(shape.size() < 2 ? 0 : shape[1]) + "] != model shape [" +
                            std::to_string(p.var->value.rows()) + ", " +
                            std::to_string(p.var->value.cols()) + "]");
      }
    }
    for (size_t i = 0; i < params.size(); ++i) {
      const size_t offset = tensors[i].at("offset").get<size_t>();
      Matrix<T>& v = params[i].var->value;
      if ((offset + static_cast<size_t>(v.size())) * sizeof(float) > bytes.size()) {
        throw ChecksumError("tensor '" + params[i].name + "' extends past the payload");
      }
      const auto* src = reinterpret_cast<const float*>(bytes.data()) + offset;
      for (int64_t k = 0; k < v.size(); ++k) v.data()[k] = static_cast<T>(src[k]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
  }
}

template <typename T>
SparseUNet<T> LoadCheckpoint(const std::string& path) {
  const nlohmann::json manifest = ReadCheckpointManifest(path);
  if (!manifest.contains("config")) throw FormatError("checkpoint manifest lacks a config");
  const SparseUNet<T> model = SparseUNet<T>::Build(ModelConfigFromJson(manifest.at("config")), 0);
  LoadCheckpointInto(model, path);
  return model;
}

template void SaveCheckpoint(const SparseUNet<float>&, const std::string&, const nlohmann::json&);
template void SaveCheckpoint(const SparseUNet<double>&, const std::string&, const nlohmann::json&);
template SparseUNet<float> LoadCheckpoint(const std::string&);
template SparseUNet<double> LoadCheckpoint(const std::string&);
template void LoadCheckpointInto(const SparseUNet<float>&, const std::string&);
template void LoadCheckpointInto(const SparseUNet<double>&, const std::string&);

}  // namespace sparseseg
