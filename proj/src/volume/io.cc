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

#include "sparseseg/volume/io.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "sparseseg/common/errors.h"

namespace sparseseg {
namespace {

static_assert(std::endian::native == std::endian::little,
              "payload I/O assumes a little-endian host");

using nlohmann::json;

std::vector<char> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::string& path, const char* data, size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed for " + path);
}

template <typename T>
T ReadScalar(const std::vector<char>& bytes, size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

Index3 ToIndex3(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3) {
    throw FormatError(std::string("sidecar field '") + field +
                      "' must be a 3-element array");
  }
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

Vec3 ToVec3(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3) {
    throw FormatError(std::string("sidecar field '") + field +
                      "' must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

VoxelGrid LoadVolume(const std::string& path) {
  json header;
  {
    std::ifstream in(path + ".json");
    if (!in) throw IoError("missing sidecar header " + path + ".json");
    try {
      in >> header;
    } catch (const json::exception& e) {
      throw FormatError("corrupt sidecar " + path + ".json: " + e.what());
    }
  }
  Index3 dims;
  Vec3 spacing, origin;
  std::string dtype, kind, order;
  try {
    dims = ToIndex3(header.at("dims"), "dims");
    spacing = ToVec3(header.at("spacing_mm"), "spacing_mm");
    origin = ToVec3(header.at("origin_mm"), "origin_mm");
    dtype = header.at("dtype").get<std::string>();
    kind = header.at("kind").get<std::string>();
    order = header.value("order", std::string("x-fastest"));
  } catch (const json::exception& e) {
    throw FormatError("corrupt sidecar " + path + ".json: " + e.what());
  }
  if (order != "x-fastest") throw FormatError("unsupported order " + order);
  if (kind != "hu" && kind != "label") throw FormatError("unknown kind " + kind);
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0) {
    throw FormatError("non-positive dims in " + path + ".json");
  }
  const auto bytes = ReadFileBytes(path);
  const auto count = static_cast<size_t>(VoxelCount(dims));
  std::vector<float> values(count);
  if (dtype == "f32") {
    if (bytes.size() != count * 4) {
      throw FormatError("payload size mismatch for " + path + ": expected " +
                        std::to_string(count * 4) + " bytes, found " +
                        std::to_string(bytes.size()));
    }
    std::memcpy(values.data(), bytes.data(), count * 4);
  } else if (dtype == "u8") {
    if (bytes.size() != count) {
      throw FormatError("payload size mismatch for " + path + ": expected " +
                        std::to_string(count) + " bytes, found " +
                        std::to_string(bytes.size()));
    }
    for (size_t i = 0; i < count; ++i) {
      values[i] = static_cast<float>(static_cast<uint8_t>(bytes[i]));
    }
  } else {
    throw FormatError("unsupported dtype " + dtype);
  }
  return VoxelGrid(dims, spacing, origin,
                   kind == "label" ? VolumeKind::kLabel : VolumeKind::kIntensity,
                   std::move(values));
}

void StoreVolume(const VoxelGrid& grid, const std::string& path) {
  const bool label = grid.kind() == VolumeKind::kLabel;
  json header = {
      {"dims", grid.dims()},
      {"spacing_mm", grid.spacing()},
      {"origin_mm", grid.origin()},
      {"dtype", label ? "u8" : "f32"},
      {"kind", label ? "label" : "hu"},
      {"order", "x-fastest"},
  };
  if (label) {
    std::vector<char> payload(grid.values().size());
    for (size_t i = 0; i < payload.size(); ++i) {
      payload[i] = static_cast<char>(static_cast<uint8_t>(grid.values()[i]));
    }
    WriteFileBytes(path, payload.data(), payload.size());
  } else {
    WriteFileBytes(path, reinterpret_cast<const char*>(grid.values().data()),
                   grid.values().size() * sizeof(float));
  }
  const std::string text = header.dump(2) + "\n";
  WriteFileBytes(path + ".json", text.data(), text.size());
}

VoxelGrid ReadNifti(const std::string& path, VolumeKind kind) {
  const auto bytes = ReadFileBytes(path);
  if (bytes.size() >= 2 && static_cast<uint8_t>(bytes[0]) == 0x1f &&
      static_cast<uint8_t>(bytes[1]) == 0x8b) {
    throw FormatError(path + ": compressed NIfTI is not supported");
  }
  if (bytes.size() < 348) throw FormatError(path + ": truncated NIfTI header");
  if (ReadScalar<int32_t>(bytes, 0) != 348) {
    throw FormatError(path + ": sizeof_hdr != 348 (big-endian or not NIfTI-1)");
  }
  if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0) {
    throw FormatError(path + ": magic number mismatch (expected \"n+1\")");
  }
  int16_t dim[8];
  float pixdim[8];
  for (int i = 0; i < 8; ++i) {
    dim[i] = ReadScalar<int16_t>(bytes, 40 + 2 * i);
    pixdim[i] = ReadScalar<float>(bytes, 76 + 4 * i);
  }
  if (dim[0] < 3 || dim[0] > 7) throw FormatError(path + ": bad dim[0]");
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[i] > 1) throw FormatError(path + ": only single-frame volumes");
  }
  const int16_t datatype = ReadScalar<int16_t>(bytes, 70);
  const float vox_offset = ReadScalar<float>(bytes, 108);
  const float slope = ReadScalar<float>(bytes, 112);
  const float inter = ReadScalar<float>(bytes, 116);
  const Vec3 origin = {ReadScalar<float>(bytes, 268),
                       ReadScalar<float>(bytes, 272),
                       ReadScalar<float>(bytes, 276)};
  const Index3 dims = {dim[1], dim[2], dim[3]};
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0) {
    throw FormatError(path + ": non-positive dims");
  }
  const Vec3 spacing = {std::fabs(pixdim[1]), std::fabs(pixdim[2]),
                        std::fabs(pixdim[3])};
  size_t elem = 0;
  switch (datatype) {
    case 2: elem = 1; break;   // uint8
    case 4: elem = 2; break;   // int16
    case 16: elem = 4; break;  // float32
    default:
      throw FormatError(path + ": unsupported NIfTI datatype " +
                        std::to_string(datatype));
  }
  const auto count = static_cast<size_t>(VoxelCount(dims));
  const auto offset = static_cast<size_t>(vox_offset < 352.f ? 352.f : vox_offset);
  if (bytes.size() < offset + count * elem) {
    throw FormatError(path + ": payload shorter than dims imply");
  }
  const bool scale = slope != 0.f && std::isfinite(slope);
  std::vector<float> values(count);
  for (size_t i = 0; i < count; ++i) {
    const size_t at = offset + i * elem;
    double raw = 0.0;
    switch (datatype) {
      case 2: raw = static_cast<uint8_t>(bytes[at]); break;
      case 4: raw = ReadScalar<int16_t>(bytes, at); break;
      default: raw = ReadScalar<float>(bytes, at); break;
    }
    values[i] = static_cast<float>(scale ? raw * slope + inter : raw);
  }
  return VoxelGrid(dims, spacing, origin, kind, std::move(values));
}

VoxelGrid ReadAnyVolume(const std::string& path, VolumeKind nifti_kind) {
  if (EndsWith(path, ".nii")) return ReadNifti(path, nifti_kind);
  if (EndsWith(path, ".nii.gz")) {
    throw FormatError(path + ": compressed NIfTI is not supported");
  }
  return LoadVolume(path);
}

BinaryVolume LoadMask(const std::string& path) {
  const VoxelGrid grid = LoadVolume(path);
  BinaryVolume mask(grid.dims());
  for (int64_t i = 0; i < grid.size(); ++i) {
    mask.values[static_cast<size_t>(i)] = grid[i] != 0.f ? 1 : 0;
  }
  return mask;
}

void StoreMask(const BinaryVolume& mask, const VoxelGrid& geometry,
               const std::string& path) {
  if (mask.dims != geometry.dims()) {
    throw ShapeMismatch("mask dims differ from geometry dims");
  }
  std::vector<float> values(mask.values.begin(), mask.values.end());
  StoreVolume(VoxelGrid(mask.dims, geometry.spacing(), geometry.origin(),
                        VolumeKind::kLabel, std::move(values)),
              path);
}

}  // namespace sparseseg
