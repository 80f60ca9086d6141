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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "sparseseg/common/errors.h"
#include "sparseseg/volume/io.h"
#include "sparseseg/volume/multilabel.h"
#include "sparseseg/volume/resample.h"
#include "test_util.h"

namespace sparseseg {
namespace {

VoxelGrid RandomGrid(std::mt19937_64& rng, Index3 dims, Vec3 spacing) {
  std::normal_distribution<float> n(0.f, 200.f);
  std::vector<float> v(static_cast<size_t>(VoxelCount(dims)));
  for (auto& x : v) x = n(rng);
  return VoxelGrid(dims, spacing, {1.5, -2.0, 0.25}, VolumeKind::kIntensity, std::move(v));
}

void WriteNifti(const std::string& path, int16_t datatype, int16_t bitpix,
                const std::vector<char>& payload, float slope, float inter,
                const char* magic = "n+1") {
  std::vector<char> h(352, 0);
  auto put = [&](size_t off, auto v) { std::memcpy(h.data() + off, &v, sizeof(v)); };
  put(0, int32_t{348});
  const int16_t dim[8] = {3, 2, 2, 2, 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put(40 + 2 * i, dim[i]);
  put(70, datatype);
  put(72, bitpix);
  const float pixdim[8] = {1.f, 0.8f, 0.8f, 2.5f, 0.f, 0.f, 0.f, 0.f};
  for (int i = 0; i < 8; ++i) put(76 + 4 * i, pixdim[i]);
  put(108, 352.f);
  put(112, slope);
  put(116, inter);
  std::memcpy(h.data() + 344, magic, 4);
  std::ofstream out(path, std::ios::binary);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

TEST(VolumeIo, LoadsMinimalFile) {
  const auto dir = testing::TempDir("io_min");
  const std::string path = (dir / "a.rvol").string();
  {
    std::ofstream(path + ".json") << R"({"dims":[2,2,1],"spacing_mm":[1,1,1],)"
                                     R"("origin_mm":[0,0,0],"dtype":"f32","kind":"hu","order":"x-fastest"})";
    const float v[4] = {1.f, -2.f, 3.5f, 100.f};
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(v), sizeof(v));
  }
  const VoxelGrid g = LoadVolume(path);
  EXPECT_EQ(g.size(), 4);
  EXPECT_EQ(g.at(1, 1, 0), 100.f);
  EXPECT_EQ(g.kind(), VolumeKind::kIntensity);
}

TEST(VolumeIo, RejectsPayloadSizeMismatch) {
  const auto dir = testing::TempDir("io_mismatch");
  const std::string path = (dir / "a.rvol").string();
  std::ofstream(path + ".json") << R"({"dims":[2,2,2],"spacing_mm":[1,1,1],)"
                                   R"("origin_mm":[0,0,0],"dtype":"f32","kind":"hu"})";
  const float v[4] = {1.f, 2.f, 3.f, 4.f};
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(v), sizeof(v));
  EXPECT_THROW(LoadVolume(path), FormatError);
}

TEST(VolumeIo, MissingOrCorruptSidecar) {
  const auto dir = testing::TempDir("io_corrupt");
  const std::string path = (dir / "a.rvol").string();
  std::ofstream(path, std::ios::binary) << "abcd";
  EXPECT_THROW(LoadVolume(path), IoError);
  std::ofstream(path + ".json") << "{not json";
  EXPECT_THROW(LoadVolume(path), FormatError);
}

TEST(VolumeIo, RoundTripIsBitExact) {
  std::mt19937_64 rng(7);
  const auto dir = testing::TempDir("io_roundtrip");
  for (int trial = 0; trial < 5; ++trial) {
    const VoxelGrid g = RandomGrid(rng, {3 + trial, 4, 5}, {0.78, 0.78, 2.5});
    const std::string path = (dir / ("g" + std::to_string(trial) + ".rvol")).string();
    StoreVolume(g, path);
    const VoxelGrid back = LoadVolume(path);
    EXPECT_EQ(back.dims(), g.dims());
    EXPECT_EQ(back.spacing(), g.spacing());
    EXPECT_EQ(back.origin(), g.origin());
    ASSERT_EQ(back.values().size(), g.values().size());
    EXPECT_EQ(std::memcmp(back.values().data(), g.values().data(), g.values().size() * 4), 0);
  }
}

TEST(VolumeIo, LabelKindRecorded) {
  const auto dir = testing::TempDir("io_label");
  const std::string path = (dir / "l.rvol").string();
  const VoxelGrid labels({2, 2, 1}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kLabel, {0, 1, 2, 3});
  StoreVolume(labels, path);
  std::ifstream in(path + ".json");
  const auto header = nlohmann::json::parse(in);
  EXPECT_EQ(header["kind"], "label");
  EXPECT_EQ(header["dtype"], "u8");
  EXPECT_EQ(LoadVolume(path).values(), labels.values());
}

TEST(VolumeIo, PayloadLengthMatchesDims) {
  const auto dir = testing::TempDir("io_len");
  const std::string path = (dir / "big.rvol").string();
  StoreVolume(VoxelGrid::Filled({201, 201, 151}, {1.99, 1.99, 1.99}, {0, 0, 0},
                                VolumeKind::kIntensity, -1000.f),
              path);
  EXPECT_EQ(std::filesystem::file_size(path), 201ull * 201 * 151 * 4);
}

TEST(Nifti, ReadsHandcraftedInt16) {
  const auto dir = testing::TempDir("nifti");
  const std::string path = (dir / "a.nii").string();
  std::vector<char> payload(16);
  for (int16_t i = 0; i < 8; ++i) {
    const int16_t v = static_cast<int16_t>(i * 10 - 30);
    std::memcpy(payload.data() + 2 * i, &v, 2);
  }
  WriteNifti(path, 4, 16, payload, 0.f, 0.f);
  const VoxelGrid g = ReadNifti(path);
  EXPECT_EQ(g.dims(), (Index3{2, 2, 2}));
  EXPECT_NEAR(g.spacing()[2], 2.5, 1e-6);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(g[i], static_cast<float>(i * 10 - 30));
}

TEST(Nifti, AppliesSlopeAndIntercept) {
  const auto dir = testing::TempDir("nifti_scale");
  const std::string path = (dir / "a.nii").string();
  std::vector<char> payload(16, 0);
  const int16_t raw = 3;
  std::memcpy(payload.data(), &raw, 2);
  WriteNifti(path, 4, 16, payload, 2.f, 1.f);
  EXPECT_EQ(ReadNifti(path)[0], 7.f);
}

TEST(Nifti, RejectsBadInputs) {
  const auto dir = testing::TempDir("nifti_bad");
  const std::string bad_magic = (dir / "m.nii").string();
  WriteNifti(bad_magic, 4, 16, std::vector<char>(16, 0), 0.f, 0.f, "ni1");
  EXPECT_THROW(ReadNifti(bad_magic), FormatError);
  const std::string bad_type = (dir / "t.nii").string();
  WriteNifti(bad_type, 64, 64, std::vector<char>(64, 0), 0.f, 0.f);
  EXPECT_THROW(ReadNifti(bad_type), FormatError);
  const std::string gz = (dir / "c.nii").string();
  std::ofstream(gz, std::ios::binary) << "\x1f\x8b\x08\x00garbage";
  EXPECT_THROW(ReadNifti(gz), FormatError);
}

TEST(Resample, OutputDimsRule) {
  EXPECT_EQ(ResampledDims({512, 512, 100}, {0.78, 0.78, 3.0}, {1.99, 1.99, 1.99}),
            (Index3{201, 201, 151}));
  EXPECT_EQ(ResampledDims({1, 1, 1}, {0.5, 0.5, 0.5}, {10, 10, 10}), (Index3{1, 1, 1}));
  EXPECT_THROW(ResampledDims({4, 4, 4}, {1, 1, 1}, {0, 1, 1}), InvalidArgument);
}

TEST(Resample, IdentityWhenSpacingUnchanged) {
  std::mt19937_64 rng(3);
  const VoxelGrid g = RandomGrid(rng, {7, 5, 4}, {0.78, 0.9, 2.0});
  const VoxelGrid r = Resample(g, g.spacing(), InterpolationMode::kTrilinear);
  EXPECT_EQ(r.values(), g.values());
}

TEST(Resample, ConstantStaysConstant) {
  const VoxelGrid g = VoxelGrid::Filled({9, 8, 7}, {0.78, 0.78, 3.0}, {0, 0, 0},
                                        VolumeKind::kIntensity, 42.5f);
  for (const Vec3& t : {Vec3{1.99, 1.99, 1.99}, Vec3{0.5, 0.7, 1.1}}) {
    const VoxelGrid r = Resample(g, t, InterpolationMode::kTrilinear);
    for (float v : r.values()) EXPECT_FLOAT_EQ(v, 42.5f);
  }
}

TEST(Resample, NearestKeepsLabelValueSetAndExtent) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> code(0, 3);
  std::uniform_real_distribution<double> sp(0.4, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index3 dims{3 + trial % 5, 4 + trial % 3, 2 + trial % 7};
    std::vector<float> v(static_cast<size_t>(VoxelCount(dims)));
    std::set<float> in_values;
    for (auto& x : v) {
      x = static_cast<float>(code(rng) == 3 ? 3 : code(rng) % 2);
      in_values.insert(x);
    }
    const Vec3 spacing{sp(rng), sp(rng), sp(rng)};
    const VoxelGrid g(dims, spacing, {0, 0, 0}, VolumeKind::kLabel, v);
    const Vec3 target{sp(rng), sp(rng), sp(rng)};
    const VoxelGrid r = Resample(g, target, InterpolationMode::kNearest);
    for (float x : r.values()) EXPECT_TRUE(in_values.count(x));
    for (int a = 0; a < 3; ++a) {
      const double in_extent = dims[a] * spacing[a];
      const double out_extent = r.dims()[a] * target[a];
      if (in_extent >= target[a]) {
        EXPECT_LE(std::abs(in_extent - out_extent), target[a] * 0.5 + 1e-9);
      }
    }
  }
  const VoxelGrid labels({2, 1, 1}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kLabel, {0, 1});
  EXPECT_THROW(Resample(labels, {0.5, 1, 1}, InterpolationMode::kTrilinear), InvalidArgument);
}

TEST(Resample, TrilinearMidpoint) {
  const VoxelGrid g({2, 1, 1}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kIntensity, {0.f, 10.f});
  // Upsampling by 2: centres at input index -0.25, 0.25, 0.75, 1.25.
  const VoxelGrid r = Resample(g, {0.5, 1, 1}, InterpolationMode::kTrilinear);
  ASSERT_EQ(r.dims()[0], 4);
  EXPECT_FLOAT_EQ(r[0], 0.f);
  EXPECT_FLOAT_EQ(r[1], 2.5f);
  EXPECT_FLOAT_EQ(r[2], 7.5f);
  EXPECT_FLOAT_EQ(r[3], 10.f);
}

TEST(MultiLabel, ChannelDefinitions) {
  const VoxelGrid labels({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kLabel, {0, 1, 2, 3});
  const MultiLabelMask m = MakeMultiLabel(labels);
  const int expected[4][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 1}, {1, 1, 0}};
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 3; ++c) EXPECT_EQ(m.channels[c][i], expected[i][c]) << i << "," << c;
  }
  const VoxelGrid hu({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kIntensity, {5.f});
  EXPECT_THROW(MakeMultiLabel(hu), InvalidArgument);
  EXPECT_THROW(VoxelGrid({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kLabel, {4.f}),
               InvalidArgument);
}

TEST(MultiLabel, NestingHoldsAndCodesRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> code(0, 3);
  std::vector<float> v(600);
  for (auto& x : v) x = static_cast<float>(code(rng));
  const VoxelGrid labels({10, 6, 10}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kLabel, v);
  const MultiLabelMask m = MakeMultiLabel(labels);
  for (size_t i = 0; i < v.size(); ++i) {
    EXPECT_LE(m.channels[2][i], m.channels[1][i]);
    EXPECT_LE(m.channels[1][i], m.channels[0][i]);
  }
  EXPECT_EQ(MultiLabelToCodes(m, labels).values(), labels.values());
}

}  // namespace
}  // namespace sparseseg
