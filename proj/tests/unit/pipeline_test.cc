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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sparseseg/common/errors.h"
#include "sparseseg/pipeline/metrics.h"
#include "sparseseg/pipeline/phantom.h"
#include "sparseseg/pipeline/pipeline.h"
#include "sparseseg/volume/multilabel.h"
#include "test_util.h"

namespace sparseseg {
namespace {

BinaryVolume RandomMask(std::mt19937_64& rng, const Index3& d, double occupancy) {
  std::bernoulli_distribution keep(occupancy);
  BinaryVolume m(d);
  for (auto& v : m.values) v = keep(rng) ? 1 : 0;
  return m;
}

SparseUNet<float> TinyModel(uint64_t seed = 1) {
  ModelConfig c;
  c.stage_widths = {4, 8};
  c.stage_depths = {1, 1};
  c.decoder_blocks_per_stage = 1;
  c.ds_heads = 1;
  return SparseUNet<float>::Build(c, seed);
}

// ---- Percentiles and HU window ---------------------------------------------

TEST(Percentile, MatchesSortOracleOnRange) {
  std::vector<double> v;
  for (int i = 1000; i >= 1; --i) v.push_back(i);
  const HUWindow w = ComputePercentileRange(v, 0.5, 99.5);
  EXPECT_EQ(w.lo, oracles::PercentileBySort(v, 0.5));
  EXPECT_EQ(w.hi, oracles::PercentileBySort(v, 99.5));
  EXPECT_DOUBLE_EQ(w.lo, 1.0 + 0.005 * 999);
}

TEST(Percentile, MatchesSortOracleOnRandomArrays) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(50, 80);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng() % 500);
    for (double& x : v) x = n(rng);
    for (double pct : {0.0, 0.5, 37.2, 99.5, 100.0}) {
      EXPECT_EQ(Percentile(v, pct), oracles::PercentileBySort(v, pct));
    }
  }
}

TEST(Percentile, DegenerateAndEmptyStreamsThrow) {
  const std::vector<double> constant(10, 7.0), empty;
  EXPECT_THROW(ComputePercentileRange(constant), InvalidArgument);
  EXPECT_THROW(ComputePercentileRange(empty), InvalidArgument);
}

TEST(HuWindow, ClosedIntervalMembership) {
  const HUWindow w;
  const auto g = VoxelGrid({4, 1, 1}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kIntensity,
                           {100.f, -500.f, 283.2f, -53.4f});
  const BinaryVolume m = ApplyHuWindow(g, w);
  EXPECT_EQ(m.values, (std::vector<uint8_t>{1, 0, 1, 1}));
  EXPECT_EQ(w.lo, -53.4);
  EXPECT_EQ(w.hi, 283.2);
}

TEST(HuWindow, RetainedFractionIsExactCount) {
  const Phantom p = MakePhantom(PhantomParams{}, 3);
  const HUWindow w{0.0, 150.0};
  const BinaryVolume m = ApplyHuWindow(p.image, w);
  int64_t inside = 0;
  for (float v : p.image.values()) inside += (v >= 0.f && v <= 150.f) ? 1 : 0;
  EXPECT_EQ(m.Count(), inside);
  const auto st = SparsifyNormalized<float>(p.image, m, w);
  EXPECT_EQ(st.size(), inside);
}

TEST(Normalize, EndpointsMidpointAndInverse) {
  const HUWindow w{-53.4, 283.2};
  EXPECT_DOUBLE_EQ(NormalizeIntensity(w.lo, w), -1.0);
  EXPECT_DOUBLE_EQ(NormalizeIntensity(w.hi, w), 1.0);
  EXPECT_NEAR(NormalizeIntensity((w.lo + w.hi) / 2, w), 0.0, 1e-15);
  for (double hu : {-53.4, 0.0, 17.5, 100.0, 283.2}) {
    EXPECT_NEAR(DenormalizeIntensity(NormalizeIntensity(hu, w), w), hu, 1e-6);
  }
  EXPECT_EQ(NormalizeIntensity(-1000, w), -1.0);
  EXPECT_EQ(NormalizeIntensity(1000, w), 1.0);
}

// ---- ROI prediction ------------------------------------------------------------

TEST(PredictRoi, MaxChannelAboveThreshold) {
  const CoordinateSet coords({{0, 0, 0, 0}, {0, 1, 0, 0}, {0, 2, 0, 0}}, {1, 1, 1});
  Matrix<float> p(3, 3);
  const float rows[3][3] = {{0.05f, 0.11f, 0.02f}, {0.09f, 0.09f, 0.09f}, {0.25f, 0.f, 0.f}};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p(r, c) = rows[r][c];
  }
  EXPECT_EQ(RoiFromProbabilities(coords, p, {3, 1, 1}, 0.1).values, (std::vector<uint8_t>{1, 0, 1}));
  EXPECT_EQ(RoiFromProbabilities(coords, p, {3, 1, 1}, 0.0).values, (std::vector<uint8_t>{1, 1, 1}));
  // Strict comparison: a probability equal to the threshold is dropped.
  EXPECT_EQ(RoiFromProbabilities(coords, p, {3, 1, 1}, 0.25).values, (std::vector<uint8_t>{0, 0, 0}));
}

TEST(PredictRoi, ThresholdZeroKeepsEveryActiveVoxel) {
  std::mt19937_64 rng(4);
  const auto coords = testing::RandomCoords(rng, {8, 8, 8}, 0.3);
  const auto st = MakeSparseTensor(coords, testing::RandomMatrix<float>(rng, static_cast<int64_t>(coords.size()), 1));
  const auto model = TinyModel();
  const BinaryVolume roi = PredictRoi(model, st, {8, 8, 8}, 0.0);
  EXPECT_EQ(roi.Count(), static_cast<int64_t>(coords.size()));
}

// ---- Dilation ------------------------------------------------------------------

TEST(Dilate, EmptyStaysEmpty) { EXPECT_EQ(Dilate(BinaryVolume({9, 9, 9}), 11).Count(), 0); }

TEST(Dilate, SingletonMatchesBruteForceBall) {
  BinaryVolume m({21, 21, 21});
  m.at(10, 10, 10) = 1;
  const BinaryVolume d = Dilate(m, 11);
  EXPECT_EQ(d.Count(), oracles::BallLatticeCount(5));
  for (int z = 0; z < 21; ++z) {
    for (int y = 0; y < 21; ++y) {
      for (int x = 0; x < 21; ++x) {
        const double r2 = ((x - 10) * (x - 10) + (y - 10) * (y - 10) + (z - 10) * (z - 10)) / 25.0;
        EXPECT_EQ(d.at(x, y, z) != 0, r2 <= 1.0);
      }
    }
  }
}

TEST(Dilate, ExtensiveMonotoneAndTranslationEquivariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const BinaryVolume b = RandomMask(rng, {16, 16, 16}, 0.02);
    BinaryVolume a = b;
    for (auto& v : a.values) v = v && (rng() % 2);
    const BinaryVolume da = Dilate(a, 5), db = Dilate(b, 5);
    for (size_t i = 0; i < b.values.size(); ++i) {
      if (b.values[i]) {
        EXPECT_TRUE(db.values[i]);
      }
      if (da.values[i]) {
        EXPECT_TRUE(db.values[i]);
      }
    }
  }
  BinaryVolume one({20, 20, 20}), shifted({20, 20, 20});
  one.at(8, 8, 8) = 1;
  shifted.at(10, 9, 8) = 1;
  const auto d1 = Dilate(one, 7), d2 = Dilate(shifted, 7);
  for (int z = 0; z < 20; ++z) {
    for (int y = 0; y < 19; ++y) {
      for (int x = 0; x < 18; ++x) EXPECT_EQ(d1.at(x, y, z), d2.at(x + 2, y + 1, z));
    }
  }
  EXPECT_THROW(Dilate(one, 4), InvalidArgument);
}

TEST(Dilate, ClipsAtGridBoundary) {
  BinaryVolume m({4, 4, 4});
  m.at(0, 0, 0) = 1;
  const auto d = Dilate(m, 3);
  EXPECT_EQ(d.Count(), 4);  // itself plus three in-bounds face neighbours
}

// ---- Connected components ---------------------------------------------------------

TEST(Components, DiagonalPairDependsOnConnectivity) {
  BinaryVolume m({2, 2, 2});
  m.at(0, 0, 0) = m.at(1, 1, 1) = 1;
  EXPECT_EQ(ConnectedComponents(m, 26).size(), 1u);
  EXPECT_EQ(ConnectedComponents(m, 6).size(), 2u);
  EXPECT_THROW(ConnectedComponents(m, 18), InvalidArgument);
}

TEST(Components, TwoBlobsSizesAndOrder) {
  BinaryVolume m({20, 10, 10});
  for (int z = 1; z < 3; ++z) {
    for (int y = 1; y < 3; ++y) {
      for (int x = 1; x < 3; ++x) m.at(x, y, z) = 1;  // 8 voxels, found first
    }
  }
  for (int z = 4; z < 7; ++z) {
    for (int y = 4; y < 7; ++y) {
      for (int x = 12; x < 15; ++x) m.at(x, y, z) = 1;  // 27 voxels
    }
  }
  const auto comps = ConnectedComponents(m, 26);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0].size(), 27);
  EXPECT_EQ(comps[1].size(), 8);
  EXPECT_EQ(comps[0].id, 0);
  EXPECT_EQ(comps[0].bbox_lo, (Index3{12, 4, 4}));
  EXPECT_EQ(comps[0].bbox_hi, (Index3{15, 7, 7}));
}

TEST(Components, MatchUnionFindOracleAndPartitionInput) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryVolume m = RandomMask(rng, {10, 10, 10}, 0.05 + 0.3 * (trial % 4) / 3.0);
    for (int conn : {6, 26}) {
      const auto comps = ConnectedComponents(m, conn);
      std::vector<int64_t> sizes;
      std::set<int64_t> seen;
      for (const auto& c : comps) {
        sizes.push_back(c.size());
        for (int64_t v : c.voxels) EXPECT_TRUE(seen.insert(v).second);
      }
      EXPECT_EQ(sizes, oracles::UnionFindComponentSizes(m, conn));
      EXPECT_EQ(static_cast<int64_t>(seen.size()), m.Count());
      for (size_t i = 1; i < comps.size(); ++i) {
        const bool ordered = comps[i - 1].size() > comps[i].size() ||
                             (comps[i - 1].size() == comps[i].size() &&
                              comps[i - 1].voxels.front() < comps[i].voxels.front());
        EXPECT_TRUE(ordered);
      }
    }
  }
}

TEST(Components, FilterBoundaryAtFifty) {
  auto make = [](int64_t n) {
    ComponentROI c;
    c.voxels.resize(static_cast<size_t>(n));
    return c;
  };
  const auto kept = FilterComponents({make(49), make(50), make(51)}, 50);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].size(), 50);
  EXPECT_TRUE(FilterComponents({}, 50).empty());
}

// ---- Lifting -------------------------------------------------------------------

TEST(Lift, IdentitySpacingReproducesMask) {
  std::mt19937_64 rng(7);
  const BinaryVolume m = RandomMask(rng, {9, 8, 7}, 0.2);
  auto comps = ConnectedComponents(m, 26);
  const auto high = VoxelGrid::Filled({9, 8, 7}, {1.5, 1.5, 1.5}, {3, 4, 5}, VolumeKind::kIntensity, 0.f);
  for (auto& c : comps) LiftToHighres(c, {1.5, 1.5, 1.5}, {3, 4, 5}, high);
  EXPECT_EQ(ComponentsMask(comps, m.dims, true), m);
}

TEST(Lift, OneLowVoxelCoversTwoOrThreeHighVoxelsPerAxis) {
  const Vec3 low_sp{1.99, 1.99, 1.99};
  const auto high = VoxelGrid::Filled({40, 40, 40}, {0.78, 0.78, 0.78}, {0, 0, 0},
                                      VolumeKind::kIntensity, 0.f);
  for (int i = 1; i < 12; ++i) {
    BinaryVolume m({15, 15, 15});
    m.at(i, i, 3) = 1;
    auto comps = ConnectedComponents(m, 26);
    LiftToHighres(comps[0], low_sp, {0, 0, 0}, high);
    for (int a = 0; a < 3; ++a) {
      const int extent = comps[0].high_bbox_hi[a] - comps[0].high_bbox_lo[a];
      EXPECT_TRUE(extent == 2 || extent == 3) << extent;
      // Independent check: voxels whose centre lies in the low cell.
      const int li = a == 2 ? 3 : i;
      int count = 0;
      for (int h = 0; h < 40; ++h) {
        const double c = (h + 0.5) * 0.78;
        count += (c >= li * 1.99 && c < (li + 1) * 1.99) ? 1 : 0;
      }
      EXPECT_EQ(extent, count);
    }
  }
}

TEST(Lift, OutsideHighGridThrows) {
  BinaryVolume m({10, 10, 10});
  m.at(9, 9, 9) = 1;
  auto comps = ConnectedComponents(m, 26);
  const auto high = VoxelGrid::Filled({4, 4, 4}, {1, 1, 1}, {0, 0, 0}, VolumeKind::kIntensity, 0.f);
  EXPECT_THROW(LiftToHighres(comps[0], {1, 1, 1}, {0, 0, 0}, high), InvalidArgument);
}

// ---- Segment and reassemble ---------------------------------------------------------

std::vector<ComponentROI> LiftedComponents(const BinaryVolume& m, const VoxelGrid& high) {
  auto comps = ConnectedComponents(m, 26);
  for (auto& c : comps) LiftToHighres(c, high.spacing(), high.origin(), high);
  return comps;
}

TEST(Segment, OneOutputPerComponentAndIsolation) {
  const auto model = TinyModel();
  std::mt19937_64 rng(8);
  BinaryVolume m({24, 12, 12});
  for (int z = 2; z < 8; ++z) {
    for (int y = 2; y < 8; ++y) {
      for (int x = 2; x < 8; ++x) m.at(x, y, z) = m.at(x + 12, y, z) = 1;
    }
  }
  m.at(22, 10, 10) = 1;  // singleton
  std::vector<float> v(static_cast<size_t>(VoxelCount(m.dims)));
  for (float& x : v) x = static_cast<float>(rng() % 200);
  const VoxelGrid high(m.dims, {1, 1, 1}, {0, 0, 0}, VolumeKind::kIntensity, v);
  const auto comps = LiftedComponents(m, high);
  ASSERT_EQ(comps.size(), 3u);
  const HUWindow w{0, 200};
  const auto preds = SegmentComponents(model, high, comps, w);
  ASSERT_EQ(preds.size(), 3u);
  EXPECT_EQ(preds[2].probs.rows(), 1);
  // Rewrite everything outside component 0; its prediction must not move.
  std::vector<float> v2 = v;
  for (size_t i = 0; i < v2.size(); ++i) {
    if (!std::binary_search(comps[0].high_voxels.begin(), comps[0].high_voxels.end(), static_cast<int64_t>(i))) {
      v2[i] = -1000.f;
    }
  }
  const auto preds2 = SegmentComponents(model, high.WithValues(v2), comps, w);
  EXPECT_EQ(preds2[0].probs, preds[0].probs);
  EXPECT_NE(preds2[1].probs, preds[1].probs);
}

TEST(Segment, CapacityErrorOnOversizedComponent) {
  BinaryVolume m({6, 6, 6}, 1);
  const VoxelGrid high = VoxelGrid::Filled(m.dims, {1, 1, 1}, {0, 0, 0}, VolumeKind::kIntensity, 10.f);
  const auto comps = LiftedComponents(m, high);
  EXPECT_THROW(SegmentComponents(TinyModel(), high, comps, HUWindow{0, 100}, 100), CapacityError);
}

TEST(Reassemble, WholeGridComponentEqualsBinarizedPrediction) {
  std::mt19937_64 rng(9);
  ComponentPrediction p;
  p.offset = {0, 0, 0};
  const Index3 d{3, 2, 2};
  p.probs = testing::RandomMatrix<float>(rng, 12, 3, 1.0);
  for (int64_t i = 0; i < 12; ++i) p.local.push_back(UnravelIndex(d, i));
  const auto mask = Reassemble({p}, d, 0.5);
  for (int64_t i = 0; i < 12; ++i) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(mask.channels[static_cast<size_t>(c)][static_cast<size_t>(i)] != 0, p.probs(i, c) >= 0.5f);
    }
  }
}

TEST(Reassemble, EmptyIsBackgroundAndOverlapThrows) {
  const auto empty = Reassemble({}, {4, 4, 4});
  for (const auto& ch : empty.channels) EXPECT_EQ(std::count(ch.begin(), ch.end(), 1), 0);
  ComponentPrediction a;
  a.offset = {1, 1, 1};
  a.local = {{0, 0, 0}};
  a.probs = Matrix<float>(1, 3, 1.f);
  ComponentPrediction b = a;
  b.offset = {0, 0, 0};
  b.local = {{1, 1, 1}};
  EXPECT_THROW(Reassemble({a, b}, {4, 4, 4}), InvalidArgument);
  a.offset = {4, 0, 0};
  EXPECT_THROW(Reassemble({a}, {4, 4, 4}), InvalidArgument);
}

TEST(Reassemble, CropRoundTripIsBijectionOnPhantoms) {
  const auto model = TinyModel();
  for (uint64_t seed = 0; seed < 5; ++seed) {
    PhantomParams pp;
    pp.dims = {40, 32, 32};
    const Phantom ph = MakePhantom(pp, seed);
    std::mt19937_64 rng(seed);
    const BinaryVolume m = Dilate(RandomMask(rng, pp.dims, 0.002), 5);
    const auto comps = LiftedComponents(m, ph.image);
    const auto preds = SegmentComponents(model, ph.image, comps, HUWindow{});
    std::set<int64_t> global;
    for (const auto& p : preds) {
      for (const auto& l : p.local) {
        const int64_t g = LinearIndex(pp.dims, p.offset[0] + l[0], p.offset[1] + l[1], p.offset[2] + l[2]);
        EXPECT_TRUE(global.insert(g).second);
      }
    }
    std::set<int64_t> active;
    for (int64_t i = 0; i < VoxelCount(pp.dims); ++i) {
      if (m.values[static_cast<size_t>(i)]) active.insert(i);
    }
    EXPECT_EQ(global, active);
  }
}

// ---- DSC -------------------------------------------------------------------------

TEST(Dsc, IdentityDisjointEmptyAndSymmetry) {
  std::mt19937_64 rng(10);
  MultiLabelMask a({5, 5, 5}), b({5, 5, 5});
  for (size_t i = 0; i < a.channels[0].size(); ++i) {
    a.channels[0][i] = rng() % 2;
    a.channels[1][i] = a.channels[0][i] && (rng() % 2);
    b.channels[0][i] = rng() % 2;
  }
  const DiceReport same = Dsc(a, a);
  EXPECT_EQ(same.channel, (std::array<double, 3>{1, 1, 1}));
  EXPECT_EQ(same.all, 1.0);
  const DiceReport ab = Dsc(a, b), ba = Dsc(b, a);
  EXPECT_EQ(ab.channel, ba.channel);
  EXPECT_EQ(ab.channel[2], 1.0);  // both empty
  EXPECT_EQ(ab.channel[1], 0.0);  // b empty, a not
  EXPECT_DOUBLE_EQ(ab.all, (ab.channel[0] + ab.channel[1] + ab.channel[2]) / 3.0);
  MultiLabelMask c({5, 5, 5});
  for (size_t i = 0; i < c.channels[0].size(); ++i) c.channels[0][i] = !a.channels[0][i];
  EXPECT_EQ(Dsc(a, c).channel[0], 0.0);
  EXPECT_THROW(Dsc(a, MultiLabelMask({5, 5, 4})), ShapeMismatch);
}

// ---- Files -----------------------------------------------------------------------

TEST(RoiFile, RunLengthAndJsonRoundTrip) {
  EXPECT_EQ(EncodeRuns({1, 2, 3, 7, 9, 10}),
            (std::vector<std::array<int64_t, 2>>{{1, 3}, {7, 1}, {9, 2}}));
  EXPECT_THROW(EncodeRuns({3, 2}), InvalidArgument);
  std::mt19937_64 rng(11);
  const BinaryVolume m = RandomMask(rng, {12, 11, 10}, 0.1);
  RoiFile roi;
  roi.spacing_mm = {1.99, 1.99, 1.99};
  roi.grid_dims = m.dims;
  roi.components = ConnectedComponents(m, 26);
  const auto dir = testing::TempDir("roi");
  WriteRoiFile((dir / "a.roi.json").string(), roi);
  const RoiFile back = ReadRoiFile((dir / "a.roi.json").string());
  ASSERT_EQ(back.components.size(), roi.components.size());
  for (size_t i = 0; i < roi.components.size(); ++i) {
    EXPECT_EQ(back.components[i].voxels, roi.components[i].voxels);
    EXPECT_EQ(back.components[i].bbox_lo, roi.components[i].bbox_lo);
    EXPECT_EQ(back.components[i].bbox_hi, roi.components[i].bbox_hi);
  }
  EXPECT_EQ(back.spacing_mm, roi.spacing_mm);
  EXPECT_THROW(ReadRoiFile((dir / "missing.roi.json").string()), IoError);
}

// ---- Phantom and stages ----------------------------------------------------------

TEST(Phantom, DeterministicWithExpectedIntensities) {
  PhantomParams pp;
  pp.noise_std = 0;
  const Phantom a = MakePhantom(pp, 4), b = MakePhantom(pp, 4);
  EXPECT_EQ(a.image.values(), b.image.values());
  std::set<float> codes(a.labels.values().begin(), a.labels.values().end());
  EXPECT_EQ(codes, (std::set<float>{0, 1, 2}));
  for (int64_t i = 0; i < a.image.size(); ++i) {
    const float expected = a.labels[i] == 2.f ? 50.f : a.labels[i] == 1.f ? 100.f : -100.f;
    EXPECT_EQ(a.image[i], expected);
  }
  EXPECT_NE(MakePhantom(pp, 5).labels.values(), a.labels.values());
}

TEST(Pipeline, RunCaseProducesGridSizedMask) {
  PhantomParams pp;
  pp.dims = {40, 32, 32};
  const Phantom ph = MakePhantom(pp, 1);
  PipelineOptions opts;
  opts.low_spacing = {2, 2, 2};
  opts.threshold = 0.0;  // untrained model: keep every active voxel
  const auto r = RunCase(TinyModel(1), TinyModel(2), ph.image, opts);
  EXPECT_EQ(r.mask.dims, ph.image.dims());
  EXPECT_EQ(r.roi.low_image.dims(), (Index3{20, 16, 16}));
  EXPECT_FALSE(r.roi.components.empty());
  const auto s1 = MakeStage1Case("a", ph.image, ph.labels, opts.low_spacing);
  EXPECT_EQ(s1.labels.dims(), (Index3{20, 16, 16}));
  const auto s2 = MakeStage2Case("a", TinyModel(1), ph.image, ph.labels, opts);
  ASSERT_TRUE(s2.roi.has_value());
  EXPECT_GT(s2.roi->Count(), 0);
}

}  // namespace
}  // namespace sparseseg
