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
#include <numeric>
#include <random>

#include "sparseseg/common/errors.h"
#include "sparseseg/nn/dense.h"
#include "sparseseg/nn/ops.h"
#include "test_util.h"

namespace sparseseg {
namespace {

using testing::RandomCoords;
using testing::RandomMatrix;
using testing::Randomize;
using testing::ToNaive;
using NamedVars = std::vector<std::pair<std::string, VarPtr<double>>>;

constexpr double kFdTolerance = 1e-4;

SparseTensor<double> RandomTensor(std::mt19937_64& rng, const Index3& dims, double occupancy,
                                  int channels, int batch = 1) {
  auto coords = RandomCoords(rng, dims, occupancy, batch);
  const auto n = static_cast<int64_t>(coords.size());
  return MakeSparseTensor(std::move(coords), RandomMatrix<double>(rng, n, channels), {1, 1, 1},
                          true);
}

ConvParams<double> RandomConv(std::mt19937_64& rng, std::array<int, 3> kernel, int cin, int cout,
                              bool bias, bool depthwise = false) {
  auto p = ConvParams<double>::Create(kernel, cin, cout, bias, depthwise);
  Randomize(rng, p.weight, 0.5);
  Randomize(rng, p.bias, 0.5);
  return p;
}

AffineNormParams<double> RandomNorm(std::mt19937_64& rng, int channels) {
  auto p = AffineNormParams<double>::Create(channels, 1e-6);
  Randomize(rng, p.gamma);
  Randomize(rng, p.beta);
  return p;
}

// Runs `forward` with a tape, seeds a random upstream gradient and compares the
// resulting gradients of `vars` against central differences of <y, upstream>.
template <typename Fn>
oracles::FdReport FiniteDifferenceCheck(Fn forward, const NamedVars& vars, uint64_t seed) {
  for (const auto& v : vars) v.second->ZeroGrad();
  Tape<double> tape;
  const SparseTensor<double> y = forward(&tape);
  std::mt19937_64 rng(seed);
  const Matrix<double> upstream = RandomMatrix<double>(rng, y.values().rows(), y.values().cols());
  tape.Backward(y.feats, upstream);
  std::vector<Matrix<double>> analytic;
  for (const auto& v : vars) analytic.push_back(v.second->grad);
  auto loss = [&]() {
    const SparseTensor<double> out = forward(nullptr);
    return (out.values().map().array() * upstream.map().array()).sum();
  };
  return oracles::CheckGradients(loss, vars, analytic);
}

// Active-site comparison of a sparse result against a dense reference.
void ExpectMatchesAtActiveSites(const SparseTensor<double>& st, const oracles::NaiveVolume& ref,
                                double tol) {
  const Stride& s = st.stride();
  ASSERT_EQ(st.channels(), ref.channels);
  for (int64_t r = 0; r < st.size(); ++r) {
    const Coord& c = (*st.coords)[r];
    for (int ch = 0; ch < st.channels(); ++ch) {
      ASSERT_NEAR(st.values()(r, ch), ref.at(c.x / s[0], c.y / s[1], c.z / s[2], ch), tol)
          << "row " << r << " channel " << ch;
    }
  }
}

oracles::NaiveVolume DenseToNaive(const DenseVolume<double>& v) {
  oracles::NaiveVolume out(v.dims, v.channels);
  std::copy_n(v.data.begin(), out.data.size(), out.data.begin());
  return out;
}

// ---------------------------------------------------------------- SubmConv

TEST(SubmConv, IdentityKernelIsIdentity) {
  std::mt19937_64 rng(1);
  const auto x = RandomTensor(rng, {6, 6, 6}, 0.3, 4);
  auto p = ConvParams<double>::Create({3, 3, 3}, 4, 4, true);
  for (int c = 0; c < 4; ++c) p.weight->value(13 * 4 + c, c) = 1.0;
  const auto y = SubmConv<double>(nullptr, x, p);
  EXPECT_TRUE(y.values() == x.values());
  EXPECT_EQ(y.coords.get(), x.coords.get());
}

TEST(SubmConv, SingleVoxelSeesOnlyCentre) {
  std::mt19937_64 rng(2);
  auto x = MakeSparseTensor<double>({{0, 4, 4, 4}}, RandomMatrix<double>(rng, 1, 3));
  const auto p = RandomConv(rng, {3, 3, 3}, 3, 2, true);
  const auto y = SubmConv<double>(nullptr, x, p);
  for (int co = 0; co < 2; ++co) {
    double expected = p.bias->value(0, co);
    for (int ci = 0; ci < 3; ++ci) expected += x.values()(0, ci) * p.weight->value(13 * 3 + ci, co);
    EXPECT_NEAR(y.values()(0, co), expected, 1e-12);
  }
}

TEST(SubmConv, MatchesDenseOracleAtActiveSites) {
  std::mt19937_64 rng(3);
  const struct { Index3 dims; double occ; int cin, cout; } cases[] = {
      {{8, 8, 8}, 0.3, 2, 3}, {{12, 10, 9}, 0.15, 4, 4}, {{24, 24, 24}, 0.03, 8, 5}};
  for (const auto& tc : cases) {
    const auto x = RandomTensor(rng, tc.dims, tc.occ, tc.cin, 1);
    const auto p = RandomConv(rng, {3, 3, 3}, tc.cin, tc.cout, true);
    const auto y = SubmConv<double>(nullptr, x, p);
    const auto ref = oracles::NaiveConv(ToNaive(x, tc.dims), testing::WeightsOf(p), p.kernel,
                                        tc.cout, testing::BiasOf(p), true, {1, 1, 1});
    ExpectMatchesAtActiveSites(y, ref, 1e-10);
  }
}

TEST(SubmConv, ChannelMismatchThrows) {
  std::mt19937_64 rng(4);
  const auto x = RandomTensor(rng, {4, 4, 4}, 0.5, 3);
  EXPECT_THROW(SubmConv<double>(nullptr, x, ConvParams<double>::Create({3, 3, 3}, 2, 2, false)),
               ShapeMismatch);
}

TEST(SubmConv, PermutationEquivariance) {
  std::mt19937_64 rng(5);
  auto coords = RandomCoords(rng, {8, 8, 8}, 0.25);
  const auto n = static_cast<int64_t>(coords.size());
  const Matrix<double> feats = RandomMatrix<double>(rng, n, 3);
  std::vector<int64_t> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Coord> pc(coords.size());
  Matrix<double> pf(n, 3);
  for (int64_t i = 0; i < n; ++i) {
    pc[static_cast<size_t>(perm[static_cast<size_t>(i)])] = coords[static_cast<size_t>(i)];
    std::copy_n(feats.row(i), 3, pf.row(perm[static_cast<size_t>(i)]));
  }
  const auto x = MakeSparseTensor(coords, feats);
  const auto xp = MakeSparseTensor(pc, pf);
  const auto p = RandomConv(rng, {3, 3, 3}, 3, 4, true);
  const auto dw = RandomConv(rng, {3, 3, 3}, 3, 3, true, true);
  const auto norm = RandomNorm(rng, 4);
  auto chain = [&](const SparseTensor<double>& in) {
    auto h = DepthwiseConv<double>(nullptr, in, dw);
    h = SubmConv<double>(nullptr, h, p);
    h = LayerNorm<double>(nullptr, h, norm);
    return Grn<double>(nullptr, Gelu<double>(nullptr, h), norm);
  };
  const auto y = chain(x);
  const auto yp = chain(xp);
  for (int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < 4; ++c) {
      EXPECT_NEAR(yp.values()(perm[static_cast<size_t>(i)], c), y.values()(i, c), 1e-12);
    }
  }
}

// ------------------------------------------------------------- StridedConv

TEST(StridedConv, SingleVoxelAtOrigin) {
  std::mt19937_64 rng(6);
  auto x = MakeSparseTensor<double>({{0, 0, 0, 0}}, RandomMatrix<double>(rng, 1, 2));
  const auto p = RandomConv(rng, {2, 2, 2}, 2, 3, true);
  const auto y = StridedConv<double>(nullptr, x, p, {2, 2, 2});
  ASSERT_EQ(y.size(), 1);
  EXPECT_EQ(y.stride(), (Stride{2, 2, 2}));
  for (int co = 0; co < 3; ++co) {
    const double expected = p.bias->value(0, co) + x.values()(0, 0) * p.weight->value(0, co) +
                            x.values()(0, 1) * p.weight->value(1, co);
    EXPECT_NEAR(y.values()(0, co), expected, 1e-12);
  }
}

TEST(StridedConv, FullCellSumsToEight) {
  std::vector<Coord> cell;
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) cell.push_back({0, x, y, z});
  auto x = MakeSparseTensor<double>(cell, Matrix<double>(8, 1, 1.0));
  auto p = ConvParams<double>::Create({2, 2, 2}, 1, 1, false);
  p.weight->value = Matrix<double>(8, 1, 1.0);
  const auto y = StridedConv<double>(nullptr, x, p, {2, 2, 2});
  ASSERT_EQ(y.size(), 1);
  EXPECT_EQ(y.values()(0, 0), 8.0);
}

TEST(StridedConv, MatchesDenseOracleAtOccupiedCells) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    const Index3 dims{9 + trial, 8, 10};
    const auto x = RandomTensor(rng, dims, 0.2, 3);
    const auto p = RandomConv(rng, {2, 2, 2}, 3, 5, true);
    const auto y = StridedConv<double>(nullptr, x, p, {2, 2, 2});
    const auto ref = oracles::NaiveConv(ToNaive(x, dims), testing::WeightsOf(p), p.kernel, 5,
                                        testing::BiasOf(p), false, {2, 2, 2});
    ExpectMatchesAtActiveSites(y, ref, 1e-10);
    // Second level from stride 2 to stride 4.
    const auto p2 = RandomConv(rng, {2, 2, 2}, 5, 2, false);
    const auto y2 = StridedConv<double>(nullptr, y, p2, {2, 2, 2});
    // The dense stride-2 result carries bias at empty cells, so the second
    // level reads the sparse result with inactive cells zeroed.
    const auto ref2 = oracles::NaiveConv(ToNaive(y, ref.dims), testing::WeightsOf(p2), p2.kernel,
                                         2, {}, false, {2, 2, 2});
    ExpectMatchesAtActiveSites(y2, ref2, 1e-10);
  }
}

// ---------------------------------------------------------- TransposedConv

TEST(TransposedConv, RestoresFineCoordinates) {
  std::mt19937_64 rng(8);
  const auto x = RandomTensor(rng, {10, 10, 10}, 0.1, 2);
  const auto down = StridedConv<double>(nullptr, x, RandomConv(rng, {2, 2, 2}, 2, 4, true), {2, 2, 2});
  const auto up = TransposedConv<double>(nullptr, down, RandomConv(rng, {2, 2, 2}, 4, 2, true), {2, 2, 2});
  EXPECT_EQ(up.coords.get(), x.coords.get());
  EXPECT_EQ(up.stride(), (Stride{1, 1, 1}));
}

TEST(TransposedConv, CoarseVoxelFeedsBothFineVoxels) {
  auto x = MakeSparseTensor<double>({{0, 0, 0, 0}, {0, 1, 0, 0}}, Matrix<double>(2, 1, 0.0));
  x.pyramid->Downsample({1, 1, 1}, {2, 2, 2});
  auto coarse = SparseTensor<double>{x.pyramid, x.pyramid->Lookup({2, 2, 2}),
                                     MakeVar(Matrix<double>(1, 1, 3.0))};
  auto p = ConvParams<double>::Create({2, 2, 2}, 1, 1, true);
  for (int k = 0; k < 8; ++k) p.weight->value(k, 0) = k + 1;
  p.bias->value(0, 0) = 0.5;
  const auto y = TransposedConv<double>(nullptr, coarse, p, {2, 2, 2});
  ASSERT_EQ(y.size(), 2);
  EXPECT_EQ(y.values()(0, 0), 3.0 * 1 + 0.5);  // offset (0,0,0)
  EXPECT_EQ(y.values()(1, 0), 3.0 * 2 + 0.5);  // offset (1,0,0)
}

TEST(TransposedConv, MissingTargetLevelThrows) {
  auto x = MakeSparseTensor<double>({{0, 0, 0, 0}}, Matrix<double>(1, 1, 1.0), {2, 2, 2});
  EXPECT_THROW(TransposedConv<double>(nullptr, x, ConvParams<double>::Create({2, 2, 2}, 1, 1, false),
                                      {2, 2, 2}),
               InvalidArgument);
}

TEST(TransposedConv, MatchesDenseOracleAtActiveSites) {
  std::mt19937_64 rng(9);
  const Index3 dims{11, 9, 8};
  const auto x = RandomTensor(rng, dims, 0.2, 2);
  const auto down = StridedConv<double>(nullptr, x, RandomConv(rng, {2, 2, 2}, 2, 4, true), {2, 2, 2});
  const auto p = RandomConv(rng, {2, 2, 2}, 4, 3, true);
  const auto up = TransposedConv<double>(nullptr, down, p, {2, 2, 2});
  const Index3 coarse{6, 5, 4};
  const auto ref = oracles::NaiveTransposedConv(ToNaive(down, coarse), testing::WeightsOf(p),
                                                p.kernel, 3, testing::BiasOf(p), {2, 2, 2}, dims);
  ExpectMatchesAtActiveSites(up, ref, 1e-10);
}

// ----------------------------------------------------------- DepthwiseConv

TEST(DepthwiseConv, CentreOnesIsIdentity) {
  std::mt19937_64 rng(10);
  const auto x = RandomTensor(rng, {6, 6, 6}, 0.3, 5);
  auto p = ConvParams<double>::Create({3, 3, 3}, 5, 5, true, true);
  for (int c = 0; c < 5; ++c) p.weight->value(13, c) = 1.0;
  EXPECT_TRUE(DepthwiseConv<double>(nullptr, x, p).values() == x.values());
}

TEST(DepthwiseConv, EqualsDiagonalSubmConv) {
  std::mt19937_64 rng(11);
  const auto x = RandomTensor(rng, {10, 10, 10}, 0.2, 4);
  const auto dw = RandomConv(rng, {3, 3, 3}, 4, 4, true, true);
  auto full = ConvParams<double>::Create({3, 3, 3}, 4, 4, true);
  for (int k = 0; k < 27; ++k)
    for (int c = 0; c < 4; ++c) full.weight->value(k * 4 + c, c) = dw.weight->value(k, c);
  full.bias->value = dw.bias->value;
  const auto a = DepthwiseConv<double>(nullptr, x, dw);
  const auto b = SubmConv<double>(nullptr, x, full);
  for (int64_t i = 0; i < a.values().size(); ++i) {
    EXPECT_NEAR(a.values().data()[i], b.values().data()[i], 1e-12);
  }
  EXPECT_THROW(DepthwiseConv<double>(nullptr, x, full), InvalidArgument);
}

TEST(DepthwiseConv, ChannelIsolation) {
  std::mt19937_64 rng(12);
  auto coords = RandomCoords(rng, {8, 8, 8}, 0.3);
  const auto n = static_cast<int64_t>(coords.size());
  Matrix<double> f = RandomMatrix<double>(rng, n, 3);
  const auto dw = RandomConv(rng, {3, 3, 3}, 3, 3, true, true);
  const auto a = DepthwiseConv<double>(nullptr, MakeSparseTensor(coords, f), dw);
  for (int64_t r = 0; r < n; ++r) f(r, 0) += 10.0;
  const auto b = DepthwiseConv<double>(nullptr, MakeSparseTensor(coords, f), dw);
  for (int64_t r = 0; r < n; ++r) {
    EXPECT_EQ(a.values()(r, 1), b.values()(r, 1));
    EXPECT_EQ(a.values()(r, 2), b.values()(r, 2));
  }
}

// ----------------------------------------------------------------- AvgPool

TEST(AvgPool, DividesByActiveCount) {
  Matrix<double> f(2, 1);
  f(1, 0) = 1.0;
  const auto x = MakeSparseTensor<double>({{0, 0, 0, 0}, {0, 1, 1, 0}}, f);
  const auto y = AvgPool<double>(nullptr, x, {2, 2, 2});
  ASSERT_EQ(y.size(), 1);
  EXPECT_EQ(y.values()(0, 0), 0.5);
  const auto single = MakeSparseTensor<double>({{0, 3, 3, 3}}, Matrix<double>(1, 1, 2.75));
  EXPECT_EQ(AvgPool<double>(nullptr, single, {2, 2, 2}).values()(0, 0), 2.75);
}

TEST(AvgPool, BinaryLabelsStayInUnitInterval) {
  // Every non-empty occupancy pattern of one 2x2x2 cell and every labelling.
  for (int occ = 1; occ < 256; ++occ) {
    std::vector<Coord> coords;
    for (int k = 0; k < 8; ++k) {
      if (occ >> k & 1) coords.push_back({0, k & 1, k >> 1 & 1, k >> 2 & 1});
    }
    const int n = static_cast<int>(coords.size());
    for (int lab = 0; lab < (1 << n); ++lab) {
      Matrix<double> f(n, 1);
      for (int i = 0; i < n; ++i) f(i, 0) = lab >> i & 1;
      const double v = AvgPool<double>(nullptr, MakeSparseTensor(coords, f), {2, 2, 2}).values()(0, 0);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      ASSERT_EQ(v == 1.0, lab == (1 << n) - 1);
    }
  }
}

// --------------------------------------------------------------- LayerNorm

TEST(LayerNorm, HandExamples) {
  const auto p = AffineNormParams<double>::Create(4, 1e-6);
  const auto c = LayerNorm<double>(nullptr, MakeSparseTensor<double>({{0, 0, 0, 0}}, Matrix<double>(1, 4, 1.0)), p);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(c.values()(0, i), 0.0, 1e-9);
  Matrix<double> f(1, 2);
  f(0, 0) = 1;
  f(0, 1) = -1;
  const auto p2 = AffineNormParams<double>::Create(2, 1e-6);
  const auto y = LayerNorm<double>(nullptr, MakeSparseTensor<double>({{0, 0, 0, 0}}, f), p2);
  EXPECT_NEAR(y.values()(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(y.values()(0, 1), -1.0, 1e-6);
}

TEST(LayerNorm, BetaShiftsRowMean) {
  std::mt19937_64 rng(13);
  const auto x = RandomTensor(rng, {5, 5, 5}, 0.4, 6);
  auto p = AffineNormParams<double>::Create(6, 1e-6);
  Randomize(rng, p.beta);
  const double beta_mean = p.beta->value.map().mean();
  const auto y = LayerNorm<double>(nullptr, x, p);
  for (int64_t r = 0; r < y.size(); ++r) EXPECT_NEAR(y.values().map().row(r).mean(), beta_mean, 1e-9);
}

// --------------------------------------------------------------------- GRN

TEST(Grn, ZeroAffineIsIdentity) {
  std::mt19937_64 rng(14);
  const auto x = RandomTensor(rng, {6, 6, 6}, 0.3, 4, 2);
  const auto p = AffineNormParams<double>::Create(4, 1e-6, 0.0);
  EXPECT_TRUE(Grn<double>(nullptr, x, p).values() == x.values());
}

TEST(Grn, SingleChannelDegeneracy) {
  std::mt19937_64 rng(15);
  const auto x = RandomTensor(rng, {6, 6, 6}, 0.3, 1);
  auto p = RandomNorm(rng, 1);
  const auto y = Grn<double>(nullptr, x, p);
  const double g = p.gamma->value(0, 0), b = p.beta->value(0, 0);
  // n = |x| / (|x| + eps), which is 1 up to eps.
  for (int64_t r = 0; r < x.size(); ++r) {
    EXPECT_NEAR(y.values()(r, 0), g * x.values()(r, 0) + b + x.values()(r, 0), 1e-5);
  }
}

TEST(Grn, MatchesFormulaPerBatchItem) {
  std::mt19937_64 rng(16);
  const auto x = RandomTensor(rng, {5, 6, 7}, 0.3, 5, 3);
  const auto p = RandomNorm(rng, 5);
  const auto y = Grn<double>(nullptr, x, p);
  for (int b = 0; b < 3; ++b) {
    std::vector<double> g(5, 0.0);
    for (int64_t r = 0; r < x.size(); ++r) {
      if ((*x.coords)[r].b != b) continue;
      for (int c = 0; c < 5; ++c) g[static_cast<size_t>(c)] += std::pow(x.values()(r, c), 2);
    }
    double mean = 0;
    for (auto& v : g) {
      v = std::sqrt(v);
      mean += v / 5;
    }
    for (int64_t r = 0; r < x.size(); ++r) {
      if ((*x.coords)[r].b != b) continue;
      for (int c = 0; c < 5; ++c) {
        const double xv = x.values()(r, c);
        const double expected = p.gamma->value(0, c) * xv * g[static_cast<size_t>(c)] / (mean + 1e-6) +
                                p.beta->value(0, c) + xv;
        EXPECT_NEAR(y.values()(r, c), expected, 1e-10);
      }
    }
  }
}

// ------------------------------------------------------ Elementwise, linear

TEST(Elementwise, GeluAndSigmoidValues) {
  EXPECT_EQ(GeluScalar(0.0), 0.0);
  EXPECT_EQ(SigmoidScalar(0.0), 0.5);
  EXPECT_NEAR(GeluScalar(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(GeluScalar(-1.0), -0.15865525393145707, 1e-15);
  std::mt19937_64 rng(17);
  const auto x = RandomTensor(rng, {5, 5, 5}, 0.5, 3);
  Matrix<double> big = RandomMatrix<double>(rng, x.size(), 3, 30.0);
  const auto s = Sigmoid<double>(nullptr, x.WithFeatures(MakeVar(big)));
  for (int64_t i = 0; i < s.values().size(); ++i) {
    EXPECT_GT(s.values().data()[i], 0.0);
    EXPECT_LT(s.values().data()[i], 1.0);
  }
}

TEST(Elementwise, PointwiseIdentity) {
  std::mt19937_64 rng(18);
  const auto x = RandomTensor(rng, {5, 5, 5}, 0.5, 3);
  auto p = LinearParams<double>::Create(3, 3, true);
  for (int c = 0; c < 3; ++c) p.weight->value(c, c) = 1.0;
  EXPECT_TRUE(PointwiseLinear<double>(nullptr, x, p).values() == x.values());
}

TEST(Elementwise, CoordinatePreservation) {
  std::mt19937_64 rng(19);
  const auto x = RandomTensor(rng, {7, 7, 7}, 0.3, 4);
  const auto norm = RandomNorm(rng, 4);
  auto lin = LinearParams<double>::Create(4, 6, true);
  const std::vector<SparseTensor<double>> outs = {
      SubmConv<double>(nullptr, x, RandomConv(rng, {3, 3, 3}, 4, 2, true)),
      DepthwiseConv<double>(nullptr, x, RandomConv(rng, {3, 3, 3}, 4, 4, true, true)),
      LayerNorm<double>(nullptr, x, norm), Grn<double>(nullptr, x, norm),
      Gelu<double>(nullptr, x), Sigmoid<double>(nullptr, x),
      PointwiseLinear<double>(nullptr, x, lin)};
  for (const auto& y : outs) {
    EXPECT_EQ(y.coords.get(), x.coords.get());
    EXPECT_EQ(y.size(), x.size());
  }
}

TEST(Elementwise, AddRequiresSameCoordinates) {
  std::mt19937_64 rng(20);
  const auto a = RandomTensor(rng, {5, 5, 5}, 0.5, 2);
  const auto b = RandomTensor(rng, {5, 5, 5}, 0.5, 2);
  EXPECT_THROW(Add<double>(nullptr, a, b), ShapeMismatch);
  const auto s = Add<double>(nullptr, a, a);
  EXPECT_NEAR(s.values()(0, 0), 2 * a.values()(0, 0), 1e-15);
}

// ---------------------------------------------------------------- Backward

TEST(Backward, FiniteDifferencesForEveryOp) {
  std::mt19937_64 rng(21);
  const Index3 dims{5, 5, 4};
  const auto x = RandomTensor(rng, dims, 0.35, 3, 2);
  const auto conv = RandomConv(rng, {3, 3, 3}, 3, 2, true);
  const auto dw = RandomConv(rng, {3, 3, 3}, 3, 3, true, true);
  const auto down = RandomConv(rng, {2, 2, 2}, 3, 4, true);
  const auto up = RandomConv(rng, {2, 2, 2}, 4, 3, true);
  const auto norm = RandomNorm(rng, 3);
  auto lin = LinearParams<double>::Create(3, 5, true);
  Randomize(rng, lin.weight);
  Randomize(rng, lin.bias);
  const NamedVars xs{{"x", x.feats}};
  auto with = [&](NamedVars extra) {
    extra.insert(extra.begin(), xs.begin(), xs.end());
    return extra;
  };
  struct Case {
    std::string name;
    std::function<SparseTensor<double>(Tape<double>*)> fwd;
    NamedVars vars;
  };
  const std::vector<Case> cases = {
      {"subm_conv", [&](Tape<double>* t) { return SubmConv(t, x, conv); },
       with({{"w", conv.weight}, {"b", conv.bias}})},
      {"depthwise", [&](Tape<double>* t) { return DepthwiseConv(t, x, dw); },
       with({{"w", dw.weight}, {"b", dw.bias}})},
      {"strided", [&](Tape<double>* t) { return StridedConv(t, x, down, {2, 2, 2}); },
       with({{"w", down.weight}, {"b", down.bias}})},
      {"transposed",
       [&](Tape<double>* t) {
         return TransposedConv(t, StridedConv(t, x, down, {2, 2, 2}), up, {2, 2, 2});
       },
       with({{"w_down", down.weight}, {"w_up", up.weight}, {"b_up", up.bias}})},
      {"avg_pool", [&](Tape<double>* t) { return AvgPool(t, x, {2, 2, 2}); }, xs},
      {"layer_norm", [&](Tape<double>* t) { return LayerNorm(t, x, norm); },
       with({{"gamma", norm.gamma}, {"beta", norm.beta}})},
      {"grn", [&](Tape<double>* t) { return Grn(t, x, norm); },
       with({{"gamma", norm.gamma}, {"beta", norm.beta}})},
      {"gelu", [&](Tape<double>* t) { return Gelu(t, x); }, xs},
      {"sigmoid", [&](Tape<double>* t) { return Sigmoid(t, x); }, xs},
      {"pointwise", [&](Tape<double>* t) { return PointwiseLinear(t, x, lin); },
       with({{"w", lin.weight}, {"b", lin.bias}})},
      {"add", [&](Tape<double>* t) { return Add(t, x, Gelu(t, x)); }, xs},
  };
  uint64_t seed = 100;
  for (const auto& c : cases) {
    const auto report = FiniteDifferenceCheck(c.fwd, c.vars, seed++);
    EXPECT_LT(report.max_rel_error, kFdTolerance) << c.name << ": " << report.worst;
    EXPECT_GT(report.checked, 0) << c.name;
  }
}

TEST(Backward, IdentityKernelPassesUpstreamThrough) {
  std::mt19937_64 rng(22);
  const auto x = RandomTensor(rng, {6, 6, 6}, 0.3, 3);
  auto p = ConvParams<double>::Create({3, 3, 3}, 3, 3, false);
  for (int c = 0; c < 3; ++c) p.weight->value(13 * 3 + c, c) = 1.0;
  Tape<double> tape;
  const auto y = SubmConv(&tape, x, p);
  const Matrix<double> up = RandomMatrix<double>(rng, y.size(), 3);
  tape.Backward(y.feats, up);
  EXPECT_TRUE(x.feats->grad == up);
}

TEST(Backward, TwoPassesAccumulateExactlyTwice) {
  std::mt19937_64 rng(23);
  const auto x = RandomTensor(rng, {6, 6, 6}, 0.3, 3);
  const auto p = RandomConv(rng, {3, 3, 3}, 3, 2, true);
  const Matrix<double> up = RandomMatrix<double>(rng, x.size(), 2);
  auto pass = [&]() {
    Tape<double> tape;
    const auto y = SubmConv(&tape, x, p);
    tape.Backward(y.feats, up);
  };
  pass();
  const Matrix<double> once_w = p.weight->grad;
  const Matrix<double> once_x = x.feats->grad;
  pass();
  for (int64_t i = 0; i < once_w.size(); ++i) EXPECT_EQ(p.weight->grad.data()[i], 2 * once_w.data()[i]);
  for (int64_t i = 0; i < once_x.size(); ++i) EXPECT_EQ(x.feats->grad.data()[i], 2 * once_x.data()[i]);
  p.weight->ZeroGrad();
  EXPECT_FALSE(p.weight->has_grad());
}

TEST(Backward, BeforeForwardThrows) {
  Tape<double> tape;
  auto loss = MakeVar(Matrix<double>(1, 1, 1.0), true);
  EXPECT_THROW(tape.Backward(loss), Error);
}

TEST(Backward, VisitsEachOpOnceInReverse) {
  Tape<double> tape;
  std::vector<int> order;
  for (int i = 0; i < 4; ++i) tape.Record([&order, i] { order.push_back(i); });
  tape.Backward(MakeVar(Matrix<double>(1, 1)));
  EXPECT_EQ(order, (std::vector<int>{3, 2, 1, 0}));
  EXPECT_EQ(tape.size(), 0u);
}

// ----------------------------------------------------------- Dense oracle

TEST(DenseConv, DeltaGivesImpulseResponse) {
  std::mt19937_64 rng(24);
  DenseVolume<double> in(1, {7, 7, 7}, 1);
  *in.at(0, 3, 3, 3) = 1.0;
  const auto p = RandomConv(rng, {3, 3, 3}, 1, 1, false);
  const auto out = DenseConv(in, p, {1, 1, 1});
  for (int kz = 0; kz < 3; ++kz)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        // Cross-correlation: output at centre - offset reads the impulse at offset.
        const int k = (kz * 3 + ky) * 3 + kx;
        EXPECT_NEAR(*out.at(0, 3 - (kx - 1), 3 - (ky - 1), 3 - (kz - 1)), p.weight->value(k, 0), 1e-15);
      }
  double total = 0;
  for (double v : out.data) total += std::abs(v);
  EXPECT_NEAR(total, p.weight->value.map().cwiseAbs().sum(), 1e-12);
}

TEST(DenseConv, IdentityKernel) {
  std::mt19937_64 rng(25);
  DenseVolume<double> in(1, {5, 6, 7}, 2);
  for (auto& v : in.data) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  auto p = ConvParams<double>::Create({3, 3, 3}, 2, 2, false);
  p.weight->value(26, 0) = 1.0;
  p.weight->value(27, 1) = 1.0;
  const auto out = DenseConv(in, p, {1, 1, 1});
  EXPECT_TRUE(std::equal(out.data.begin(), out.data.end(), in.data.begin()));
}

TEST(DenseConv, MatchesSixLoopSummation) {
  std::mt19937_64 rng(26);
  DenseVolume<double> in(1, {16, 16, 16}, 3);
  for (auto& v : in.data) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const oracles::NaiveVolume naive = DenseToNaive(in);
  const auto p = RandomConv(rng, {3, 3, 3}, 3, 4, true);
  const auto out = DenseConv(in, p, {1, 1, 1});
  const auto ref = oracles::NaiveConv(naive, testing::WeightsOf(p), p.kernel, 4, testing::BiasOf(p),
                                      true, {1, 1, 1});
  for (size_t i = 0; i < ref.data.size(); ++i) ASSERT_NEAR(out.data[i], ref.data[i], 1e-10);
  const auto ps = RandomConv(rng, {2, 2, 2}, 3, 2, true);
  const auto outs = DenseConv(in, ps, {2, 2, 2});
  const auto refs = oracles::NaiveConv(naive, testing::WeightsOf(ps), ps.kernel, 2,
                                       testing::BiasOf(ps), false, {2, 2, 2});
  ASSERT_EQ(outs.dims, refs.dims);
  for (size_t i = 0; i < refs.data.size(); ++i) ASSERT_NEAR(outs.data[i], refs.data[i], 1e-10);
  const auto pt = RandomConv(rng, {2, 2, 2}, 2, 3, true);
  const auto outt = DenseTransposedConv(outs, pt, {2, 2, 2}, in.dims);
  const auto reft = oracles::NaiveTransposedConv(refs, testing::WeightsOf(pt), pt.kernel, 3,
                                                 testing::BiasOf(pt), {2, 2, 2}, in.dims);
  for (size_t i = 0; i < reft.data.size(); ++i) ASSERT_NEAR(outt.data[i], reft.data[i], 1e-10);
}

TEST(DenseConv, MaskedDenseEqualsSparse) {
  std::mt19937_64 rng(27);
  const Index3 dims{10, 9, 8};
  const auto x = RandomTensor(rng, dims, 0.2, 3);
  const auto p = RandomConv(rng, {3, 3, 3}, 3, 3, true);
  const auto dw = RandomConv(rng, {3, 3, 3}, 3, 3, true, true);
  const auto norm = RandomNorm(rng, 3);
  const DenseMask mask = MaskOf(x, dims);
  auto dense = Densify(x, dims, 0.0);
  dense = DenseConv(dense, p, {1, 1, 1});
  ApplyMask(dense, mask);
  dense = DenseDepthwiseConv(dense, dw);
  ApplyMask(dense, mask);
  dense = DenseLayerNorm(dense, norm);
  ApplyMask(dense, mask);
  dense = DenseGrn(dense, norm);
  ApplyMask(dense, mask);
  auto sparse = SubmConv<double>(nullptr, x, p);
  sparse = DepthwiseConv<double>(nullptr, sparse, dw);
  sparse = Grn<double>(nullptr, LayerNorm<double>(nullptr, sparse, norm), norm);
  ExpectMatchesAtActiveSites(sparse, DenseToNaive(dense), 1e-9);
  EXPECT_EQ(mask.Count(), x.size());
}

}  // namespace
}  // namespace sparseseg
