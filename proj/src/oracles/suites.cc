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

#include "sparseseg/oracles/suites.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "sparseseg/model/unet.h"
#include "sparseseg/nn/ops.h"
#include "sparseseg/oracles/oracles.h"
#include "sparseseg/pipeline/phantom.h"
#include "sparseseg/pipeline/roi.h"
#include "sparseseg/pipeline/segment.h"
#include "sparseseg/pipeline/sparsify.h"
#include "sparseseg/train/config.h"
#include "sparseseg/train/loss.h"
#include "sparseseg/train/optim.h"

namespace sparseseg::oracles {
namespace {

using Clock = std::chrono::steady_clock;
using NamedVars = std::vector<std::pair<std::string, VarPtr<double>>>;

std::string Fmt(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

class Timer {
 public:
  explicit Timer(SuiteResult& r) : r_(r), t0_(Clock::now()) {}
  ~Timer() { r_.seconds = std::chrono::duration<double>(Clock::now() - t0_).count(); }

 private:
  SuiteResult& r_;
  Clock::time_point t0_;
};

std::vector<Coord> RandomCoords(std::mt19937_64& rng, const Index3& d, double occupancy) {
  std::bernoulli_distribution keep(occupancy);
  std::vector<Coord> coords;
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        if (keep(rng)) coords.push_back({0, x, y, z});
      }
    }
  }
  if (coords.empty()) coords.push_back({0, d[0] / 2, d[1] / 2, d[2] / 2});
  return coords;
}

Matrix<double> RandomMatrix(std::mt19937_64& rng, int64_t rows, int64_t cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix<double> m(rows, cols);
  for (int64_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

void Randomize(std::mt19937_64& rng, const VarPtr<double>& v, double scale) {
  if (v) v->value = RandomMatrix(rng, v->value.rows(), v->value.cols(), scale);
}

SparseTensor<double> RandomTensor(std::mt19937_64& rng, const Index3& d, double occupancy,
                                  int channels) {
  auto coords = RandomCoords(rng, d, occupancy);
  const auto n = static_cast<int64_t>(coords.size());
  return MakeSparseTensor(std::move(coords), RandomMatrix(rng, n, channels, 1.0), {1, 1, 1}, true);
}

ConvParams<double> RandomConv(std::mt19937_64& rng, std::array<int, 3> kernel, int cin, int cout,
                              bool bias, bool depthwise = false) {
  auto p = ConvParams<double>::Create(kernel, cin, cout, bias, depthwise);
  Randomize(rng, p.weight, 0.5);
  Randomize(rng, p.bias, 0.5);
  return p;
}

ConvParams<float> ToFloat(const ConvParams<double>& p) {
  auto f = ConvParams<float>::Create(p.kernel, p.in_channels, p.out_channels,
                                     static_cast<bool>(p.bias), p.depthwise);
  f.weight->value = p.weight->value.Cast<float>();
  if (p.bias) f.bias->value = p.bias->value.Cast<float>();
  return f;
}

template <typename T>
SparseTensor<T> WithValues(const SparseTensor<double>& x, bool requires_grad = false) {
  return {x.pyramid, x.coords, MakeVar(x.values().Cast<T>(), requires_grad)};
}

NaiveVolume ToNaive(const SparseTensor<double>& st, const Index3& dims) {
  NaiveVolume vol(dims, st.channels());
  const Stride& s = st.stride();
  for (int64_t r = 0; r < st.size(); ++r) {
    const Coord& c = (*st.coords)[r];
    for (int ch = 0; ch < st.channels(); ++ch) {
      vol.at(c.x / s[0], c.y / s[1], c.z / s[2], ch) = st.values()(r, ch);
    }
  }
  return vol;
}

WeightFn WeightsOf(const ConvParams<double>& p) {
  const Matrix<double> w = p.weight->value;
  const int cin = p.in_channels;
  const bool dw = p.depthwise;
  return [w, cin, dw](int k, int ci, int co) -> double {
    if (dw) return ci == co ? w(k, ci) : 0.0;
    return w(static_cast<int64_t>(k) * cin + ci, co);
  };
}

std::vector<double> BiasOf(const ConvParams<double>& p) {
  std::vector<double> b;
  if (!p.bias) return b;
  for (int c = 0; c < p.out_channels; ++c) b.push_back(p.bias->value(0, c));
  return b;
}

// Max |sparse - reference| over the sparse tensor's active sites.
template <typename T>
double MaxError(const SparseTensor<T>& st, const NaiveVolume& ref) {
  const Stride& s = st.stride();
  double err = 0.0;
  for (int64_t r = 0; r < st.size(); ++r) {
    const Coord& c = (*st.coords)[r];
    for (int ch = 0; ch < st.channels(); ++ch) {
      const double v = static_cast<double>(st.values()(r, ch));
      err = std::max(err, std::abs(v - ref.at(c.x / s[0], c.y / s[1], c.z / s[2], ch)));
    }
  }
  return err;
}

FdReport CheckOp(const std::function<SparseTensor<double>(Tape<double>*)>& forward,
                 const NamedVars& vars, uint64_t seed) {
  for (const auto& v : vars) v.second->ZeroGrad();
  Tape<double> tape;
  const SparseTensor<double> y = forward(&tape);
  std::mt19937_64 rng(seed);
  const Matrix<double> upstream = RandomMatrix(rng, y.values().rows(), y.values().cols(), 1.0);
  tape.Backward(y.feats, upstream);
  std::vector<Matrix<double>> analytic;
  for (const auto& v : vars) analytic.push_back(v.second->grad);
  auto loss = [&]() {
    const SparseTensor<double> out = forward(nullptr);
    return (out.values().map().array() * upstream.map().array()).sum();
  };
  return CheckGradients(loss, vars, analytic);
}

// Nested kidney-mass / tumour+cyst / tumour channels at random.
Matrix<double> NestedLabels(std::mt19937_64& rng, int64_t rows) {
  Matrix<double> t(rows, 3);
  for (int64_t r = 0; r < rows; ++r) {
    const int level = static_cast<int>(rng() % 4);
    for (int c = 0; c < 3; ++c) t(r, c) = level > c ? 1.0 : 0.0;
  }
  return t;
}

FdReport CheckModel(const ModelConfig& cfg, uint64_t seed, const Index3& dims, double occupancy) {
  std::mt19937_64 rng(seed);
  const auto model = SparseUNet<double>::Build(cfg, seed);
  NamedVars vars;
  for (const auto& p : model.parameters()) {
    Randomize(rng, p.var, 0.3);
    vars.emplace_back(p.name, p.var);
  }
  const SparseTensor<double> x = RandomTensor(rng, dims, occupancy, cfg.in_channels);
  vars.emplace_back("input", x.feats);
  const SparseTensor<double> labels{x.pyramid, x.coords, MakeVar(NestedLabels(rng, x.size()))};
  auto loss_of = [&](Tape<double>* tape) {
    return DeepSupervisedLoss(tape, model.Forward(x, tape), labels).total;
  };
  for (const auto& v : vars) v.second->ZeroGrad();
  Tape<double> tape;
  tape.Backward(loss_of(&tape));
  std::vector<Matrix<double>> analytic;
  for (const auto& v : vars) analytic.push_back(v.second->grad);
  return CheckGradients([&]() { return loss_of(nullptr)->value(0, 0); }, vars, analytic);
}

BinaryVolume RandomMask(std::mt19937_64& rng, const Index3& d, double occupancy) {
  std::bernoulli_distribution keep(occupancy);
  BinaryVolume m(d);
  for (auto& v : m.values) v = keep(rng) ? 1 : 0;
  return m;
}

}  // namespace

void SuiteResult::Fail(const std::string& what) {
  if (pass) detail = what;
  pass = false;
}

SuiteResult EquivalenceSuite(int cases, uint64_t seed) {
  SuiteResult r;
  Timer timer(r);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> side(2, 24), chan(1, 8);
  std::uniform_real_distribution<double> occ(0.05, 1.0);
  double worst_f = 0.0, worst_d = 0.0;
  auto record = [&](const char* op, double err_d, double err_f) {
    r.checks += 2;
    worst_d = std::max(worst_d, err_d);
    worst_f = std::max(worst_f, err_f);
    if (!(err_d < 1e-10)) r.Fail(std::string(op) + Fmt(" double error %.3g", err_d));
    if (!(err_f < 1e-4)) r.Fail(std::string(op) + Fmt(" float error %.3g", err_f));
  };
  for (int c = 0; c < cases; ++c) {
    const Index3 dims{side(rng), side(rng), side(rng)};
    const int cin = chan(rng), cout = chan(rng);
    const SparseTensor<double> x = RandomTensor(rng, dims, occ(rng), cin);
    const SparseTensor<float> xf = WithValues<float>(x);
    const NaiveVolume nx = ToNaive(x, dims);

    const auto subm = RandomConv(rng, {3, 3, 3}, cin, cout, rng() % 2 == 0);
    const auto subm_ref = NaiveConv(nx, WeightsOf(subm), subm.kernel, cout, BiasOf(subm), true,
                                    {1, 1, 1});
    record("submanifold", MaxError(SubmConv<double>(nullptr, x, subm), subm_ref),
           MaxError(SubmConv<float>(nullptr, xf, ToFloat(subm)), subm_ref));

    const auto dw = RandomConv(rng, {3, 3, 3}, cin, cin, rng() % 2 == 0, true);
    const auto dw_ref = NaiveConv(nx, WeightsOf(dw), dw.kernel, cin, BiasOf(dw), true, {1, 1, 1});
    record("depthwise", MaxError(DepthwiseConv<double>(nullptr, x, dw), dw_ref),
           MaxError(DepthwiseConv<float>(nullptr, xf, ToFloat(dw)), dw_ref));

    const auto down = RandomConv(rng, {2, 2, 2}, cin, cout, rng() % 2 == 0);
    const auto down_ref = NaiveConv(nx, WeightsOf(down), down.kernel, cout, BiasOf(down), false,
                                    {2, 2, 2});
    const SparseTensor<double> y = StridedConv<double>(nullptr, x, down, {2, 2, 2});
    record("strided", MaxError(y, down_ref),
           MaxError(StridedConv<float>(nullptr, xf, ToFloat(down), {2, 2, 2}), down_ref));

    const auto up = RandomConv(rng, {2, 2, 2}, cout, cin, rng() % 2 == 0);
    const auto up_ref = NaiveTransposedConv(ToNaive(y, down_ref.dims), WeightsOf(up), up.kernel,
                                            cin, BiasOf(up), {2, 2, 2}, dims);
    record("transposed", MaxError(TransposedConv<double>(nullptr, y, up, {2, 2, 2}), up_ref),
           MaxError(TransposedConv<float>(nullptr, WithValues<float>(y), ToFloat(up), {2, 2, 2}),
                    up_ref));
  }
  if (r.pass) {
    r.detail = std::to_string(cases) + " cases, max error " + Fmt("%.2g (float), %.2g (double)",
                                                                  worst_f, worst_d);
  }
  return r;
}

SuiteResult GradientSuite(uint64_t seed) {
  SuiteResult r;
  Timer timer(r);
  constexpr double kTolerance = 1e-4;
  std::mt19937_64 rng(seed);
  const Index3 dims{5, 5, 4};
  const auto x = RandomTensor(rng, dims, 0.35, 3);
  const auto conv = RandomConv(rng, {3, 3, 3}, 3, 2, true);
  const auto dw = RandomConv(rng, {3, 3, 3}, 3, 3, true, true);
  const auto down = RandomConv(rng, {2, 2, 2}, 3, 4, true);
  const auto up = RandomConv(rng, {2, 2, 2}, 4, 3, true);
  auto norm = AffineNormParams<double>::Create(3, 1e-6);
  Randomize(rng, norm.gamma, 1.0);
  Randomize(rng, norm.beta, 1.0);
  auto lin = LinearParams<double>::Create(3, 5, true);
  Randomize(rng, lin.weight, 1.0);
  Randomize(rng, lin.bias, 1.0);
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
  double worst = 0.0;
  auto record = [&](const std::string& name, const FdReport& rep) {
    r.checks += rep.checked;
    worst = std::max(worst, rep.max_rel_error);
    if (rep.checked == 0) r.Fail(name + ": nothing checked");
    if (!(rep.max_rel_error < kTolerance)) {
      r.Fail(name + Fmt(": relative error %.3g at ", rep.max_rel_error) + rep.worst);
    }
  };
  uint64_t op_seed = seed + 1;
  for (const auto& c : cases) record(c.name, CheckOp(c.fwd, c.vars, op_seed++));

  ModelConfig tiny;
  tiny.stage_widths = {4, 8};
  tiny.stage_depths = {1, 1};
  tiny.decoder_blocks_per_stage = 1;
  tiny.ds_heads = 1;
  tiny.stem_bias = true;
  record("unet_2stage", CheckModel(tiny, seed + 100, {6, 6, 5}, 0.5));
  // A third stage adds a second supervised head.
  ModelConfig three = tiny;
  three.stage_widths = {4, 4, 8};
  three.stage_depths = {1, 1, 1};
  three.ds_heads = 2;
  record("unet_3stage_deep_supervision", CheckModel(three, seed + 200, {6, 6, 6}, 0.5));
  if (r.pass) {
    r.detail = std::to_string(r.checks) + " partial derivatives, max relative error " +
               Fmt("%.2g", worst);
  }
  return r;
}

SuiteResult LossScheduleSuite() {
  SuiteResult r;
  Timer timer(r);
  const std::vector<double> w = DeepSupervisionWeights(4);
  ++r.checks;
  if (w != std::vector<double>{1.0, 0.5, 0.25, 0.125}) r.Fail("deep-supervision weights");

  auto dice_case = [&](const char* name, std::vector<double> p, std::vector<double> t,
                       double expected) {
    ++r.checks;
    const double v = DiceLossValue(p, t);
    if (!(std::abs(v - expected) < 1e-6)) r.Fail(std::string(name) + Fmt(": %.9g vs %.9g", v, expected));
  };
  std::vector<double> ones(10, 1.0), zeros(10, 0.0), half(10, 0.0), first(10, 0.0);
  for (int i = 0; i < 5; ++i) half[static_cast<size_t>(i)] = 1.0;
  for (int i = 5; i < 10; ++i) first[static_cast<size_t>(i)] = 1.0;
  const double eps = kDefaultDiceEps;
  dice_case("dice perfect", ones, ones, 1.0 - (20.0 + eps) / (20.0 + eps));
  dice_case("dice disjoint", half, first, 1.0 - eps / (10.0 + eps));
  dice_case("dice nested", ones, half, 1.0 - (10.0 + eps) / (15.0 + eps));
  dice_case("dice perfect ~0", ones, ones, 0.0);
  dice_case("dice disjoint ~1", half, first, 1.0);
  dice_case("dice nested ~1/3", ones, half, 1.0 / 3.0);

  const TrainConfig cfg;
  auto lr_case = [&](int epoch, double expected) {
    ++r.checks;
    const double v = LrAtEpoch(cfg, epoch);
    if (!(std::abs(v - expected) <= 1e-12)) {
      r.Fail("lr at epoch " + std::to_string(epoch) + Fmt(": %.17g vs %.17g", v, expected));
    }
  };
  const double pi = std::acos(-1.0);
  for (int e = 1; e <= 99; ++e) lr_case(e, 5e-4);
  for (int e = 100; e <= 500; e += 25) {
    lr_case(e, 5e-4 * 0.5 * (1.0 + std::cos(pi * (e - 100) / 400.0)));
  }
  lr_case(300, 2.5e-4);
  lr_case(500, 0.0);
  if (r.pass) r.detail = std::to_string(r.checks) + " closed-form values";
  return r;
}

SuiteResult PipelinePropertySuite(int percentile_arrays, int phantom_cases, uint64_t seed) {
  SuiteResult r;
  Timer timer(r);
  std::mt19937_64 rng(seed);

  std::normal_distribution<double> hu(40.0, 120.0);
  std::uniform_real_distribution<double> pct(0.0, 100.0);
  for (int a = 0; a < percentile_arrays; ++a) {
    std::vector<double> v(1 + rng() % 2000);
    for (double& x : v) x = hu(rng);
    for (double p : {0.5, 99.5, pct(rng)}) {
      ++r.checks;
      const double got = Percentile(v, p), want = PercentileBySort(v, p);
      if (!(std::abs(got - want) <= 1e-12 * (1.0 + std::abs(want)))) {
        r.Fail(Fmt("percentile %.3f: %.17g", p, got) + Fmt(" vs %.17g", want));
      }
    }
  }

  for (const Index3 centre : {Index3{10, 10, 10}, Index3{2, 17, 0}}) {
    BinaryVolume m({21, 21, 21});
    m.at(centre[0], centre[1], centre[2]) = 1;
    const BinaryVolume d = Dilate(m, 11);
    for (int z = 0; z < 21; ++z) {
      for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 21; ++x) {
          const int dx = x - centre[0], dy = y - centre[1], dz = z - centre[2];
          const bool in_ball = (dx * dx + dy * dy + dz * dz) <= 25;
          ++r.checks;
          if ((d.at(x, y, z) != 0) != in_ball) r.Fail("dilation differs from the radius-5 ball");
        }
      }
    }
    if (centre[0] == 10) {
      ++r.checks;
      if (d.Count() != BallLatticeCount(5)) r.Fail("dilated singleton count");
    }
  }

  for (int t = 0; t < 40; ++t) {
    const BinaryVolume m = RandomMask(rng, {12, 12, 12}, 0.03 + 0.35 * (t % 5) / 4.0);
    for (int conn : {6, 26}) {
      ++r.checks;
      const auto comps = ConnectedComponents(m, conn);
      std::vector<int64_t> sizes;
      int64_t total = 0;
      for (const auto& c : comps) {
        sizes.push_back(c.size());
        total += c.size();
      }
      if (sizes != UnionFindComponentSizes(m, conn) || total != m.Count()) {
        r.Fail("connected components differ from union-find at connectivity " +
               std::to_string(conn));
      }
    }
  }

  {
    std::vector<ComponentROI> comps(3);
    comps[0].voxels.resize(49);
    comps[1].voxels.resize(50);
    comps[2].voxels.resize(51);
    const auto kept = FilterComponents(comps, 50);
    ++r.checks;
    if (kept.size() != 2 || kept[0].size() != 50 || kept[1].size() != 51) {
      r.Fail("size filter boundary at 50");
    }
  }

  ModelConfig tiny;
  tiny.stage_widths = {4, 8};
  tiny.stage_depths = {1, 1};
  tiny.decoder_blocks_per_stage = 1;
  tiny.ds_heads = 1;
  const auto model = SparseUNet<float>::Build(tiny, seed);
  PhantomParams pp;
  pp.dims = {40, 32, 32};
  for (int c = 0; c < phantom_cases; ++c) {
    const Phantom ph = MakePhantom(pp, seed + static_cast<uint64_t>(c));
    const BinaryVolume roi = Dilate(RandomMask(rng, pp.dims, 0.0015), 5);
    auto comps = ConnectedComponents(roi, 26);
    for (auto& comp : comps) {
      LiftToHighres(comp, ph.image.spacing(), ph.image.origin(), ph.image);
    }
    const auto preds = SegmentComponents(model, ph.image, comps, HUWindow{});
    std::set<int64_t> seen;
    bool injective = true;
    for (const auto& p : preds) {
      for (const auto& l : p.local) {
        const Index3 g{p.offset[0] + l[0], p.offset[1] + l[1], p.offset[2] + l[2]};
        injective = injective && InBounds(pp.dims, g) &&
                    seen.insert(LinearIndex(pp.dims, g[0], g[1], g[2])).second;
      }
    }
    std::set<int64_t> active;
    for (int64_t i = 0; i < VoxelCount(pp.dims); ++i) {
      if (roi.values[static_cast<size_t>(i)]) active.insert(i);
    }
    ++r.checks;
    if (!injective || seen != active) {
      r.Fail("crop/reassemble is not a bijection on phantom case " + std::to_string(c));
      continue;
    }
    const MultiLabelMask mask = Reassemble(preds, pp.dims, 0.5);
    bool consistent = true;
    for (const auto& p : preds) {
      for (size_t k = 0; k < p.local.size(); ++k) {
        const auto& l = p.local[k];
        const int64_t g = LinearIndex(pp.dims, p.offset[0] + l[0], p.offset[1] + l[1],
                                      p.offset[2] + l[2]);
        for (int ch = 0; ch < 3; ++ch) {
          consistent = consistent && (mask.channels[static_cast<size_t>(ch)][static_cast<size_t>(g)] != 0) ==
                                         (p.probs(static_cast<int64_t>(k), ch) >= 0.5f);
        }
      }
    }
    for (int ch = 0; ch < 3; ++ch) {
      for (int64_t i = 0; i < VoxelCount(pp.dims); ++i) {
        if (!roi.values[static_cast<size_t>(i)] &&
            mask.channels[static_cast<size_t>(ch)][static_cast<size_t>(i)]) {
          consistent = false;
        }
      }
    }
    ++r.checks;
    if (!consistent) r.Fail("reassembled mask disagrees with component predictions");
  }
  if (r.pass) r.detail = std::to_string(r.checks) + " checks";
  return r;
}

}  // namespace sparseseg::oracles
