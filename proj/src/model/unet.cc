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

#include "sparseseg/model/unet.h"

#include <random>
#include <utility>

#include "sparseseg/common/errors.h"

namespace sparseseg {
namespace {

constexpr double kInitStd = 0.02;

template <typename T>
class Initializer {
 public:
  Initializer(uint64_t seed, std::vector<NamedParam<T>>* params) : rng_(seed), params_(params) {}

  // Truncated normal for kernels; biases stay zero.
  void Kernel(const std::string& name, const VarPtr<T>& w) {
    std::normal_distribution<double> n(0.0, kInitStd);
    for (int64_t i = 0; i < w->value.size(); ++i) {
      double v;
      do {
        v = n(rng_);
      } while (std::abs(v) > 2.0 * kInitStd);
      w->value.data()[i] = static_cast<T>(v);
    }
    Add(name, w);
  }
  void Add(const std::string& name, const VarPtr<T>& v) {
    if (v) params_->push_back({name, v});
  }

  ConvParams<T> Conv(const std::string& name, std::array<int, 3> kernel, int cin, int cout,
                     bool bias, bool depthwise = false) {
    auto p = ConvParams<T>::Create(kernel, cin, cout, bias, depthwise);
    Kernel(name + ".weight", p.weight);
    Add(name + ".bias", p.bias);
    return p;
  }
  LinearParams<T> Linear(const std::string& name, int cin, int cout, bool bias) {
    auto p = LinearParams<T>::Create(cin, cout, bias);
    Kernel(name + ".weight", p.weight);
    Add(name + ".bias", p.bias);
    return p;
  }
  AffineNormParams<T> Norm(const std::string& name, int channels, double eps) {
    auto p = AffineNormParams<T>::Create(channels, eps);
    Add(name + ".gamma", p.gamma);
    Add(name + ".beta", p.beta);
    return p;
  }
  ConvNeXtBlock<T> Block(const std::string& name, int c, const ModelConfig& cfg) {
    const int k = cfg.conv_kernel;
    ConvNeXtBlock<T> b;
    b.dw = Conv(name + ".dw", {k, k, k}, c, c, true, true);
    b.norm = Norm(name + ".norm", c, cfg.norm_eps);
    b.expand = Linear(name + ".expand", c, c * cfg.mlp_expansion, true);
    b.grn = Norm(name + ".grn", c * cfg.mlp_expansion, cfg.norm_eps);
    b.project = Linear(name + ".project", c * cfg.mlp_expansion, c, true);
    return b;
  }

 private:
  std::mt19937_64 rng_;
  std::vector<NamedParam<T>>* params_;
};

std::array<int, 3> Cube(int k) { return {k, k, k}; }

}  // namespace

template <typename T>
SparseUNet<T> SparseUNet<T>::Build(const ModelConfig& cfg, uint64_t seed) {
  cfg.Validate();
  SparseUNet m;
  m.cfg_ = cfg;
  Initializer<T> init(seed, &m.params_);
  const auto& widths = cfg.stage_widths;
  const int stages = cfg.stages();
  const int dk = cfg.down_kernel;

  m.stem_ = init.Linear("stem", cfg.in_channels, widths[0], cfg.stem_bias);
  m.stem_norm_ = init.Norm("stem.norm", widths[0], cfg.norm_eps);
  for (int s = 0; s < stages; ++s) {
    const std::string prefix = "encoder." + std::to_string(s);
    if (s > 0) {
      DownSample<T> d;
      d.norm = init.Norm("down." + std::to_string(s - 1) + ".norm", widths[s - 1], cfg.norm_eps);
      d.conv = init.Conv("down." + std::to_string(s - 1) + ".conv", Cube(dk), widths[s - 1],
                         widths[s], true);
      m.down_.push_back(std::move(d));
    }
    std::vector<ConvNeXtBlock<T>> blocks;
    for (int b = 0; b < cfg.stage_depths[s]; ++b) {
      blocks.push_back(init.Block(prefix + ".block." + std::to_string(b), widths[s], cfg));
    }
    m.encoder_.push_back(std::move(blocks));
  }
  m.decoder_.resize(static_cast<size_t>(std::max(0, stages - 1)));
  for (int s = stages - 2; s >= 0; --s) {
    const std::string prefix = "decoder." + std::to_string(s);
    DecoderStage<T>& d = m.decoder_[static_cast<size_t>(s)];
    d.norm = init.Norm(prefix + ".norm", widths[s + 1], cfg.norm_eps);
    d.up = init.Conv(prefix + ".up", Cube(dk), widths[s + 1], widths[s], true);
    for (int b = 0; b < cfg.decoder_blocks_per_stage; ++b) {
      d.blocks.push_back(init.Block(prefix + ".block." + std::to_string(b), widths[s], cfg));
    }
  }
  for (int h = 0; h < cfg.built_heads(); ++h) {
    const std::string prefix = "head." + std::to_string(h);
    Head<T> head;
    head.norm = init.Norm(prefix + ".norm", widths[h], cfg.norm_eps);
    head.block = init.Block(prefix + ".block", widths[h], cfg);
    head.classifier = init.Conv(prefix + ".classifier", Cube(cfg.head_kernel), widths[h],
                                cfg.num_classes, cfg.head_bias);
    m.heads_.push_back(std::move(head));
  }
  return m;
}

template <typename T>
int64_t SparseUNet<T>::ParameterCount() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.var->value.size();
  return n;
}

template <typename T>
void SparseUNet<T>::ZeroGrad() const {
  for (const auto& p : params_) p.var->ZeroGrad();
}

template <typename T>
SparseTensor<T> SparseUNet<T>::Block(const ConvNeXtBlock<T>& b, const SparseTensor<T>& x,
                                     Tape<T>* tape) const {
  auto h = DepthwiseConv(tape, x, b.dw);
  h = LayerNorm(tape, h, b.norm);
  h = PointwiseLinear(tape, h, b.expand);
  h = Gelu(tape, h);
  h = Grn(tape, h, b.grn);
  h = PointwiseLinear(tape, h, b.project);
  return Add(tape, x, h);
}

template <typename T>
std::vector<SparseTensor<T>> SparseUNet<T>::Forward(const SparseTensor<T>& x, Tape<T>* tape,
                                                    int num_heads) const {
  if (x.size() == 0) throw InvalidArgument("forward: empty input tensor");
  if (x.stride() != Stride{1, 1, 1}) throw InvalidArgument("forward: input stride must be 1");
  if (num_heads < 0) num_heads = cfg_.ds_heads;
  if (num_heads < 1 || num_heads > head_count()) {
    throw InvalidArgument("forward: requested " + std::to_string(num_heads) + " heads, model has " +
                          std::to_string(head_count()));
  }
  const std::array<int, 3> factor = Cube(cfg_.down_kernel);
  const int stages = cfg_.stages();

  std::vector<SparseTensor<T>> skips;
  auto h = LayerNorm(tape, PointwiseLinear(tape, x, stem_), stem_norm_);
  for (int s = 0; s < stages; ++s) {
    if (s > 0) {
      const auto& d = down_[static_cast<size_t>(s - 1)];
      h = StridedConv(tape, LayerNorm(tape, h, d.norm), d.conv, factor);
    }
    for (const auto& b : encoder_[static_cast<size_t>(s)]) h = Block(b, h, tape);
    skips.push_back(h);
  }
  // Decoder outputs kept only for levels that feed a requested head.
  std::vector<SparseTensor<T>> levels(static_cast<size_t>(num_heads));
  if (stages == 1) levels[0] = h;
  for (int s = stages - 2; s >= 0; --s) {
    const auto& d = decoder_[static_cast<size_t>(s)];
    h = TransposedConv(tape, LayerNorm(tape, h, d.norm), d.up, factor);
    h = Add(tape, h, skips[static_cast<size_t>(s)]);
    for (const auto& b : d.blocks) h = Block(b, h, tape);
    if (s < num_heads) levels[static_cast<size_t>(s)] = h;
  }
  std::vector<SparseTensor<T>> out;
  for (int i = 0; i < num_heads; ++i) {
    const auto& head = heads_[static_cast<size_t>(i)];
    auto y = LayerNorm(tape, levels[static_cast<size_t>(i)], head.norm);
    y = Block(head.block, y, tape);
    y = SubmConv(tape, y, head.classifier);
    out.push_back(Sigmoid(tape, y));
  }
  return out;
}

template <typename T>
DenseVolume<T> SparseUNet<T>::DenseBlock(const ConvNeXtBlock<T>& b, const DenseVolume<T>& x,
                                         const DenseMask& mask) const {
  auto h = DenseDepthwiseConv(x, b.dw);
  ApplyMask(h, mask);
  h = DenseLayerNorm(h, b.norm);
  ApplyMask(h, mask);
  h = DensePointwiseLinear(h, b.expand);
  ApplyMask(h, mask);
  DenseGeluInPlace(h);
  h = DenseGrn(h, b.grn);
  ApplyMask(h, mask);
  h = DensePointwiseLinear(h, b.project);
  ApplyMask(h, mask);
  DenseAddInPlace(h, x);
  return h;
}

template <typename T>
std::vector<DenseVolume<T>> SparseUNet<T>::DenseForward(const DenseVolume<T>& x,
                                                        const DenseMask& mask,
                                                        int num_heads) const {
  if (num_heads < 0) num_heads = cfg_.ds_heads;
  if (num_heads < 1 || num_heads > head_count()) {
    throw InvalidArgument("dense forward: bad head count");
  }
  if (mask.dims != x.dims || mask.batch != x.batch) {
    throw ShapeMismatch("dense forward: mask does not match input");
  }
  const std::array<int, 3> factor = Cube(cfg_.down_kernel);
  const int stages = cfg_.stages();
  std::vector<DenseMask> masks{mask};
  for (int s = 1; s < stages; ++s) masks.push_back(DownsampleMask(masks.back(), factor));

  std::vector<DenseVolume<T>> skips;
  auto h = DensePointwiseLinear(x, stem_);
  ApplyMask(h, masks[0]);
  h = DenseLayerNorm(h, stem_norm_);
  ApplyMask(h, masks[0]);
  for (int s = 0; s < stages; ++s) {
    const DenseMask& m = masks[static_cast<size_t>(s)];
    if (s > 0) {
      const auto& d = down_[static_cast<size_t>(s - 1)];
      h = DenseLayerNorm(h, d.norm);
      ApplyMask(h, masks[static_cast<size_t>(s - 1)]);
      h = DenseConv(h, d.conv, factor);
      ApplyMask(h, m);
    }
    for (const auto& b : encoder_[static_cast<size_t>(s)]) h = DenseBlock(b, h, m);
    skips.push_back(h);
  }
  std::vector<DenseVolume<T>> levels(static_cast<size_t>(num_heads));
  if (stages == 1) levels[0] = h;
  for (int s = stages - 2; s >= 0; --s) {
    const DenseMask& m = masks[static_cast<size_t>(s)];
    const auto& d = decoder_[static_cast<size_t>(s)];
    h = DenseLayerNorm(h, d.norm);
    ApplyMask(h, masks[static_cast<size_t>(s + 1)]);
    h = DenseTransposedConv(h, d.up, factor, m.dims);
    ApplyMask(h, m);
    DenseAddInPlace(h, skips[static_cast<size_t>(s)]);
    skips[static_cast<size_t>(s)] = DenseVolume<T>();
    for (const auto& b : d.blocks) h = DenseBlock(b, h, m);
    if (s < num_heads) levels[static_cast<size_t>(s)] = h;
  }
  std::vector<DenseVolume<T>> out;
  for (int i = 0; i < num_heads; ++i) {
    const DenseMask& m = masks[static_cast<size_t>(i)];
    const auto& head = heads_[static_cast<size_t>(i)];
    auto y = DenseLayerNorm(levels[static_cast<size_t>(i)], head.norm);
    ApplyMask(y, m);
    y = DenseBlock(head.block, y, m);
    y = DenseConv(y, head.classifier, {1, 1, 1});
    DenseSigmoidInPlace(y);
    ApplyMask(y, m);
    out.push_back(std::move(y));
  }
  return out;
}

template class SparseUNet<float>;
template class SparseUNet<double>;

}  // namespace sparseseg
