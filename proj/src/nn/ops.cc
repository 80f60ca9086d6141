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

#include "sparseseg/nn/ops.h"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "sparseseg/common/errors.h"

namespace sparseseg {
namespace {

template <typename T>
constexpr T kInvSqrt2 = static_cast<T>(0.70710678118654752440L);

template <typename T>
bool NeedsGrad(const VarPtr<T>& v) {
  return v && v->requires_grad;
}

template <typename T>
SparseTensor<T> Output(const SparseTensor<T>& like, CoordinatePyramid::SetPtr coords,
                       Matrix<T> value, bool requires_grad) {
  return {like.pyramid, std::move(coords), MakeVar(std::move(value), requires_grad)};
}

template <typename T>
void CheckChannels(const SparseTensor<T>& x, int expected, const char* op) {
  if (x.channels() != expected) {
    throw ShapeMismatch(std::string(op) + ": input has " + std::to_string(x.channels()) +
                        " channels, parameters expect " + std::to_string(expected));
  }
}

bool IsIdentityPairing(const TrackedVector<int32_t>& in, const TrackedVector<int32_t>& out,
                       int64_t n_in, int64_t n_out) {
  if (static_cast<int64_t>(in.size()) != n_in || n_in != n_out) return false;
  for (size_t r = 0; r < in.size(); ++r) {
    if (in[r] != static_cast<int32_t>(r) || out[r] != static_cast<int32_t>(r)) return false;
  }
  return true;
}

// Destination for one op's gradient contribution. A fresh gradient is written
// in place; an existing one receives the finished contribution in a single
// add, so repeated backward passes accumulate exactly.
template <typename T>
class GradTarget {
 public:
  explicit GradTarget(const VarPtr<T>& v) : var_(NeedsGrad(v) ? v.get() : nullptr) {
    if (!var_) return;
    direct_ = !var_->has_grad();
    if (direct_) {
      var_->Grad();
    } else {
      local_ = Matrix<T>(var_->value.rows(), var_->value.cols());
    }
  }
  GradTarget(const GradTarget&) = delete;
  GradTarget& operator=(const GradTarget&) = delete;
  ~GradTarget() {
    if (var_ && !direct_) var_->grad.map() += local_.map();
  }

  Matrix<T>* get() { return var_ ? (direct_ ? &var_->grad : &local_) : nullptr; }

 private:
  Variable<T>* var_;
  bool direct_ = false;
  Matrix<T> local_;
};

template <typename T>
void AddBias(Matrix<T>& y, const VarPtr<T>& bias) {
  if (!bias) return;
  y.map().rowwise() += bias->value.map().row(0);
}

template <typename T>
void AccumulateBiasGrad(const VarPtr<T>& bias, const Matrix<T>& dy) {
  if (!NeedsGrad(bias) || dy.rows() == 0) return;
  bias->Grad().map().row(0) += dy.map().colwise().sum();
}

// Pair lists for one convolution direction.
struct PairLists {
  const std::vector<TrackedVector<int32_t>>* in;
  const std::vector<TrackedVector<int32_t>>* out;
};

size_t MaxPairs(const PairLists& lists) {
  size_t n = 0;
  for (const auto& l : *lists.in) n = std::max(n, l.size());
  return n;
}

template <typename T>
void GatherScatterForward(const Matrix<T>& x, const Matrix<T>& w, int cin, int cout,
                          const PairLists& lists, Matrix<T>& y) {
  const size_t max_pairs = MaxPairs(lists);
  Matrix<T> gathered(static_cast<int64_t>(max_pairs), cin);
  Matrix<T> product(static_cast<int64_t>(max_pairs), cout);
  for (size_t k = 0; k < lists.in->size(); ++k) {
    const auto& in_rows = (*lists.in)[k];
    const auto& out_rows = (*lists.out)[k];
    const auto n = static_cast<int64_t>(in_rows.size());
    if (n == 0) continue;
    const auto wk = w.map().middleRows(static_cast<int64_t>(k) * cin, cin);
    if (IsIdentityPairing(in_rows, out_rows, x.rows(), y.rows())) {
      y.map().noalias() += x.map() * wk;
      continue;
    }
    for (int64_t r = 0; r < n; ++r) {
      std::copy_n(x.row(in_rows[static_cast<size_t>(r)]), cin, gathered.row(r));
    }
    product.map().topRows(n).noalias() = gathered.map().topRows(n) * wk;
    for (int64_t r = 0; r < n; ++r) {
      T* dst = y.row(out_rows[static_cast<size_t>(r)]);
      const T* src = product.row(r);
      for (int c = 0; c < cout; ++c) dst[c] += src[c];
    }
  }
}

// dx += scatter(dy W_k^T), dw_k += gather(x)^T gather(dy).
template <typename T>
void GatherScatterBackward(const Matrix<T>& x, const Matrix<T>& w, const Matrix<T>& dy,
                           int cin, int cout, const PairLists& lists, Matrix<T>* dx,
                           Matrix<T>* dw) {
  const size_t max_pairs = MaxPairs(lists);
  Matrix<T> gx(static_cast<int64_t>(max_pairs), cin);
  Matrix<T> gdy(static_cast<int64_t>(max_pairs), cout);
  Matrix<T> back(static_cast<int64_t>(max_pairs), cin);
  for (size_t k = 0; k < lists.in->size(); ++k) {
    const auto& in_rows = (*lists.in)[k];
    const auto& out_rows = (*lists.out)[k];
    const auto n = static_cast<int64_t>(in_rows.size());
    if (n == 0) continue;
    const auto row0 = static_cast<int64_t>(k) * cin;
    if (IsIdentityPairing(in_rows, out_rows, x.rows(), dy.rows())) {
      if (dx) dx->map().noalias() += dy.map() * w.map().middleRows(row0, cin).transpose();
      if (dw) dw->map().middleRows(row0, cin).noalias() += x.map().transpose() * dy.map();
      continue;
    }
    for (int64_t r = 0; r < n; ++r) {
      std::copy_n(dy.row(out_rows[static_cast<size_t>(r)]), cout, gdy.row(r));
    }
    if (dx) {
      back.map().topRows(n).noalias() =
          gdy.map().topRows(n) * w.map().middleRows(row0, cin).transpose();
      for (int64_t r = 0; r < n; ++r) {
        T* dst = dx->row(in_rows[static_cast<size_t>(r)]);
        const T* src = back.row(r);
        for (int c = 0; c < cin; ++c) dst[c] += src[c];
      }
    }
    if (dw) {
      for (int64_t r = 0; r < n; ++r) {
        std::copy_n(x.row(in_rows[static_cast<size_t>(r)]), cin, gx.row(r));
      }
      dw->map().middleRows(row0, cin).noalias() +=
          gx.map().topRows(n).transpose() * gdy.map().topRows(n);
    }
  }
}

template <typename T>
SparseTensor<T> ConvImpl(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p,
                         std::shared_ptr<const KernelMap> map_owner, PairLists lists,
                         CoordinatePyramid::SetPtr out_coords, const char* op) {
  if (p.depthwise) throw InvalidArgument(std::string(op) + ": depthwise parameters");
  CheckChannels(x, p.in_channels, op);
  if (static_cast<int>(lists.in->size()) != p.volume()) {
    throw ShapeMismatch(std::string(op) + ": kernel map volume differs from weights");
  }
  Matrix<T> y(out_coords->size(), p.out_channels);
  GatherScatterForward(x.values(), p.weight->value, p.in_channels, p.out_channels, lists, y);
  AddBias(y, p.bias);
  const bool grad = NeedsGrad(x.feats) || NeedsGrad(p.weight) || NeedsGrad(p.bias);
  SparseTensor<T> out = Output(x, std::move(out_coords), std::move(y), grad && tape);
  if (tape && grad) {
    tape->Record([xv = x.feats, yv = out.feats, p, map_owner, lists]() {
      if (!yv->has_grad()) return;
      GradTarget<T> dx(xv), dw(p.weight);
      GatherScatterBackward(xv->value, p.weight->value, yv->grad, p.in_channels,
                            p.out_channels, lists, dx.get(), dw.get());
      AccumulateBiasGrad(p.bias, yv->grad);
    });
  }
  return out;
}

template <typename T>
SparseTensor<T> DepthwiseImpl(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p,
                              std::shared_ptr<const KernelMap> map_owner, const KernelMap& map) {
  if (!p.depthwise || p.in_channels != p.out_channels) {
    throw InvalidArgument("DepthwiseConv: parameters are not depthwise");
  }
  CheckChannels(x, p.in_channels, "DepthwiseConv");
  if (map.volume() != p.volume()) {
    throw ShapeMismatch("DepthwiseConv: kernel map volume differs from weights");
  }
  const int channels = p.in_channels;
  Matrix<T> y(x.size(), channels);
  const Matrix<T>& xv = x.values();
  const Matrix<T>& w = p.weight->value;
  for (int k = 0; k < map.volume(); ++k) {
    const auto& in_rows = map.in_rows[static_cast<size_t>(k)];
    const auto& out_rows = map.out_rows[static_cast<size_t>(k)];
    const T* wk = w.row(k);
    for (size_t r = 0; r < in_rows.size(); ++r) {
      const T* src = xv.row(in_rows[r]);
      T* dst = y.row(out_rows[r]);
      for (int c = 0; c < channels; ++c) dst[c] += src[c] * wk[c];
    }
  }
  AddBias(y, p.bias);
  const bool grad = NeedsGrad(x.feats) || NeedsGrad(p.weight) || NeedsGrad(p.bias);
  SparseTensor<T> out = Output(x, x.coords, std::move(y), grad && tape);
  if (tape && grad) {
    const KernelMap* map_ptr = &map;
    tape->Record([xv = x.feats, yv = out.feats, p, map_owner, map_ptr]() {
      if (!yv->has_grad()) return;
      const KernelMap& m = *map_ptr;
      const int ch = p.in_channels;
      const Matrix<T>& dy = yv->grad;
      GradTarget<T> dx_target(xv), dw_target(p.weight);
      Matrix<T>* dx = dx_target.get();
      Matrix<T>* dw = dw_target.get();
      for (int k = 0; k < m.volume(); ++k) {
        const auto& in_rows = m.in_rows[static_cast<size_t>(k)];
        const auto& out_rows = m.out_rows[static_cast<size_t>(k)];
        const T* wk = p.weight->value.row(k);
        for (size_t r = 0; r < in_rows.size(); ++r) {
          const T* g = dy.row(out_rows[r]);
          if (dx) {
            T* d = dx->row(in_rows[r]);
            for (int c = 0; c < ch; ++c) d[c] += g[c] * wk[c];
          }
          if (dw) {
            const T* src = xv->value.row(in_rows[r]);
            T* d = dw->row(k);
            for (int c = 0; c < ch; ++c) d[c] += g[c] * src[c];
          }
        }
      }
      AccumulateBiasGrad(p.bias, dy);
    });
  }
  return out;
}

}  // namespace

template <typename T>
ConvParams<T> ConvParams<T>::Create(std::array<int, 3> kernel, int in_channels,
                                    int out_channels, bool with_bias, bool depthwise) {
  if (in_channels <= 0 || out_channels <= 0) {
    throw InvalidArgument("convolution channels must be positive");
  }
  if (depthwise && in_channels != out_channels) {
    throw InvalidArgument("depthwise convolution needs C_in == C_out");
  }
  ConvParams p;
  p.kernel = kernel;
  p.in_channels = in_channels;
  p.out_channels = out_channels;
  p.depthwise = depthwise;
  const int volume = p.volume();
  p.weight = depthwise ? MakeVar(Matrix<T>(volume, in_channels), true)
                       : MakeVar(Matrix<T>(static_cast<int64_t>(volume) * in_channels,
                                           out_channels),
                                 true);
  if (with_bias) p.bias = MakeVar(Matrix<T>(1, out_channels), true);
  return p;
}

template <typename T>
LinearParams<T> LinearParams<T>::Create(int in_channels, int out_channels, bool with_bias) {
  if (in_channels <= 0 || out_channels <= 0) {
    throw InvalidArgument("linear channels must be positive");
  }
  LinearParams p;
  p.weight = MakeVar(Matrix<T>(in_channels, out_channels), true);
  if (with_bias) p.bias = MakeVar(Matrix<T>(1, out_channels), true);
  return p;
}

template <typename T>
AffineNormParams<T> AffineNormParams<T>::Create(int channels, double eps, T gamma_init) {
  if (!(eps > 0.0)) throw InvalidArgument("normalisation eps must be positive");
  AffineNormParams p;
  p.gamma = MakeVar(Matrix<T>(1, channels, gamma_init), true);
  p.beta = MakeVar(Matrix<T>(1, channels), true);
  p.eps = eps;
  return p;
}

template <typename T>
SparseTensor<T> SubmConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p) {
  auto map = x.pyramid->SubmanifoldMap(x.stride(), p.kernel);
  return ConvImpl(tape, x, p, map, PairLists{&map->in_rows, &map->out_rows}, x.coords,
                  "SubmConv");
}

template <typename T>
SparseTensor<T> SubmConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p,
                         const KernelMap& map) {
  if (map.in_size != x.size() || map.out_size != x.size()) {
    throw ShapeMismatch("SubmConv: kernel map was built for a different coordinate set");
  }
  auto owner = std::make_shared<const KernelMap>(map);
  return ConvImpl(tape, x, p, owner, PairLists{&owner->in_rows, &owner->out_rows}, x.coords,
                  "SubmConv");
}

template <typename T>
SparseTensor<T> StridedConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p,
                            const std::array<int, 3>& factor) {
  auto map = x.pyramid->StridedMap(x.stride(), factor, p.kernel);
  auto out_coords = x.pyramid->Lookup(MulStride(x.stride(), factor));
  return ConvImpl(tape, x, p, map, PairLists{&map->in_rows, &map->out_rows},
                  std::move(out_coords), "StridedConv");
}

template <typename T>
SparseTensor<T> TransposedConv(Tape<T>* tape, const SparseTensor<T>& x,
                               const ConvParams<T>& p, const std::array<int, 3>& factor) {
  Stride target;
  for (int a = 0; a < 3; ++a) {
    if (factor[a] < 1 || x.stride()[a] % factor[a] != 0) {
      throw InvalidArgument("TransposedConv: stride " + StrideToString(x.stride()) +
                            " not divisible by factor");
    }
    target[a] = x.stride()[a] / factor[a];
  }
  auto fine = x.pyramid->Lookup(target);  // throws when the level is missing
  auto map = x.pyramid->StridedMap(target, factor, p.kernel);
  if (map->out_size != x.size()) {
    throw ShapeMismatch("TransposedConv: input is not the downsampled target level");
  }
  // Roles swapped: coarse rows feed fine rows.
  return ConvImpl(tape, x, p, map, PairLists{&map->out_rows, &map->in_rows}, std::move(fine),
                  "TransposedConv");
}

template <typename T>
SparseTensor<T> DepthwiseConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p) {
  auto map = x.pyramid->SubmanifoldMap(x.stride(), p.kernel);
  return DepthwiseImpl(tape, x, p, map, *map);
}

template <typename T>
SparseTensor<T> DepthwiseConv(Tape<T>* tape, const SparseTensor<T>& x, const ConvParams<T>& p,
                              const KernelMap& map) {
  if (map.in_size != x.size() || map.out_size != x.size()) {
    throw ShapeMismatch("DepthwiseConv: kernel map was built for a different coordinate set");
  }
  auto owner = std::make_shared<const KernelMap>(map);
  return DepthwiseImpl(tape, x, p, owner, *owner);
}

template <typename T>
SparseTensor<T> AvgPool(Tape<T>* tape, const SparseTensor<T>& x, const std::array<int, 3>& factor) {
  auto map = x.pyramid->StridedMap(x.stride(), factor, factor);
  auto out_coords = x.pyramid->Lookup(MulStride(x.stride(), factor));
  const int channels = x.channels();
  Matrix<T> y(out_coords->size(), channels);
  std::vector<int32_t> counts(static_cast<size_t>(out_coords->size()), 0);
  for (int k = 0; k < map->volume(); ++k) {
    const auto& in_rows = map->in_rows[static_cast<size_t>(k)];
    const auto& out_rows = map->out_rows[static_cast<size_t>(k)];
    for (size_t r = 0; r < in_rows.size(); ++r) {
      const T* src = x.values().row(in_rows[r]);
      T* dst = y.row(out_rows[r]);
      for (int c = 0; c < channels; ++c) dst[c] += src[c];
      ++counts[static_cast<size_t>(out_rows[r])];
    }
  }
  for (int64_t j = 0; j < y.rows(); ++j) {
    const T inv = T(1) / static_cast<T>(counts[static_cast<size_t>(j)]);
    for (int c = 0; c < channels; ++c) y(j, c) *= inv;
  }
  const bool grad = NeedsGrad(x.feats);
  SparseTensor<T> out = Output(x, std::move(out_coords), std::move(y), grad && tape);
  if (tape && grad) {
    tape->Record([xv = x.feats, yv = out.feats, map, counts = std::move(counts)]() {
      if (!yv->has_grad()) return;
      Matrix<T>& dx = xv->Grad();
      const int ch = static_cast<int>(dx.cols());
      for (int k = 0; k < map->volume(); ++k) {
        const auto& in_rows = map->in_rows[static_cast<size_t>(k)];
        const auto& out_rows = map->out_rows[static_cast<size_t>(k)];
        for (size_t r = 0; r < in_rows.size(); ++r) {
          const T inv = T(1) / static_cast<T>(counts[static_cast<size_t>(out_rows[r])]);
          const T* g = yv->grad.row(out_rows[r]);
          T* d = dx.row(in_rows[r]);
          for (int c = 0; c < ch; ++c) d[c] += g[c] * inv;
        }
      }
    });
  }
  return out;
}

template <typename T>
SparseTensor<T> LayerNorm(Tape<T>* tape, const SparseTensor<T>& x, const AffineNormParams<T>& p) {
  const int channels = x.channels();
  if (channels < 1) throw InvalidArgument("LayerNorm needs at least one channel");
  if (p.gamma->value.cols() != channels) {
    throw ShapeMismatch("LayerNorm: gamma has " + std::to_string(p.gamma->value.cols()) +
                        " channels, input has " + std::to_string(channels));
  }
  const int64_t n = x.size();
  Matrix<T> xhat(n, channels);
  std::vector<T> inv_std(static_cast<size_t>(n));
  Matrix<T> y(n, channels);
  const T* gamma = p.gamma->value.data();
  const T* beta = p.beta->value.data();
  const T eps = static_cast<T>(p.eps);
  for (int64_t r = 0; r < n; ++r) {
    const T* src = x.values().row(r);
    T mean = 0;
    for (int c = 0; c < channels; ++c) mean += src[c];
    mean /= channels;
    T var = 0;
    for (int c = 0; c < channels; ++c) var += (src[c] - mean) * (src[c] - mean);
    var /= channels;
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(r)] = is;
    T* h = xhat.row(r);
    T* dst = y.row(r);
    for (int c = 0; c < channels; ++c) {
      h[c] = (src[c] - mean) * is;
      dst[c] = gamma[c] * h[c] + beta[c];
    }
  }
  const bool grad = NeedsGrad(x.feats) || NeedsGrad(p.gamma) || NeedsGrad(p.beta);
  SparseTensor<T> out = Output(x, x.coords, std::move(y), grad && tape);
  if (tape && grad) {
    tape->Record([xv = x.feats, yv = out.feats, p, xhat = std::move(xhat),
                  inv_std = std::move(inv_std)]() {
      if (!yv->has_grad()) return;
      const Matrix<T>& dy = yv->grad;
      const int ch = static_cast<int>(dy.cols());
      const T* gamma = p.gamma->value.data();
      if (NeedsGrad(p.gamma)) p.gamma->Grad().map().row(0) +=
          (dy.map().array() * xhat.map().array()).matrix().colwise().sum();
      if (NeedsGrad(p.beta)) p.beta->Grad().map().row(0) += dy.map().colwise().sum();
      if (!NeedsGrad(xv)) return;
      Matrix<T>& dx = xv->Grad();
      std::vector<T> dh(static_cast<size_t>(ch));
      for (int64_t r = 0; r < dy.rows(); ++r) {
        const T* g = dy.row(r);
        const T* h = xhat.row(r);
        T mean_dh = 0, mean_dh_h = 0;
        for (int c = 0; c < ch; ++c) {
          dh[static_cast<size_t>(c)] = g[c] * gamma[c];
          mean_dh += dh[static_cast<size_t>(c)];
          mean_dh_h += dh[static_cast<size_t>(c)] * h[c];
        }
        mean_dh /= ch;
        mean_dh_h /= ch;
        const T is = inv_std[static_cast<size_t>(r)];
        T* d = dx.row(r);
        for (int c = 0; c < ch; ++c) {
          d[c] += is * (dh[static_cast<size_t>(c)] - mean_dh - h[c] * mean_dh_h);
        }
      }
    });
  }
  return out;
}

template <typename T>
SparseTensor<T> Grn(Tape<T>* tape, const SparseTensor<T>& x, const AffineNormParams<T>& p) {
  const int channels = x.channels();
  if (p.gamma->value.cols() != channels) {
    throw ShapeMismatch("Grn: gamma has " + std::to_string(p.gamma->value.cols()) +
                        " channels, input has " + std::to_string(channels));
  }
  const std::vector<int64_t> offsets = x.coords->BatchOffsets();
  const size_t items = offsets.size() - 1;
  const T eps = static_cast<T>(p.eps);
  // Per batch item: g (C), n (C), mean(g).
  Matrix<T> g(static_cast<int64_t>(items), channels);
  Matrix<T> nrm(static_cast<int64_t>(items), channels);
  std::vector<T> mean_g(items);
  Matrix<T> y(x.size(), channels);
  const T* gamma = p.gamma->value.data();
  const T* beta = p.beta->value.data();
  for (size_t b = 0; b < items; ++b) {
    const auto bi = static_cast<int64_t>(b);
    for (int64_t r = offsets[b]; r < offsets[b + 1]; ++r) {
      const T* src = x.values().row(r);
      for (int c = 0; c < channels; ++c) g(bi, c) += src[c] * src[c];
    }
    T m = 0;
    for (int c = 0; c < channels; ++c) {
      g(bi, c) = std::sqrt(g(bi, c));
      m += g(bi, c);
    }
    m /= channels;
    mean_g[b] = m;
    for (int c = 0; c < channels; ++c) nrm(bi, c) = g(bi, c) / (m + eps);
    for (int64_t r = offsets[b]; r < offsets[b + 1]; ++r) {
      const T* src = x.values().row(r);
      T* dst = y.row(r);
      for (int c = 0; c < channels; ++c) {
        dst[c] = gamma[c] * (src[c] * nrm(bi, c)) + beta[c] + src[c];
      }
    }
  }
  const bool grad = NeedsGrad(x.feats) || NeedsGrad(p.gamma) || NeedsGrad(p.beta);
  SparseTensor<T> out = Output(x, x.coords, std::move(y), grad && tape);
  if (tape && grad) {
    tape->Record([xv = x.feats, yv = out.feats, p, offsets, g = std::move(g),
                  nrm = std::move(nrm), mean_g = std::move(mean_g), eps]() {
      if (!yv->has_grad()) return;
      const Matrix<T>& dy = yv->grad;
      const Matrix<T>& xs = xv->value;
      const int ch = static_cast<int>(dy.cols());
      const T* gamma = p.gamma->value.data();
      GradTarget<T> dgamma_target(p.gamma), dbeta_target(p.beta);
      Matrix<T>* dgamma = dgamma_target.get();
      Matrix<T>* dbeta = dbeta_target.get();
      Matrix<T>* dx = NeedsGrad(xv) ? &xv->Grad() : nullptr;
      std::vector<T> dn(static_cast<size_t>(ch)), dg(static_cast<size_t>(ch));
      for (size_t b = 0; b + 1 < offsets.size(); ++b) {
        const auto bi = static_cast<int64_t>(b);
        std::fill(dn.begin(), dn.end(), T(0));
        for (int64_t r = offsets[b]; r < offsets[b + 1]; ++r) {
          const T* gy = dy.row(r);
          const T* src = xs.row(r);
          for (int c = 0; c < ch; ++c) {
            if (dgamma) (*dgamma)(0, c) += gy[c] * src[c] * nrm(bi, c);
            if (dbeta) (*dbeta)(0, c) += gy[c];
            dn[static_cast<size_t>(c)] += gy[c] * gamma[c] * src[c];
          }
        }
        if (!dx) continue;
        const T denom = mean_g[b] + eps;
        T cross = 0;
        for (int c = 0; c < ch; ++c) cross += dn[static_cast<size_t>(c)] * g(bi, c);
        for (int c = 0; c < ch; ++c) {
          dg[static_cast<size_t>(c)] =
              dn[static_cast<size_t>(c)] / denom - cross / (static_cast<T>(ch) * denom * denom);
        }
        for (int64_t r = offsets[b]; r < offsets[b + 1]; ++r) {
          const T* gy = dy.row(r);
          const T* src = xs.row(r);
          T* d = dx->row(r);
          for (int c = 0; c < ch; ++c) {
            T v = gy[c] * (gamma[c] * nrm(bi, c) + T(1));
            if (g(bi, c) > T(0)) v += dg[static_cast<size_t>(c)] * src[c] / g(bi, c);
            d[c] += v;
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
T GeluScalar(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * kInvSqrt2<T>));
}

template <typename T>
T SigmoidScalar(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
SparseTensor<T> Gelu(Tape<T>* tape, const SparseTensor<T>& x) {
  Matrix<T> y(x.size(), x.channels());
  const T* src = x.values().data();
  T* dst = y.data();
  for (int64_t i = 0; i < y.size(); ++i) dst[i] = GeluScalar(src[i]);
  const bool grad = NeedsGrad(x.feats);
  SparseTensor<T> out = Output(x, x.coords, std::move(y), grad && tape);
  if (tape && grad) {
    tape->Record([xv = x.feats, yv = out.feats]() {
      if (!yv->has_grad()) return;
      const T* xs = xv->value.data();
      const T* g = yv->grad.data();
      T* d = xv->Grad().data();
      const T inv_sqrt_2pi = kInvSqrt2<T> * static_cast<T>(std::numbers::inv_sqrtpi);
      for (int64_t i = 0; i < xv->value.size(); ++i) {
        const T v = xs[i];
        const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2<T>));
        const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
        d[i] += g[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

template <typename T>
SparseTensor<T> Sigmoid(Tape<T>* tape, const SparseTensor<T>& x) {
  Matrix<T> y(x.size(), x.channels());
  const T* src = x.values().data();
  T* dst = y.data();
  for (int64_t i = 0; i < y.size(); ++i) dst[i] = SigmoidScalar(src[i]);
  const bool grad = NeedsGrad(x.feats);
  SparseTensor<T> out = Output(x, x.coords, std::move(y), grad && tape);
  if (tape && grad) {
    tape->Record([xv = x.feats, yv = out.feats]() {
      if (!yv->has_grad()) return;
      const T* s = yv->value.data();
      const T* g = yv->grad.data();
      T* d = xv->Grad().data();
      for (int64_t i = 0; i < yv->value.size(); ++i) d[i] += g[i] * s[i] * (T(1) - s[i]);
    });
  }
  return out;
}

template <typename T>
SparseTensor<T> PointwiseLinear(Tape<T>* tape, const SparseTensor<T>& x, const LinearParams<T>& p) {
  if (p.weight->value.rows() != x.channels()) {
    throw ShapeMismatch("PointwiseLinear: input has " + std::to_string(x.channels()) +
                        " channels, weight expects " + std::to_string(p.weight->value.rows()));
  }
  Matrix<T> y(x.size(), p.weight->value.cols());
  if (x.size() > 0) y.map().noalias() = x.values().map() * p.weight->value.map();
  AddBias(y, p.bias);
  const bool grad = NeedsGrad(x.feats) || NeedsGrad(p.weight) || NeedsGrad(p.bias);
  SparseTensor<T> out = Output(x, x.coords, std::move(y), grad && tape);
  if (tape && grad) {
    tape->Record([xv = x.feats, yv = out.feats, p]() {
      if (!yv->has_grad() || yv->value.rows() == 0) return;
      GradTarget<T> dx(xv), dw(p.weight);
      if (dx.get()) {
        dx.get()->map().noalias() += yv->grad.map() * p.weight->value.map().transpose();
      }
      if (dw.get()) {
        dw.get()->map().noalias() += xv->value.map().transpose() * yv->grad.map();
      }
      AccumulateBiasGrad(p.bias, yv->grad);
    });
  }
  return out;
}

template <typename T>
SparseTensor<T> Add(Tape<T>* tape, const SparseTensor<T>& a, const SparseTensor<T>& b) {
  if (a.coords != b.coords && !a.coords->SameCoordinates(*b.coords)) {
    throw ShapeMismatch("Add: operands live on different coordinate sets");
  }
  if (a.channels() != b.channels()) throw ShapeMismatch("Add: channel mismatch");
  Matrix<T> y(a.size(), a.channels());
  if (a.size() > 0) y.map() = a.values().map() + b.values().map();
  const bool grad = NeedsGrad(a.feats) || NeedsGrad(b.feats);
  SparseTensor<T> out = Output(a, a.coords, std::move(y), grad && tape);
  if (tape && grad) {
    tape->Record([av = a.feats, bv = b.feats, yv = out.feats]() {
      if (!yv->has_grad() || yv->value.rows() == 0) return;
      if (NeedsGrad(av)) av->Grad().map() += yv->grad.map();
      if (NeedsGrad(bv)) bv->Grad().map() += yv->grad.map();
    });
  }
  return out;
}

#define SPARSESEG_INSTANTIATE_OPS(T)                                                        \
  template struct ConvParams<T>;                                                            \
  template struct LinearParams<T>;                                                          \
  template struct AffineNormParams<T>;                                                      \
  template SparseTensor<T> SubmConv(Tape<T>*, const SparseTensor<T>&, const ConvParams<T>&); \
  template SparseTensor<T> SubmConv(Tape<T>*, const SparseTensor<T>&, const ConvParams<T>&,  \
                                    const KernelMap&);                                      \
  template SparseTensor<T> StridedConv(Tape<T>*, const SparseTensor<T>&,                    \
                                       const ConvParams<T>&, const std::array<int, 3>&);    \
  template SparseTensor<T> TransposedConv(Tape<T>*, const SparseTensor<T>&,                 \
                                          const ConvParams<T>&, const std::array<int, 3>&); \
  template SparseTensor<T> DepthwiseConv(Tape<T>*, const SparseTensor<T>&,                  \
                                         const ConvParams<T>&);                             \
  template SparseTensor<T> DepthwiseConv(Tape<T>*, const SparseTensor<T>&,                  \
                                         const ConvParams<T>&, const KernelMap&);           \
  template SparseTensor<T> AvgPool(Tape<T>*, const SparseTensor<T>&,                        \
                                   const std::array<int, 3>&);                              \
  template SparseTensor<T> LayerNorm(Tape<T>*, const SparseTensor<T>&,                      \
                                     const AffineNormParams<T>&);                           \
  template SparseTensor<T> Grn(Tape<T>*, const SparseTensor<T>&, const AffineNormParams<T>&); \
  template SparseTensor<T> Gelu(Tape<T>*, const SparseTensor<T>&);                          \
  template SparseTensor<T> Sigmoid(Tape<T>*, const SparseTensor<T>&);                       \
  template SparseTensor<T> PointwiseLinear(Tape<T>*, const SparseTensor<T>&,                \
                                           const LinearParams<T>&);                         \
  template SparseTensor<T> Add(Tape<T>*, const SparseTensor<T>&, const SparseTensor<T>&);   \
  template T GeluScalar(T);                                                                 \
  template T SigmoidScalar(T);

SPARSESEG_INSTANTIATE_OPS(float)
SPARSESEG_INSTANTIATE_OPS(double)

#undef SPARSESEG_INSTANTIATE_OPS

}  // namespace sparseseg
