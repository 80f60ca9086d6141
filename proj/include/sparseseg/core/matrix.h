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

#ifndef SPARSESEG_CORE_MATRIX_H_
#define SPARSESEG_CORE_MATRIX_H_

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <memory>

#include "sparseseg/common/memory.h"

namespace sparseseg {

template <typename T>
using EigenRowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major dense matrix backed by tracked storage. Feature matrices are
// N x C (one row per active voxel).
template <typename T>
class Matrix {
 public:
  using Map = Eigen::Map<EigenRowMajor<T>>;
  using ConstMap = Eigen::Map<const EigenRowMajor<T>>;

  Matrix() = default;
  Matrix(int64_t rows, int64_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows * cols), fill) {}

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  int64_t size() const { return rows_ * cols_; }
  bool empty() const { return size() == 0; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* row(int64_t r) { return data_.data() + r * cols_; }
  const T* row(int64_t r) const { return data_.data() + r * cols_; }
  T& operator()(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols_ + c)]; }
  T operator()(int64_t r, int64_t c) const {
    return data_[static_cast<size_t>(r * cols_ + c)];
  }

  Map map() { return Map(data_.data(), rows_, cols_); }
  ConstMap map() const { return ConstMap(data_.data(), rows_, cols_); }

  void SetZero() { std::fill(data_.begin(), data_.end(), T(0)); }
  bool SameShape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  template <typename U>
  Matrix<U> Cast() const {
    Matrix<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.data(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const Matrix& o) const {
    return SameShape(o) && std::equal(data_.begin(), data_.end(), o.data_.begin());
  }

 private:
  int64_t rows_ = 0;
  int64_t cols_ = 0;
  TrackedVector<T> data_;
};

// A value in the autodiff graph. Gradients are allocated on first use and
// accumulate until ZeroGrad().
template <typename T>
struct Variable {
  Matrix<T> value;
  Matrix<T> grad;
  bool requires_grad = false;

  Variable() = default;
  explicit Variable(Matrix<T> v, bool trainable = false)
      : value(std::move(v)), requires_grad(trainable) {}

  bool has_grad() const { return grad.SameShape(value) && !grad.empty(); }
  Matrix<T>& Grad() {
    if (!grad.SameShape(value)) grad = Matrix<T>(value.rows(), value.cols());
    return grad;
  }
  void ZeroGrad() { grad = Matrix<T>(); }
};

template <typename T>
using VarPtr = std::shared_ptr<Variable<T>>;

template <typename T>
VarPtr<T> MakeVar(Matrix<T> value, bool requires_grad = false) {
  return std::make_shared<Variable<T>>(std::move(value), requires_grad);
}

}  // namespace sparseseg

#endif  // SPARSESEG_CORE_MATRIX_H_
