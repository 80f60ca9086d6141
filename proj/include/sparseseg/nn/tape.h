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

#ifndef SPARSESEG_NN_TAPE_H_
#define SPARSESEG_NN_TAPE_H_

#include <functional>
#include <utility>
#include <vector>

#include "sparseseg/common/errors.h"
#include "sparseseg/core/matrix.h"

namespace sparseseg {

// Linear record of backward closures. Each op appends one closure during
// the forward pass; Backward() runs them once, newest first, then empties
// the tape. Confined to one training worker.
template <typename T>
class Tape {
 public:
  void Record(std::function<void()> backward) { ops_.push_back(std::move(backward)); }

  // Seeds d(loss)/d(loss) = seed (loss must be 1x1) and propagates.
  void Backward(const VarPtr<T>& loss, T seed = T(1)) {
    if (ops_.empty()) throw Error("backward called before any forward op was recorded");
    if (loss->value.rows() != 1 || loss->value.cols() != 1) {
      throw ShapeMismatch("backward expects a scalar loss");
    }
    loss->Grad()(0, 0) += seed;
    Run();
  }

  // Seeds an arbitrary upstream gradient for `output`.
  void Backward(const VarPtr<T>& output, const Matrix<T>& upstream) {
    if (ops_.empty()) throw Error("backward called before any forward op was recorded");
    if (!upstream.SameShape(output->value)) {
      throw ShapeMismatch("upstream gradient shape differs from output");
    }
    output->Grad().map() += upstream.map();
    Run();
  }

  size_t size() const { return ops_.size(); }
  void Clear() { ops_.clear(); }

 private:
  void Run() {
    auto ops = std::move(ops_);
    ops_.clear();
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) (*it)();
  }

  std::vector<std::function<void()>> ops_;
};

}  // namespace sparseseg

#endif  // SPARSESEG_NN_TAPE_H_
