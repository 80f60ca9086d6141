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

#include "sparseseg/train/kfold.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "sparseseg/common/errors.h"

namespace sparseseg {

std::vector<std::vector<int>> KFoldSplit(int n, int k, uint64_t seed) {
  if (k < 1) throw InvalidArgument("k must be positive");
  if (n < k) {
    throw InvalidArgument("cannot split " + std::to_string(n) + " cases into " +
                          std::to_string(k) + " folds");
  }
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the result does not depend on the
  // standard library's shuffle.
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  std::vector<std::vector<int>> parts(static_cast<size_t>(k));
  size_t at = 0;
  for (int f = 0; f < k; ++f) {
    const int size = n / k + (f < n % k ? 1 : 0);
    for (int i = 0; i < size; ++i) parts[static_cast<size_t>(f)].push_back(order[at++]);
  }
  return parts;
}

FoldAssignment SelectFold(const std::vector<std::vector<int>>& parts, int fold) {
  if (fold < 0 || fold >= static_cast<int>(parts.size())) {
    throw InvalidArgument("fold " + std::to_string(fold) + " outside 0.." +
                          std::to_string(static_cast<int>(parts.size()) - 1));
  }
  FoldAssignment a;
  for (size_t f = 0; f < parts.size(); ++f) {
    auto& dst = static_cast<int>(f) == fold ? a.validation : a.train;
    dst.insert(dst.end(), parts[f].begin(), parts[f].end());
  }
  std::sort(a.train.begin(), a.train.end());
  std::sort(a.validation.begin(), a.validation.end());
  return a;
}

}  // namespace sparseseg
