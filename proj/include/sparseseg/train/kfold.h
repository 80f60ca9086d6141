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

#ifndef SPARSESEG_TRAIN_KFOLD_H_
#define SPARSESEG_TRAIN_KFOLD_H_

#include <cstdint>
#include <vector>

namespace sparseseg {

// Seeded shuffle of 0..n-1 cut into k contiguous parts whose sizes differ by
// at most one (the first n % k parts get the extra index).
std::vector<std::vector<int>> KFoldSplit(int n, int k, uint64_t seed);

// Fold `fold` is validation; the rest, in index order, is training.
struct FoldAssignment {
  std::vector<int> train;
  std::vector<int> validation;
};
FoldAssignment SelectFold(const std::vector<std::vector<int>>& parts, int fold);

}  // namespace sparseseg

#endif  // SPARSESEG_TRAIN_KFOLD_H_
