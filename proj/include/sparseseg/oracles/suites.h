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

#ifndef SPARSESEG_ORACLES_SUITES_H_
#define SPARSESEG_ORACLES_SUITES_H_

// Randomised property suites that compare the engine against the oracles.
// Shared by the `selftest` command and the acceptance binary.

#include <cstdint>
#include <string>

namespace sparseseg::oracles {

struct SuiteResult {
  bool pass = true;
  int64_t checks = 0;
  double seconds = 0.0;
  std::string detail;  // first failure, or a short summary on success

  void Fail(const std::string& what);
};

// Submanifold, strided, transposed and depthwise convolutions against the
// brute-force dense references on `cases` random grids (<= 24^3, <= 8
// channels, occupancy 5-100%). Tolerances: 1e-4 in float, 1e-10 in double.
SuiteResult EquivalenceSuite(int cases, uint64_t seed);

// Central differences (step 1e-4, relative error < 1e-4) for every
// differentiable op and for a 2-stage tiny U-Net under the Dice loss, over
// weights, biases, norm affines and the input.
SuiteResult GradientSuite(uint64_t seed);

// Deep-supervision weights, Dice unit cases and learning-rate schedule
// values against their closed forms.
SuiteResult LossScheduleSuite();

// Percentiles vs sorting, dilation vs brute-force balls, connected
// components vs union-find, the size-filter boundary and the crop/reassemble
// bijection on random phantoms.
SuiteResult PipelinePropertySuite(int percentile_arrays, int phantom_cases, uint64_t seed);

}  // namespace sparseseg::oracles

#endif  // SPARSESEG_ORACLES_SUITES_H_
