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

#ifndef SPARSESEG_COMMON_ERRORS_H_
#define SPARSESEG_COMMON_ERRORS_H_

#include <stdexcept>
#include <string>

namespace sparseseg {

// Base class for all recoverable engine errors. The CLI maps these to exit
// code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

// Raised by the tracking allocator when a configured budget would be
// exceeded. Benchmarks turn this into an "OOM" cell.
class MemoryBudgetExceeded : public Error {
 public:
  using Error::Error;
};

// A single work item (e.g. one ROI component) exceeds its voxel capacity.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparseseg

#endif  // SPARSESEG_COMMON_ERRORS_H_
