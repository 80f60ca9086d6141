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

#ifndef SPARSESEG_COMMON_MEMORY_H_
#define SPARSESEG_COMMON_MEMORY_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <vector>

namespace sparseseg {

// Process-wide accounting of engine buffers (features, kernel maps, hash
// tables, dense volumes). Only allocations routed through TrackingAllocator
// are counted; this is the memory metric reported by the benchmarks.
class MemoryTracker {
 public:
  static int64_t Current();
  static int64_t Peak();
  // Resets the peak to the current usage and returns it.
  static int64_t ResetPeak();
  // 0 disables the budget.
  static void SetBudget(int64_t bytes);
  static int64_t Budget();

  static void Allocate(std::size_t bytes);
  static void Release(std::size_t bytes);
};

// Restores the previous budget on scope exit.
class ScopedMemoryBudget {
 public:
  explicit ScopedMemoryBudget(int64_t bytes) : previous_(MemoryTracker::Budget()) {
    MemoryTracker::SetBudget(bytes);
  }
  ~ScopedMemoryBudget() { MemoryTracker::SetBudget(previous_); }
  ScopedMemoryBudget(const ScopedMemoryBudget&) = delete;
  ScopedMemoryBudget& operator=(const ScopedMemoryBudget&) = delete;

 private:
  int64_t previous_;
};

// Buffers are 64-byte aligned so vectorized kernels take the same code path
// on every run, keeping floating-point results independent of addresses.
inline constexpr std::size_t kBufferAlignment = 64;

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    MemoryTracker::Allocate(n * sizeof(T));
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kBufferAlignment}));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    ::operator delete(p, std::align_val_t{kBufferAlignment});
    MemoryTracker::Release(n * sizeof(T));
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using TrackedVector = std::vector<T, TrackingAllocator<T>>;

}  // namespace sparseseg

#endif  // SPARSESEG_COMMON_MEMORY_H_
