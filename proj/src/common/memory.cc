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

#include "sparseseg/common/memory.h"

#include <algorithm>
#include <atomic>
#include <string>

#include "sparseseg/common/errors.h"

namespace sparseseg {
namespace {

std::atomic<int64_t> g_current{0};
std::atomic<int64_t> g_peak{0};
std::atomic<int64_t> g_budget{0};

}  // namespace

int64_t MemoryTracker::Current() { return g_current.load(); }
int64_t MemoryTracker::Peak() { return g_peak.load(); }

int64_t MemoryTracker::ResetPeak() {
  const int64_t now = g_current.load();
  g_peak.store(now);
  return now;
}

void MemoryTracker::SetBudget(int64_t bytes) { g_budget.store(bytes); }
int64_t MemoryTracker::Budget() { return g_budget.load(); }

void MemoryTracker::Allocate(std::size_t bytes) {
  const auto delta = static_cast<int64_t>(bytes);
  const int64_t now = g_current.fetch_add(delta) + delta;
  const int64_t budget = g_budget.load();
  if (budget > 0 && now > budget) {
    g_current.fetch_sub(delta);
    throw MemoryBudgetExceeded("tracked allocation of " + std::to_string(bytes) +
                               " bytes exceeds budget of " +
                               std::to_string(budget) + " bytes");
  }
  int64_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

void MemoryTracker::Release(std::size_t bytes) {
  g_current.fetch_sub(static_cast<int64_t>(bytes));
}

}  // namespace sparseseg
