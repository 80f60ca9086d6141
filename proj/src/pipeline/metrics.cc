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

#include "sparseseg/pipeline/metrics.h"

#include <cstdio>
#include <fstream>

#include "sparseseg/common/errors.h"
#include "sparseseg/train/trainer.h"

namespace sparseseg {

DiceReport Dsc(const MultiLabelMask& pred, const MultiLabelMask& truth) {
  if (pred.dims != truth.dims) throw ShapeMismatch("prediction and truth dims differ");
  DiceReport r;
  for (size_t c = 0; c < r.channel.size(); ++c) {
    int64_t inter = 0, sp = 0, st = 0;
    const auto& p = pred.channels[c];
    const auto& t = truth.channels[c];
    for (size_t i = 0; i < p.size(); ++i) {
      inter += (p[i] && t[i]) ? 1 : 0;
      sp += p[i] ? 1 : 0;
      st += t[i] ? 1 : 0;
    }
    r.channel[c] = sp + st == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(sp + st);
  }
  r.all = (r.channel[0] + r.channel[1] + r.channel[2]) / 3.0;
  return r;
}

void WriteMetricsCsv(const std::string& path,
                     const std::vector<std::pair<std::string, DiceReport>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write metrics file " + path);
  out << "case,channel,dsc\n";
  char buf[32];
  for (const auto& [name, r] : rows) {
    for (size_t c = 0; c < r.channel.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.6f", r.channel[c]);
      out << name << ',' << kChannelNames[c] << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.6f", r.all);
    out << name << ",all," << buf << '\n';
  }
  if (!out) throw IoError("failed writing metrics file " + path);
}

}  // namespace sparseseg
