// Copyright 2026 The sipovl Authors.
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

#include "sipovl/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace sipovl::harness {

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double rank = std::ceil(q * static_cast<double>(sorted.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size()))) - 1;
  return sorted[idx];
}

PddSummary summarize_pdd(std::vector<double> samples) {
  PddSummary out;
  std::sort(samples.begin(), samples.end());
  out.count = samples.size();
  out.p50 = nearest_rank(samples, 0.5);
  out.p90 = nearest_rank(samples, 0.9);
  out.p99 = nearest_rank(samples, 0.99);
  out.p998 = nearest_rank(samples, 0.998);
  out.max = samples.empty() ? 0.0 : samples.back();
  const auto below = std::lower_bound(samples.begin(), samples.end(), 0.5) - samples.begin();
  out.fraction_below_500ms = samples.empty() ? 1.0 : static_cast<double>(below) / static_cast<double>(samples.size());
  for (double v : samples) {
    const auto bucket = std::upper_bound(kPddBucketEdges.begin(), kPddBucketEdges.end(), v) - kPddBucketEdges.begin();
    ++out.histogram[static_cast<std::size_t>(bucket)];
  }
  return out;
}

double window_mean(const std::vector<double>& series, int from, int to) {
  const int size = static_cast<int>(series.size());
  from = std::clamp(from, 0, size);
  to = std::clamp(to, from, size);
  if (to == from) return 0.0;
  double sum = 0.0;
  for (int i = from; i < to; ++i) sum += series[static_cast<std::size_t>(i)];
  return sum / (to - from);
}

}  // namespace sipovl::harness
