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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sipovl/proxy.hpp"
#include "sipovl/scenario.hpp"

namespace sipovl::harness {

// Upper edges (seconds) of the PDD histogram buckets; one overflow bucket
// follows the last edge.
inline constexpr std::array<double, 9> kPddBucketEdges = {0.03, 0.1, 0.5, 1, 2, 4, 8, 16, 32};

struct PddSummary {
  std::size_t count = 0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double p998 = 0.0;
  double max = 0.0;
  double fraction_below_500ms = 0.0;  // 1 when there are no samples
  std::array<std::uint64_t, kPddBucketEdges.size() + 1> histogram{};
};

// Nearest-rank percentile (q in (0, 1]) of an ascending sample.
double nearest_rank(const std::vector<double>& sorted, double q);
PddSummary summarize_pdd(std::vector<double> samples);

// End-of-run session accounting. Every generated INVITE lands in exactly one
// of rejected / successful / timed_out / in_flight.
struct Totals {
  std::uint64_t invites_generated = 0;
  std::uint64_t rejected = 0;
  std::uint64_t successful = 0;
  std::uint64_t timed_out = 0;
  std::uint64_t in_flight = 0;

  std::uint64_t ok_retransmissions = 0;  // sent by the UAS
  std::uint64_t responses_408 = 0;       // received by UACs
  std::uint64_t proxy_send_timeouts = 0;
  std::uint64_t unexpected = 0;  // unexpected states opened at the UAS
  std::uint64_t bye_ok = 0;
  std::uint64_t bye_timeouts = 0;
  std::uint64_t acks_regenerated = 0;
  std::uint64_t acks_suppressed = 0;
  std::uint64_t ringing_sent = 0;
  std::uint64_t first_ok_sent = 0;
  std::uint64_t uas_invites = 0;
  std::uint64_t malformed = 0;
  std::uint64_t re_messages = 0;
  std::size_t pending_output_peak = 0;  // largest blocked-write backlog at any proxy, bytes
};

struct MetricsReport {
  Scenario scenario;  // as run, with capacity resolved
  std::vector<double> offered;  // cps per SE

  // Per-second series, `duration` entries each. Index t covers [t, t+1)
  // for rates and is the sample taken at t+1 for active sessions.
  std::vector<double> throughput;
  std::vector<std::vector<double>> throughput_per_se;  // [se][t]
  std::vector<double> active_sessions;
  std::vector<double> retransmissions;
  std::array<std::vector<double>, proxy::kTrafficKinds> re_rate;

  Totals totals;
  PddSummary pdd;

  // Means over the post-warmup seconds.
  double mean_throughput = 0.0;
  std::vector<double> per_se_throughput;
  // Mean of every active-session sample.
  double mean_active_sessions = 0.0;
  double max_active_sessions = 0.0;
  std::optional<int> first_retransmission_second;
  std::uint64_t events = 0;
};

// Sum of `series[from, to)`, clamped to the series bounds, divided by the
// number of seconds in the range.
double window_mean(const std::vector<double>& series, int from, int to);

}  // namespace sipovl::harness
