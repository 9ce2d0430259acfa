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

#include <vector>

#include "sipovl/time.hpp"

namespace sipovl::sip {

// End-to-end 200 OK retransmission timer (T1 doubling, capped at T2).
struct RetransmissionPolicy {
  Duration t1 = std::chrono::milliseconds(500);
  Duration t2 = std::chrono::seconds(4);
  Duration total_timeout = std::chrono::seconds(32);

  // Throws ConfigError unless 0 < t1 <= t2 <= total_timeout.
  void validate() const;
};

// Firing times of each retransmission, measured from the first
// transmission. The call times out at policy.total_timeout.
std::vector<Duration> retransmit_offsets(const RetransmissionPolicy& policy);

}  // namespace sipovl::sip
