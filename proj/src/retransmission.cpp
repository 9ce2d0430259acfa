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

#include "sipovl/retransmission.hpp"

#include <algorithm>

#include "sipovl/errors.hpp"

namespace sipovl::sip {

void RetransmissionPolicy::validate() const {
  if (t1 <= Duration::zero() || t1 > t2 || t2 > total_timeout) {
    throw ConfigError("retransmission policy requires 0 < t1 <= t2 <= total_timeout");
  }
}

std::vector<Duration> retransmit_offsets(const RetransmissionPolicy& policy) {
  policy.validate();
  std::vector<Duration> offsets;
  Duration interval = policy.t1;
  Duration at = interval;
  while (at < policy.total_timeout) {
    offsets.push_back(at);
    interval = std::min(interval * 2, policy.t2);
    at += interval;
  }
  return offsets;
}

}  // namespace sipovl::sip
