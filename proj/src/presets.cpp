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

#include "sipovl/presets.hpp"

namespace sipovl::harness {
namespace {

Scenario overload(const std::string& name, proxy::Mechanism m, double multiple) {
  Scenario s;
  s.name = name;
  s.mechanism = m;
  s.load_multiple = multiple;
  return s;
}

std::vector<Preset> build() {
  using proxy::Mechanism;
  std::vector<Preset> out;
  out.push_back({"default-collapse", "1 SE at 2.5x capacity, stock buffers, no overload control",
                 overload("default-collapse", Mechanism::kDefault, 2.5), std::nullopt});
  out.push_back({"ics-bm-sf", "1 SE at 2.5x capacity, implicit split, 2 KB RE receive buffer, smart forwarding",
                 overload("ics-bm-sf", Mechanism::kIcsBmSf, 2.5), std::nullopt});
  out.push_back({"ecs-bm-sf", "1 SE at 2.5x capacity, dedicated minimized INVITE connection, smart forwarding",
                 overload("ecs-bm-sf", Mechanism::kEcsBmSf, 2.5), std::nullopt});

  Scenario scaling = overload("se-scaling", Mechanism::kIcsBmSf, 11.5);
  out.push_back({"se-scaling", "1, 3 and 10 SEs sharing 11.5x capacity under ICS+BM+SF", scaling,
                 SweepSpec{"num_se", {"1", "3", "10"}}});

  Scenario recv = overload("recvbuf-sweep", Mechanism::kIcsBmSf, 11.5);
  recv.num_se = 10;
  out.push_back({"recvbuf-sweep", "10 SEs at 11.5x capacity, RE receive buffer from 1 KB to 64 KB", recv,
                 SweepSpec{"se_re.recv_buf", {"1024", "2048", "4096", "16384", "65536"}}});

  Scenario fair = overload("fairness-321", Mechanism::kIcsBmSf, 0.6);
  fair.num_se = 3;
  fair.load_shares = {3, 2, 1};
  out.push_back({"fairness-321", "3 SEs offering 3:2:1, below capacity and at 4.5x capacity", fair,
                 SweepSpec{"load.multiple", {"0.6", "4.5"}}});

  Scenario cal;
  cal.name = "calibrate";
  cal.load_multiple = 1.0;
  out.push_back({"calibrate", "measure the capacity used to scale load multiples", cal, std::nullopt, true});
  return out;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build();
  return all;
}

const Preset* find_preset(const std::string& name) {
  for (const Preset& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

}  // namespace sipovl::harness
