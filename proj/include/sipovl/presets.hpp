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

#include <optional>
#include <string>
#include <vector>

#include "sipovl/scenario.hpp"

namespace sipovl::harness {

struct SweepSpec {
  std::string key;
  std::vector<std::string> values;
};

struct Preset {
  std::string name;
  std::string description;
  Scenario scenario;
  std::optional<SweepSpec> sweep;
  bool calibrate_only = false;
};

const std::vector<Preset>& presets();
// nullptr when unknown.
const Preset* find_preset(const std::string& name);

}  // namespace sipovl::harness
