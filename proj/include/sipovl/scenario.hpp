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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sipovl/endpoints.hpp"
#include "sipovl/flowlink.hpp"
#include "sipovl/proxy.hpp"
#include "sipovl/retransmission.hpp"
#include "sipovl/sip_message.hpp"

namespace sipovl::harness {

// Buffer sizes of one direction of a connection: the sender's socket send
// buffer and the receiver's effective socket receive buffer. Unset values
// fall back to the mechanism's defaults (see link_config()).
struct HopBuffers {
  std::optional<std::size_t> send_buf;
  std::optional<std::size_t> recv_buf;
};

enum class Hop : std::uint8_t {
  kUacToSe,
  kSeToUac,
  kSeToRe,  // the only SE->RE connection, or the non-INVITE one under ECS
  kReToSe,
  kSeToReInvite,  // ECS only
  kReToUas,
  kUasToRe,
};

// N SEs, each fed by its own UAC, all forwarding to one RE in front of one
// UAS. Offered load is either explicit per-SE rates or a multiple of the
// RE capacity split by relative shares.
struct Scenario {
  std::string name = "custom";
  std::size_t num_se = 1;
  std::vector<double> per_se_rate;  // cps; wins over load_multiple when set
  double load_multiple = 0.0;       // aggregate load / capacity
  std::vector<double> load_shares;  // empty: equal split
  double capacity = 0.0;            // cps; 0 calibrates on demand
  int duration_s = 120;
  int warmup_s = 10;
  proxy::Mechanism mechanism = proxy::Mechanism::kDefault;
  endpoints::Arrival arrival = endpoints::Arrival::kDeterministic;
  std::uint64_t seed = 1;

  Duration one_way_delay = std::chrono::microseconds(100);
  std::size_t window_quantum = 1448;  // Ethernet MSS; see flow::LinkConfig
  HopBuffers uac_se, se_uac, se_re, re_se, se_re_invite, re_uas, uas_re;
  std::optional<std::size_t> se_app_buf;
  std::optional<std::size_t> re_app_buf;
  std::optional<std::size_t> re_invite_app_buf;

  proxy::CostModel re_cost = proxy::CostModel::receiving_entity_default();
  proxy::CostModel se_cost;
  sip::WireSizes sizes;
  sip::RetransmissionPolicy retransmission;
  Duration send_timeout = std::chrono::seconds(32);
  Duration uas_receive_timeout = std::chrono::seconds(32);
  Duration uac_receive_timeout = std::chrono::seconds(32);
  int rejection_status = 503;
  std::size_t sf_threshold = 0;
};

// Stock socket and application buffer sizes.
inline constexpr std::size_t kDefaultSendBuf = 16384;
inline constexpr std::size_t kDefaultRecvBuf = 65536;
inline constexpr std::size_t kDefaultAppBuf = 65536;
// Buffer minimization values used when a mechanism turns it on.
inline constexpr std::size_t kMinimizedSendBuf = 2048;
inline constexpr std::size_t kMinimizedRecvBuf = 2048;
inline constexpr std::size_t kMinimizedAppBuf = 1200;

flow::LinkConfig link_config(const Scenario& s, Hop hop);
std::size_t se_app_buf(const Scenario& s);
std::size_t re_app_buf(const Scenario& s);
std::size_t re_invite_app_buf(const Scenario& s);

// Throws ConfigError on any inconsistency (rate list length, buffer sizes,
// durations, timers ...).
void validate(const Scenario& s);

bool uses_capacity(const Scenario& s);

// Per-SE offered rate in cps. `capacity` is only consulted for load_multiple.
std::vector<double> offered_rates(const Scenario& s, double capacity);

// Dotted-key access used by scenario files, --set and --sweep.
const std::vector<std::string>& scenario_keys();
void set_key(Scenario& s, std::string_view key, std::string_view value);
std::string get_key(const Scenario& s, std::string_view key);

// "key = value" lines, '#' comments, blank lines ignored. Applied on top of base.
Scenario parse_scenario_text(std::string_view text, Scenario base = {});
Scenario load_scenario_file(const std::filesystem::path& path, Scenario base = {});

// "a,b,c" -> {"a","b","c"} with surrounding spaces trimmed.
std::vector<std::string> split_list(std::string_view text);

// Locale-independent shortest-ish rendering ("%.10g") used in every output.
std::string format_number(double v);

}  // namespace sipovl::harness
