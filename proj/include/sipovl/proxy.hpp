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
#include <deque>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "sipovl/flowlink.hpp"
#include "sipovl/sim.hpp"
#include "sipovl/sip_message.hpp"
#include "sipovl/time.hpp"

namespace sipovl::proxy {

enum class Role : std::uint8_t { kSe, kRe };

// kDefault: one connection, stock buffers, no admission control.
// kEcsBmSf: separate INVITE connection with minimized buffers, INVITEs
//           admitted only when that connection's send queue is empty.
// kIcsBmSf: one connection, minimized RE receive buffer, INVITEs admitted
//           only when the shared send queue is empty.
enum class Mechanism : std::uint8_t { kDefault, kEcsBmSf, kIcsBmSf };

std::string_view mechanism_name(Mechanism m);
std::optional<Mechanism> mechanism_from_name(std::string_view name);

inline bool has_smart_forwarding(Mechanism m) { return m != Mechanism::kDefault; }

enum class ForwardDecision : std::uint8_t { kForward, kReject };

// Smart forwarding: an INVITE goes out only if the send queue it would join
// holds at most `threshold` unsent bytes (0, i.e. empty, by default).
// Everything that is not an INVITE is always forwarded.
ForwardDecision smart_forward(sip::MessageClass cls, std::size_t invite_link_unsent,
                              std::size_t threshold = 0);

struct CostModel {
  Duration invite{0};
  Duration non_invite{0};
  Duration provisional{0};
  Duration final_response{0};

  Duration of(sip::MessageClass cls) const;

  // 10 ms per INVITE and 1 ms per other message: 15 ms per session.
  static CostModel receiving_entity_default();
};

struct ProxyConfig {
  Role role = Role::kRe;
  Mechanism mechanism = Mechanism::kDefault;
  std::size_t app_buf = 65536;
  CostModel cost;
  Duration send_timeout = std::chrono::seconds(32);
  int rejection_status = 503;
  std::size_t sf_threshold = 0;
  sip::WireSizes sizes;

  // Throws ConfigError, e.g. when app_buf cannot hold the largest message.
  void validate() const;
};

struct SessionRecord {
  enum class State : std::uint8_t { kStarted, kTerminated };
  std::string call_id;
  State state = State::kStarted;
  SimTime started_at{0};
  SimTime terminated_at{0};
  sim::ModuleId upstream_link = 0;
  sim::ModuleId downstream_link = 0;
};

// Message categories counted per second for the RE processing-rate series.
enum class Traffic : std::uint8_t {
  kInvite,
  kAck,
  kBye,
  kProvisional,
  kInviteOk,
  kByeOk,
  kFailure,
};
inline constexpr std::size_t kTrafficKinds = 7;
std::string_view traffic_name(Traffic t);
Traffic traffic_of(const sip::SipMessage& msg);

struct Emission {
  sim::ModuleId link = 0;
  sip::SipMessage message;
};

// Where the traffic of one upstream neighbour enters and leaves.
struct Input {
  sim::Channel* channel = nullptr;
  std::size_t app_buf = 0;  // 0 selects ProxyConfig::app_buf
};
struct UpstreamPeer {
  std::vector<Input> requests_in;  // two entries (INVITE first) under ECS at the RE
  sim::Channel* responses_out = nullptr;
};
struct DownstreamPeer {
  sim::Channel* requests_out = nullptr;
  sim::Channel* invite_out = nullptr;  // dedicated INVITE connection under ECS
  Input responses_in;
};

struct ProxyCounters {
  std::uint64_t invites_received = 0;
  std::uint64_t invites_forwarded = 0;
  std::uint64_t invites_rejected = 0;
  std::uint64_t non_invites_forwarded = 0;
  std::uint64_t responses_forwarded = 0;
  std::uint64_t responses_unroutable = 0;
  std::uint64_t send_timeouts = 0;
  std::uint64_t malformed = 0;
  std::uint64_t messages_processed = 0;
  std::size_t pending_output_peak = 0;
};

// A stateful SIP proxy acting as SE or RE. Owns one application buffer per
// input connection and a single virtual CPU. Connections are served round
// robin: on its turn a connection is read once (at most app_buf minus the
// partial-message residue) and every complete message from that read is
// processed before the next connection gets a turn.
//
// Writes that do not fit in a send buffer stay in a per-link pending-output
// queue, and the connection whose message produced them is not read again
// until that queue drains.
class Proxy {
 public:
  Proxy(sim::Scheduler& sched, sim::ModuleId id, std::string name, ProxyConfig cfg);
  Proxy(const Proxy&) = delete;
  Proxy& operator=(const Proxy&) = delete;

  std::size_t add_upstream(const UpstreamPeer& peer);
  void set_downstream(const DownstreamPeer& peer);

  const std::string& name() const { return name_; }
  const ProxyConfig& config() const { return cfg_; }

  // Reads the input connection's channel into its application buffer and
  // returns the messages that became complete. Malformed input closes it.
  std::vector<sip::SipMessage> on_readable(std::size_t input);

  // Routing step for one message after its processing cost has been paid.
  std::vector<Emission> process_and_route(const sip::SipMessage& msg, std::size_t input);

  // Answers every forwarded request older than send_timeout with a 408.
  std::vector<Emission> send_timeout_sweep(SimTime now);

  // Sessions whose INVITE was forwarded and whose BYE was not yet.
  std::int64_t active_sessions() const { return started_ - terminated_; }

  const ProxyCounters& counters() const { return counters_; }
  const std::unordered_map<std::string, SessionRecord>& sessions() const { return sessions_; }
  std::size_t input_count() const { return inputs_.size(); }
  std::size_t invites_waiting() const;
  std::size_t pending_output_bytes() const;

  // Messages processed, per virtual second and Traffic category.
  const std::vector<std::array<std::uint64_t, kTrafficKinds>>& per_second() const {
    return per_second_;
  }

 private:
  struct InputConn {
    sim::Channel* channel = nullptr;
    std::size_t app_buf = 0;
    int upstream = -1;  // peer index, -1 for the downstream response input
    std::string residue;
    std::deque<sip::SipMessage> ready;
    sim::Channel* blocked_on = nullptr;
    bool closed = false;
  };
  struct OutputQueue {
    flow::ByteFifo pending;
  };
  struct PendingRequest {
    SimTime forwarded_at{0};
    int upstream = -1;
  };
  using RequestKey = std::pair<std::string, sip::Method>;

  void kick();
  void run();
  void complete(std::size_t input);
  bool has_work(const InputConn& in) const;
  void emit(sim::Channel* ch, const sip::SipMessage& msg, InputConn* source,
            std::vector<Emission>& out);
  void flush(sim::Channel* ch);
  void route_request(const sip::SipMessage& msg, InputConn& in, std::vector<Emission>& out);
  void route_response(const sip::SipMessage& msg, InputConn& in, std::vector<Emission>& out);
  void remember_request(const sip::SipMessage& msg, int upstream);
  void count(const sip::SipMessage& msg);

  sim::Scheduler& sched_;
  sim::ModuleId id_;
  std::string name_;
  ProxyConfig cfg_;

  std::vector<UpstreamPeer> upstream_;
  DownstreamPeer downstream_;
  std::vector<InputConn> inputs_;
  std::map<sim::ModuleId, OutputQueue> outputs_;
  std::size_t rr_next_ = 0;
  int current_ = -1;
  bool busy_ = false;
  bool run_scheduled_ = false;

  std::unordered_map<std::string, int> routes_;
  std::unordered_map<std::string, SessionRecord> sessions_;
  std::int64_t started_ = 0;
  std::int64_t terminated_ = 0;
  std::map<RequestKey, PendingRequest> pending_requests_;
  std::deque<std::pair<SimTime, RequestKey>> timeout_queue_;
  std::unordered_map<sim::ModuleId, sim::Channel*> channels_;  // outputs with a writable hook

  ProxyCounters counters_;
  std::vector<std::array<std::uint64_t, kTrafficKinds>> per_second_;
};

}  // namespace sipovl::proxy
