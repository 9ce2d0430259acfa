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
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sipovl/flowlink.hpp"
#include "sipovl/retransmission.hpp"
#include "sipovl/sim.hpp"
#include "sipovl/sip_message.hpp"
#include "sipovl/time.hpp"

namespace sipovl::endpoints {

enum class Arrival : std::uint8_t { kDeterministic, kPoisson };

std::string_view arrival_name(Arrival a);
std::optional<Arrival> arrival_from_name(std::string_view name);

// Call-IDs carry the index of the SE whose UAC created them: "<se>-<seq>".
std::string make_call_id(std::size_t se, std::uint64_t seq);
std::size_t se_index_of(std::string_view call_id);

struct UacConfig {
  double rate = 1.0;  // sessions per second
  Duration duration = std::chrono::seconds(120);
  Arrival arrival = Arrival::kDeterministic;
  std::uint64_t seed = 1;
  std::size_t se_index = 0;
  Duration phase{0};  // offset of the first arrival
  sip::WireSizes sizes;
  Duration receive_timeout = std::chrono::seconds(32);

  void validate() const;
};

struct UacCall {
  SimTime invite_at{0};
  std::optional<SimTime> answered_at;
  bool rejected = false;
  std::optional<SimTime> bye_at;
  bool bye_answered = false;
};

struct UacCounters {
  std::uint64_t invites_generated = 0;
  std::uint64_t rejected = 0;
  std::uint64_t answered = 0;
  std::uint64_t ok_retransmissions_received = 0;
  std::uint64_t acks_regenerated = 0;
  std::uint64_t acks_suppressed = 0;
  std::uint64_t bye_ok = 0;
  std::uint64_t bye_408 = 0;
  std::uint64_t invite_408 = 0;
  std::uint64_t late_responses = 0;
};

// Session generator with zero holding time: INVITE, then ACK and BYE back
// to back as soon as the 200 OK arrives. All output shares one FIFO in
// front of the SE connection, so a full send buffer holds back new
// INVITEs and ACK/BYE alike while responses are still read.
class Uac {
 public:
  Uac(sim::Scheduler& sched, sim::ModuleId id, UacConfig cfg, sim::Channel& to_se,
      sim::Channel& from_se);
  Uac(const Uac&) = delete;
  Uac& operator=(const Uac&) = delete;

  // Schedules the arrival process and hooks the channels.
  void start();

  // Generates due INVITEs, consumes responses and flushes output. Returns the
  // messages queued for sending in this step.
  std::vector<sip::SipMessage> uac_step(SimTime now);

  const UacConfig& config() const { return cfg_; }
  const UacCounters& counters() const { return counters_; }
  const std::map<std::string, UacCall>& calls() const { return calls_; }
  // Post-dial delay (INVITE to first 200 OK) of every answered call, seconds.
  const std::vector<double>& pdd_samples() const { return pdd_; }
  // BYEs still unanswered after the receive timeout.
  std::uint64_t bye_timeouts(SimTime now) const;
  bool blocked() const { return !out_.empty(); }
  std::size_t queued_bytes() const { return out_.size(); }

 private:
  void handle(const sip::SipMessage& msg, SimTime now, std::vector<sip::SipMessage>& out);
  void enqueue(const sip::SipMessage& msg, std::vector<sip::SipMessage>& out);
  void flush();
  SimTime arrival_time(std::uint64_t k);
  void arm_next_arrival();

  sim::Scheduler& sched_;
  sim::ModuleId id_;
  UacConfig cfg_;
  sim::Channel& to_se_;
  sim::Channel& from_se_;
  std::mt19937_64 rng_;
  std::exponential_distribution<double> gap_;
  SimTime poisson_clock_{0};
  std::uint64_t next_seq_ = 0;
  std::optional<SimTime> next_arrival_;
  flow::ByteFifo out_;
  std::string residue_;
  std::map<std::string, UacCall> calls_;
  std::vector<double> pdd_;
  UacCounters counters_;
};

struct UasConfig {
  sip::RetransmissionPolicy retransmission;
  Duration receive_timeout = std::chrono::seconds(32);
  sip::WireSizes sizes;

  void validate() const;
};

enum class UasCallState : std::uint8_t { kAwaitingAck, kCompleted, kClosed, kTimedOut };

struct UasCall {
  UasCallState state = UasCallState::kAwaitingAck;
  SimTime first_ok_at{0};
  std::size_t retransmissions = 0;
  bool timer_armed = false;  // true exactly while kAwaitingAck
};

struct UasCounters {
  std::uint64_t invites_received = 0;
  std::uint64_t ringing_sent = 0;
  std::uint64_t first_ok_sent = 0;
  std::uint64_t ok_retransmissions = 0;
  std::uint64_t acks_matched = 0;
  std::uint64_t acks_duplicate = 0;
  std::uint64_t byes_answered = 0;
  std::uint64_t timed_out = 0;
  std::uint64_t unexpected_created = 0;
  std::uint64_t unexpected_timed_out = 0;
  std::uint64_t unexpected_messages = 0;
  std::uint64_t malformed = 0;
};

// Callee side. Answers INVITE with 180 and 200 at once, retransmits the
// 200 OK on the T1/T2 schedule until the ACK arrives, and times the call out
// when the schedule is exhausted. ACK/BYE without a live call open an
// "unexpected" state that expires after receive_timeout.
class Uas {
 public:
  Uas(sim::Scheduler& sched, sim::ModuleId id, UasConfig cfg, sim::Channel& from_re,
      sim::Channel& to_re);
  Uas(const Uas&) = delete;
  Uas& operator=(const Uas&) = delete;

  void start();

  std::vector<sip::SipMessage> uas_on_message(const sip::SipMessage& msg, SimTime now);

  // Successful setups (ACK matched in time) per second over (now - window, now].
  double throughput_probe(SimTime now, Duration window) const;

  const UasCounters& counters() const { return counters_; }
  const std::map<std::string, UasCall>& calls() const { return calls_; }
  // (time, SE index) of every ACK that completed a call.
  const std::vector<std::pair<SimTime, std::size_t>>& successes() const { return successes_; }

 private:
  void on_readable();
  void send(const sip::SipMessage& msg, std::vector<sip::SipMessage>& out);
  void flush();
  void fire_timer(const std::string& call_id, std::size_t step);
  void mark_unexpected(const std::string& call_id, SimTime now);

  sim::Scheduler& sched_;
  sim::ModuleId id_;
  UasConfig cfg_;
  std::vector<Duration> offsets_;
  sim::Channel& from_re_;
  sim::Channel& to_re_;
  std::string residue_;
  flow::ByteFifo out_;
  std::map<std::string, UasCall> calls_;
  std::map<std::string, SimTime> unexpected_;  // call-id -> expiry
  std::vector<std::pair<SimTime, std::size_t>> successes_;
  UasCounters counters_;
};

}  // namespace sipovl::endpoints
