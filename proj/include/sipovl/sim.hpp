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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sipovl/flowlink.hpp"
#include "sipovl/time.hpp"

namespace sipovl::sim {

using ModuleId = std::uint32_t;

// Single-threaded discrete-event loop over virtual time. Events at the same
// instant run in (module id, insertion sequence) order.
class Scheduler {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  // Throws InvariantViolation when `at` lies in the past.
  void schedule(SimTime at, ModuleId module, Action action);

  // Executes every event with timestamp <= end, then sets the clock to end.
  void run_until(SimTime end);

  std::uint64_t executed() const { return executed_; }
  std::size_t pending() const { return heap_.size(); }

 private:
  struct Event {
    SimTime at;
    ModuleId module;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };

  std::vector<Event> heap_;
  SimTime now_{0};
  std::uint64_t next_seq_ = 0;
  std::uint64_t executed_ = 0;
};

// A FlowLink driven by the scheduler: sends and reads immediately advance
// the link, arrivals fire as events, and the two attached endpoints are
// told (through deferred events) when data became readable or send space
// was freed.
class Channel {
 public:
  Channel(Scheduler& sched, ModuleId id, std::string name, const flow::LinkConfig& cfg);
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  ModuleId id() const { return id_; }
  const std::string& name() const { return name_; }
  const flow::FlowLink& link() const { return link_; }

  std::size_t try_send(std::string_view payload);
  std::string read(std::size_t max);
  std::size_t unsent_bytes() const { return link_.unsent_bytes(); }
  std::size_t readable_bytes() const { return link_.readable_bytes(); }
  std::size_t send_space() const { return link_.send_space(); }

  void on_readable(std::function<void()> cb) { on_readable_ = std::move(cb); }
  void on_writable(std::function<void()> cb) { on_writable_ = std::move(cb); }

 private:
  void pump();
  void arm_arrival();

  Scheduler& sched_;
  ModuleId id_;
  std::string name_;
  flow::FlowLink link_;
  std::function<void()> on_readable_;
  std::function<void()> on_writable_;
  std::optional<SimTime> armed_at_;
  bool readable_notice_pending_ = false;
  bool writable_notice_pending_ = false;
};

}  // namespace sipovl::sim
