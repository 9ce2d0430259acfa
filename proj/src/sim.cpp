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

#include "sipovl/sim.hpp"

#include <algorithm>
#include <tuple>

#include "sipovl/errors.hpp"

namespace sipovl::sim {

bool Scheduler::Later::operator()(const Event& a, const Event& b) const {
  return std::tie(a.at, a.module, a.seq) > std::tie(b.at, b.module, b.seq);
}

void Scheduler::schedule(SimTime at, ModuleId module, Action action) {
  if (at < now_) throw InvariantViolation("event scheduled in the past");
  heap_.push_back(Event{at, module, next_seq_++, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

void Scheduler::run_until(SimTime end) {
  while (!heap_.empty() && heap_.front().at <= end) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event ev = std::move(heap_.back());
    heap_.pop_back();
    if (ev.at < now_) throw InvariantViolation("event executed out of timestamp order");
    now_ = ev.at;
    ++executed_;
    ev.action();
  }
  now_ = std::max(now_, end);
}

Channel::Channel(Scheduler& sched, ModuleId id, std::string name, const flow::LinkConfig& cfg)
    : sched_(sched), id_(id), name_(std::move(name)), link_(cfg) {}

std::size_t Channel::try_send(std::string_view payload) {
  const std::size_t n = link_.try_send(payload);
  if (n > 0) pump();
  return n;
}

std::string Channel::read(std::size_t max) {
  std::string out = link_.read(max);
  if (!out.empty()) pump();
  return out;
}

void Channel::pump() {
  const std::size_t unsent_before = link_.unsent_bytes();
  const std::size_t delivered = link_.transfer_step(sched_.now());
  if (delivered > 0 && on_readable_ && !readable_notice_pending_) {
    readable_notice_pending_ = true;
    sched_.schedule(sched_.now(), id_, [this] {
      readable_notice_pending_ = false;
      on_readable_();
    });
  }
  if (link_.unsent_bytes() < unsent_before && on_writable_ && !writable_notice_pending_) {
    writable_notice_pending_ = true;
    sched_.schedule(sched_.now(), id_, [this] {
      writable_notice_pending_ = false;
      on_writable_();
    });
  }
  arm_arrival();
}

void Channel::arm_arrival() {
  auto next = link_.next_arrival();
  if (!next || (armed_at_ && *armed_at_ <= *next)) return;
  armed_at_ = *next;
  sched_.schedule(*next, id_, [this, at = *next] {
    if (armed_at_ == at) armed_at_.reset();
    pump();
  });
}

}  // namespace sipovl::sim
