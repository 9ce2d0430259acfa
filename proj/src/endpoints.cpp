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

#include "sipovl/endpoints.hpp"

#include <charconv>
#include <cmath>

#include "sipovl/errors.hpp"

namespace sipovl::endpoints {

using sip::Method;
using sip::SipMessage;

std::string_view arrival_name(Arrival a) {
  return a == Arrival::kPoisson ? "poisson" : "deterministic";
}

std::optional<Arrival> arrival_from_name(std::string_view name) {
  if (name == "deterministic") return Arrival::kDeterministic;
  if (name == "poisson") return Arrival::kPoisson;
  return std::nullopt;
}

std::string make_call_id(std::size_t se, std::uint64_t seq) {
  return std::to_string(se) + "-" + std::to_string(seq);
}

std::size_t se_index_of(std::string_view call_id) {
  std::size_t se = 0;
  auto [p, ec] = std::from_chars(call_id.data(), call_id.data() + call_id.size(), se);
  if (ec != std::errc{} || p == call_id.data() + call_id.size() || *p != '-') {
    throw std::invalid_argument("call-id does not carry an SE index: " + std::string(call_id));
  }
  return se;
}

void UacConfig::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("UAC rate must be positive");
  if (duration <= Duration::zero()) throw ConfigError("UAC duration must be positive");
  if (receive_timeout <= Duration::zero()) throw ConfigError("UAC receive timeout must be positive");
}

namespace {

std::mt19937_64 seeded_rng(std::uint64_t seed, std::size_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

Uac::Uac(sim::Scheduler& sched, sim::ModuleId id, UacConfig cfg, sim::Channel& to_se,
         sim::Channel& from_se)
    : sched_(sched),
      id_(id),
      cfg_(std::move(cfg)),
      to_se_(to_se),
      from_se_(from_se),
      rng_(seeded_rng(cfg_.seed, cfg_.se_index)),
      gap_(cfg_.rate) {
  cfg_.validate();
}

SimTime Uac::arrival_time(std::uint64_t k) {
  if (cfg_.arrival == Arrival::kPoisson) {
    if (k > 0) poisson_clock_ += from_seconds(gap_(rng_));
    return cfg_.phase + poisson_clock_;
  }
  const double offset_ns = static_cast<double>(k) * 1e9 / cfg_.rate;
  return cfg_.phase + Duration(std::llround(offset_ns));
}

void Uac::arm_next_arrival() {
  if (!next_arrival_) return;
  sched_.schedule(*next_arrival_, id_, [this] {
    uac_step(sched_.now());
    arm_next_arrival();
  });
}

void Uac::start() {
  from_se_.on_readable([this] { uac_step(sched_.now()); });
  to_se_.on_writable([this] { flush(); });
  const SimTime first = arrival_time(0);
  if (first < cfg_.duration) next_arrival_ = first;
  arm_next_arrival();
}

std::vector<SipMessage> Uac::uac_step(SimTime now) {
  std::vector<SipMessage> out;
  while (next_arrival_ && *next_arrival_ <= now) {
    std::string id = make_call_id(cfg_.se_index, next_seq_);
    calls_[id].invite_at = *next_arrival_;
    ++counters_.invites_generated;
    enqueue(SipMessage::request(Method::kInvite, std::move(id)), out);
    const SimTime next = arrival_time(++next_seq_);
    next_arrival_ = next < cfg_.duration ? std::optional<SimTime>(next) : std::nullopt;
  }

  if (from_se_.readable_bytes() > 0) residue_ += from_se_.read(from_se_.readable_bytes());
  std::size_t offset = 0;
  for (;;) {
    auto result = sip::parse(std::string_view(residue_).substr(offset));
    if (auto* ok = std::get_if<sip::Parsed>(&result)) {
      offset += ok->consumed;
      handle(ok->message, now, out);
    } else {
      if (std::holds_alternative<sip::Malformed>(result)) offset = residue_.size();
      break;
    }
  }
  residue_.erase(0, offset);
  flush();
  return out;
}

void Uac::handle(const SipMessage& msg, SimTime now, std::vector<SipMessage>& out) {
  if (!msg.is_response()) return;
  auto it = calls_.find(msg.call_id);
  if (it == calls_.end()) {
    ++counters_.late_responses;
    return;
  }
  UacCall& call = it->second;
  if (msg.cseq_method == Method::kInvite) {
    if (msg.status < 200) return;
    if (msg.status < 300) {
      if (!call.answered_at) {
        call.answered_at = now;
        ++counters_.answered;
        pdd_.push_back(to_seconds(now - call.invite_at));
        enqueue(SipMessage::request(Method::kAck, msg.call_id), out);
        enqueue(SipMessage::request(Method::kBye, msg.call_id), out);
        call.bye_at = now;
      } else {
        ++counters_.ok_retransmissions_received;
        if (blocked()) {
          ++counters_.acks_suppressed;
        } else {
          ++counters_.acks_regenerated;
          enqueue(SipMessage::request(Method::kAck, msg.call_id), out);
        }
      }
    } else if (msg.status == 408) {
      ++counters_.invite_408;
    } else if (!call.rejected && !call.answered_at) {
      call.rejected = true;
      ++counters_.rejected;
    }
    return;
  }
  if (msg.cseq_method == Method::kBye && msg.status >= 200) {
    if (call.bye_at && !call.bye_answered && now - *call.bye_at <= cfg_.receive_timeout) {
      call.bye_answered = true;
      if (msg.status == 408) {
        ++counters_.bye_408;
      } else {
        ++counters_.bye_ok;
      }
    } else {
      ++counters_.late_responses;
    }
  }
}

void Uac::enqueue(const SipMessage& msg, std::vector<SipMessage>& out) {
  out_.append(sip::encode(msg, cfg_.sizes));
  out.push_back(msg);
  flush();
}

void Uac::flush() {
  while (!out_.empty()) {
    const std::size_t n = to_se_.try_send(out_.view());
    if (n == 0) break;
    out_.drop(n);
  }
}

std::uint64_t Uac::bye_timeouts(SimTime now) const {
  std::uint64_t n = 0;
  for (const auto& [id, call] : calls_) {
    if (call.bye_at && !call.bye_answered && now - *call.bye_at > cfg_.receive_timeout) ++n;
  }
  return n;
}

void UasConfig::validate() const {
  retransmission.validate();
  if (receive_timeout <= Duration::zero()) throw ConfigError("UAS receive timeout must be positive");
}

Uas::Uas(sim::Scheduler& sched, sim::ModuleId id, UasConfig cfg, sim::Channel& from_re,
         sim::Channel& to_re)
    : sched_(sched), id_(id), cfg_(std::move(cfg)), from_re_(from_re), to_re_(to_re) {
  cfg_.validate();
  offsets_ = sip::retransmit_offsets(cfg_.retransmission);
}

void Uas::start() {
  from_re_.on_readable([this] { on_readable(); });
  to_re_.on_writable([this] { flush(); });
}

void Uas::on_readable() {
  if (from_re_.readable_bytes() > 0) residue_ += from_re_.read(from_re_.readable_bytes());
  std::size_t offset = 0;
  for (;;) {
    auto result = sip::parse(std::string_view(residue_).substr(offset));
    if (auto* ok = std::get_if<sip::Parsed>(&result)) {
      offset += ok->consumed;
      uas_on_message(ok->message, sched_.now());
    } else {
      if (std::holds_alternative<sip::Malformed>(result)) {
        ++counters_.malformed;
        offset = residue_.size();
      }
      break;
    }
  }
  residue_.erase(0, offset);
}

std::vector<SipMessage> Uas::uas_on_message(const SipMessage& msg, SimTime now) {
  std::vector<SipMessage> out;
  if (!msg.is_request()) return out;
  auto it = calls_.find(msg.call_id);
  switch (msg.method) {
    case Method::kInvite: {
      if (it != calls_.end()) {
        ++counters_.unexpected_messages;
        break;
      }
      calls_[msg.call_id] = UasCall{UasCallState::kAwaitingAck, now, 0, true};
      ++counters_.invites_received;
      send(SipMessage::response(180, Method::kInvite, msg.call_id), out);
      ++counters_.ringing_sent;
      send(SipMessage::response(200, Method::kInvite, msg.call_id), out);
      ++counters_.first_ok_sent;
      const Duration first = offsets_.empty() ? cfg_.retransmission.total_timeout : offsets_.front();
      sched_.schedule(now + first, id_, [this, id = msg.call_id] { fire_timer(id, 0); });
      break;
    }
    case Method::kAck: {
      if (it != calls_.end() && it->second.state == UasCallState::kAwaitingAck) {
        it->second.state = UasCallState::kCompleted;
        it->second.timer_armed = false;
        ++counters_.acks_matched;
        successes_.emplace_back(now, se_index_of(msg.call_id));
      } else if (it != calls_.end() && it->second.state != UasCallState::kTimedOut) {
        ++counters_.acks_duplicate;
      } else {
        mark_unexpected(msg.call_id, now);
      }
      break;
    }
    case Method::kBye: {
      if (it != calls_.end() && it->second.state == UasCallState::kCompleted) {
        it->second.state = UasCallState::kClosed;
        send(SipMessage::response(202, Method::kBye, msg.call_id), out);
        ++counters_.byes_answered;
      } else if (it != calls_.end() && it->second.state != UasCallState::kTimedOut) {
        ++counters_.unexpected_messages;
      } else {
        mark_unexpected(msg.call_id, now);
      }
      break;
    }
  }
  return out;
}

void Uas::fire_timer(const std::string& call_id, std::size_t step) {
  auto it = calls_.find(call_id);
  if (it == calls_.end() || it->second.state != UasCallState::kAwaitingAck) return;
  UasCall& call = it->second;
  if (step < offsets_.size()) {
    std::vector<SipMessage> ignored;
    send(SipMessage::response(200, Method::kInvite, call_id), ignored);
    ++call.retransmissions;
    ++counters_.ok_retransmissions;
    const std::size_t next = step + 1;
    const Duration at = next < offsets_.size() ? offsets_[next] : cfg_.retransmission.total_timeout;
    sched_.schedule(call.first_ok_at + at, id_, [this, call_id, next] { fire_timer(call_id, next); });
    return;
  }
  call.state = UasCallState::kTimedOut;
  call.timer_armed = false;
  ++counters_.timed_out;
}

void Uas::mark_unexpected(const std::string& call_id, SimTime now) {
  ++counters_.unexpected_messages;
  if (unexpected_.count(call_id) != 0) return;
  const SimTime expiry = now + cfg_.receive_timeout;
  unexpected_[call_id] = expiry;
  ++counters_.unexpected_created;
  sched_.schedule(expiry, id_, [this, call_id, expiry] {
    auto it = unexpected_.find(call_id);
    if (it != unexpected_.end() && it->second == expiry) {
      unexpected_.erase(it);
      ++counters_.unexpected_timed_out;
    }
  });
}

void Uas::send(const SipMessage& msg, std::vector<SipMessage>& out) {
  out_.append(sip::encode(msg, cfg_.sizes));
  out.push_back(msg);
  flush();
}

void Uas::flush() {
  while (!out_.empty()) {
    const std::size_t n = to_re_.try_send(out_.view());
    if (n == 0) break;
    out_.drop(n);
  }
}

double Uas::throughput_probe(SimTime now, Duration window) const {
  if (window <= Duration::zero()) return 0.0;
  std::uint64_t n = 0;
  for (const auto& [t, se] : successes_) {
    if (t > now - window && t <= now) ++n;
  }
  return static_cast<double>(n) / to_seconds(window);
}

}  // namespace sipovl::endpoints
