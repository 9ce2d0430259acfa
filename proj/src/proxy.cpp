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

#include "sipovl/proxy.hpp"

#include <algorithm>

#include "sipovl/errors.hpp"

namespace sipovl::proxy {

using sip::MessageClass;
using sip::Method;
using sip::SipMessage;

std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kDefault: return "default";
    case Mechanism::kEcsBmSf: return "ecs-bm-sf";
    case Mechanism::kIcsBmSf: return "ics-bm-sf";
  }
  return "?";
}

std::optional<Mechanism> mechanism_from_name(std::string_view name) {
  for (auto m : {Mechanism::kDefault, Mechanism::kEcsBmSf, Mechanism::kIcsBmSf}) {
    if (mechanism_name(m) == name) return m;
  }
  return std::nullopt;
}

ForwardDecision smart_forward(MessageClass cls, std::size_t invite_link_unsent,
                              std::size_t threshold) {
  if (cls != MessageClass::kInviteRequest) return ForwardDecision::kForward;
  return invite_link_unsent <= threshold ? ForwardDecision::kForward : ForwardDecision::kReject;
}

Duration CostModel::of(MessageClass cls) const {
  switch (cls) {
    case MessageClass::kInviteRequest: return invite;
    case MessageClass::kNonInviteRequest: return non_invite;
    case MessageClass::kProvisionalResponse: return provisional;
    case MessageClass::kFinalResponse: return final_response;
  }
  return invite;
}

CostModel CostModel::receiving_entity_default() {
  using std::chrono::milliseconds;
  return CostModel{milliseconds(10), milliseconds(1), milliseconds(1), milliseconds(1)};
}

void ProxyConfig::validate() const {
  if (app_buf < sizes.largest()) {
    throw ConfigError("application buffer (" + std::to_string(app_buf) +
                      " B) is smaller than the largest message (" +
                      std::to_string(sizes.largest()) + " B)");
  }
  if (rejection_status < 300 || rejection_status > 699) {
    throw ConfigError("rejection status must be a 3xx-6xx final response");
  }
  if (send_timeout <= Duration::zero()) throw ConfigError("send timeout must be positive");
  for (auto c : {cost.invite, cost.non_invite, cost.provisional, cost.final_response}) {
    if (c < Duration::zero()) throw ConfigError("processing cost must be non-negative");
  }
}

std::string_view traffic_name(Traffic t) {
  switch (t) {
    case Traffic::kInvite: return "invite";
    case Traffic::kAck: return "ack";
    case Traffic::kBye: return "bye";
    case Traffic::kProvisional: return "provisional";
    case Traffic::kInviteOk: return "invite_200";
    case Traffic::kByeOk: return "bye_2xx";
    case Traffic::kFailure: return "failure";
  }
  return "?";
}

Traffic traffic_of(const SipMessage& msg) {
  if (msg.is_request()) {
    switch (msg.method) {
      case Method::kInvite: return Traffic::kInvite;
      case Method::kAck: return Traffic::kAck;
      case Method::kBye: return Traffic::kBye;
    }
  }
  if (msg.status < 200) return Traffic::kProvisional;
  if (msg.status >= 300) return Traffic::kFailure;
  return msg.cseq_method == Method::kInvite ? Traffic::kInviteOk : Traffic::kByeOk;
}

Proxy::Proxy(sim::Scheduler& sched, sim::ModuleId id, std::string name, ProxyConfig cfg)
    : sched_(sched), id_(id), name_(std::move(name)), cfg_(std::move(cfg)) {
  cfg_.validate();
}

std::size_t Proxy::add_upstream(const UpstreamPeer& peer) {
  if (peer.requests_in.empty() || peer.responses_out == nullptr) {
    throw ConfigError(name_ + ": upstream peer needs request input and response output");
  }
  if (cfg_.role == Role::kRe && cfg_.mechanism == Mechanism::kEcsBmSf && peer.requests_in.size() != 2) {
    throw ConfigError(name_ + ": ECS needs separate INVITE and non-INVITE connections");
  }
  const int index = static_cast<int>(upstream_.size());
  upstream_.push_back(peer);
  for (const Input& in : peer.requests_in) {
    if (in.app_buf != 0 && in.app_buf < cfg_.sizes.largest()) {
      throw ConfigError(name_ + ": application buffer smaller than the largest message");
    }
    InputConn conn;
    conn.channel = in.channel;
    conn.app_buf = in.app_buf ? in.app_buf : cfg_.app_buf;
    conn.upstream = static_cast<int>(index);
    inputs_.push_back(std::move(conn));
    in.channel->on_readable([this] { kick(); });
  }
  channels_[peer.responses_out->id()] = peer.responses_out;
  peer.responses_out->on_writable([this, ch = peer.responses_out] { flush(ch); });
  return static_cast<std::size_t>(index);
}

void Proxy::set_downstream(const DownstreamPeer& peer) {
  if (peer.requests_out == nullptr || peer.responses_in.channel == nullptr) {
    throw ConfigError(name_ + ": downstream peer needs request output and response input");
  }
  downstream_ = peer;
  if (downstream_.invite_out == nullptr) downstream_.invite_out = downstream_.requests_out;
  if (cfg_.role == Role::kSe && cfg_.mechanism == Mechanism::kEcsBmSf &&
      downstream_.invite_out == downstream_.requests_out) {
    throw ConfigError(name_ + ": ECS needs a dedicated INVITE connection");
  }
  if (has_smart_forwarding(cfg_.mechanism) && cfg_.role == Role::kSe &&
      downstream_.invite_out->link().config().send_buf < cfg_.sizes.invite + cfg_.sf_threshold) {
    throw ConfigError(name_ + ": INVITE send buffer cannot hold a whole INVITE");
  }
  const Input& in = downstream_.responses_in;
  InputConn conn;
  conn.channel = in.channel;
  conn.app_buf = in.app_buf ? in.app_buf : cfg_.app_buf;
  inputs_.push_back(std::move(conn));
  in.channel->on_readable([this] { kick(); });
  for (sim::Channel* ch : {downstream_.requests_out, downstream_.invite_out}) {
    if (channels_.emplace(ch->id(), ch).second) {
      ch->on_writable([this, ch] { flush(ch); });
    }
  }
}

void Proxy::kick() {
  if (busy_ || run_scheduled_) return;
  run_scheduled_ = true;
  sched_.schedule(sched_.now(), id_, [this] { run(); });
}

bool Proxy::has_work(const InputConn& in) const {
  if (in.closed || in.blocked_on != nullptr) return false;
  return !in.ready.empty() || in.channel->readable_bytes() > 0;
}

void Proxy::run() {
  run_scheduled_ = false;
  if (busy_ || inputs_.empty()) return;

  int pick = -1;
  if (current_ >= 0) {
    const InputConn& in = inputs_[current_];
    if (!in.closed && in.blocked_on == nullptr && !in.ready.empty()) pick = current_;
  }
  if (pick < 0) {
    current_ = -1;
    const std::size_t n = inputs_.size();
    for (std::size_t k = 0; k < n && pick < 0; ++k) {
      const std::size_t idx = (rr_next_ + k) % n;
      InputConn& in = inputs_[idx];
      if (!has_work(in)) continue;
      if (in.ready.empty()) on_readable(idx);
      if (in.ready.empty() || in.closed) continue;
      pick = static_cast<int>(idx);
      rr_next_ = (idx + 1) % n;
    }
    current_ = pick;
  }
  if (pick < 0) return;

  const Duration cost = cfg_.cost.of(sip::classify(inputs_[pick].ready.front()));
  busy_ = true;
  sched_.schedule(sched_.now() + cost, id_, [this, pick] { complete(static_cast<std::size_t>(pick)); });
}

void Proxy::complete(std::size_t input) {
  busy_ = false;
  InputConn& in = inputs_[input];
  SipMessage msg = std::move(in.ready.front());
  in.ready.pop_front();
  count(msg);
  process_and_route(msg, input);
  run();
}

void Proxy::count(const SipMessage& msg) {
  ++counters_.messages_processed;
  const auto second = static_cast<std::size_t>(sched_.now() / std::chrono::seconds(1));
  if (per_second_.size() <= second) per_second_.resize(second + 1);
  ++per_second_[second][static_cast<std::size_t>(traffic_of(msg))];
}

std::vector<SipMessage> Proxy::on_readable(std::size_t input) {
  InputConn& in = inputs_.at(input);
  std::vector<SipMessage> parsed;
  if (in.closed) return parsed;
  const std::size_t room = in.app_buf - std::min(in.app_buf, in.residue.size());
  if (room > 0) in.residue += in.channel->read(room);

  std::size_t offset = 0;
  for (;;) {
    auto result = sip::parse(std::string_view(in.residue).substr(offset));
    if (auto* ok = std::get_if<sip::Parsed>(&result)) {
      offset += ok->consumed;
      if (ok->message.is_request() && ok->message.method == Method::kInvite) {
        ++counters_.invites_received;
      }
      parsed.push_back(ok->message);
      in.ready.push_back(std::move(ok->message));
    } else if (std::holds_alternative<sip::Malformed>(result)) {
      ++counters_.malformed;
      in.closed = true;
      in.residue.clear();
      offset = 0;
      break;
    } else {
      break;
    }
  }
  in.residue.erase(0, offset);
  return parsed;
}

std::vector<Emission> Proxy::process_and_route(const SipMessage& msg, std::size_t input) {
  std::vector<Emission> out;
  InputConn& in = inputs_.at(input);
  if (msg.is_request()) {
    route_request(msg, in, out);
  } else {
    route_response(msg, in, out);
  }
  return out;
}

void Proxy::route_request(const SipMessage& msg, InputConn& in, std::vector<Emission>& out) {
  if (in.upstream < 0) {
    ++counters_.responses_unroutable;
    return;
  }
  const UpstreamPeer& up = upstream_[static_cast<std::size_t>(in.upstream)];
  const bool sf = cfg_.role == Role::kSe && has_smart_forwarding(cfg_.mechanism);
  const auto queued = [this](sim::Channel* ch) {
    auto it = outputs_.find(ch->id());
    return ch->unsent_bytes() + (it == outputs_.end() ? 0 : it->second.pending.size());
  };

  if (msg.method == Method::kInvite) {
    sim::Channel* target = downstream_.invite_out;
    if (sf) {
      auto decision = smart_forward(MessageClass::kInviteRequest, queued(target), cfg_.sf_threshold);
      if (decision == ForwardDecision::kForward && target->send_space() < cfg_.sizes.invite) {
        decision = ForwardDecision::kReject;
      }
      if (decision == ForwardDecision::kReject) {
        ++counters_.invites_rejected;
        emit(up.responses_out, SipMessage::response(cfg_.rejection_status, Method::kInvite, msg.call_id),
             &in, out);
        return;
      }
    }
    routes_[msg.call_id] = in.upstream;
    emit(up.responses_out, SipMessage::response(100, Method::kInvite, msg.call_id), &in, out);
    if (sf && queued(target) > cfg_.sf_threshold) {
      throw InvariantViolation(name_ + ": INVITE emitted onto a non-empty send queue");
    }
    emit(target, msg, &in, out);
    ++counters_.invites_forwarded;
    remember_request(msg, in.upstream);
    auto [it, fresh] = sessions_.try_emplace(msg.call_id);
    if (fresh) {
      it->second = SessionRecord{msg.call_id, SessionRecord::State::kStarted, sched_.now(),
                                 SimTime{0}, in.channel->id(), target->id()};
      ++started_;
    }
    return;
  }

  if (sf && smart_forward(MessageClass::kNonInviteRequest, queued(downstream_.requests_out),
                          cfg_.sf_threshold) != ForwardDecision::kForward) {
    throw InvariantViolation(name_ + ": non-INVITE request rejected");
  }
  emit(downstream_.requests_out, msg, &in, out);
  ++counters_.non_invites_forwarded;
  if (msg.method == Method::kBye) {
    remember_request(msg, in.upstream);
    auto it = sessions_.find(msg.call_id);
    if (it != sessions_.end() && it->second.state == SessionRecord::State::kStarted) {
      it->second.state = SessionRecord::State::kTerminated;
      it->second.terminated_at = sched_.now();
      ++terminated_;
    }
  }
}

void Proxy::route_response(const SipMessage& msg, InputConn& in, std::vector<Emission>& out) {
  pending_requests_.erase(RequestKey{msg.call_id, msg.cseq_method});
  // 100 Trying is hop-by-hop.
  if (msg.status == 100) return;
  auto route = routes_.find(msg.call_id);
  if (route == routes_.end()) {
    ++counters_.responses_unroutable;
    return;
  }
  emit(upstream_[static_cast<std::size_t>(route->second)].responses_out, msg, &in, out);
  ++counters_.responses_forwarded;
}

void Proxy::remember_request(const SipMessage& msg, int upstream) {
  RequestKey key{msg.call_id, msg.method};
  const SimTime now = sched_.now();
  pending_requests_[key] = PendingRequest{now, upstream};
  timeout_queue_.emplace_back(now + cfg_.send_timeout, std::move(key));
  sched_.schedule(now + cfg_.send_timeout, id_, [this] { send_timeout_sweep(sched_.now()); });
}

std::vector<Emission> Proxy::send_timeout_sweep(SimTime now) {
  std::vector<Emission> out;
  while (!timeout_queue_.empty() && timeout_queue_.front().first <= now) {
    RequestKey key = std::move(timeout_queue_.front().second);
    timeout_queue_.pop_front();
    auto it = pending_requests_.find(key);
    if (it == pending_requests_.end() || it->second.forwarded_at + cfg_.send_timeout > now) continue;
    const int up = it->second.upstream;
    pending_requests_.erase(it);
    ++counters_.send_timeouts;
    emit(upstream_[static_cast<std::size_t>(up)].responses_out,
         SipMessage::response(408, key.second, key.first), nullptr, out);
  }
  return out;
}

void Proxy::emit(sim::Channel* ch, const SipMessage& msg, InputConn* source, std::vector<Emission>& out) {
  const std::string frame = sip::encode(msg, cfg_.sizes);
  OutputQueue& q = outputs_[ch->id()];
  if (q.pending.empty()) {
    const std::size_t n = ch->try_send(frame);
    if (n < frame.size()) q.pending.append(std::string_view(frame).substr(n));
  } else {
    q.pending.append(frame);
  }
  if (!q.pending.empty()) {
    if (source != nullptr) source->blocked_on = ch;
    counters_.pending_output_peak = std::max(counters_.pending_output_peak, q.pending.size());
  }
  out.push_back(Emission{ch->id(), msg});
}

void Proxy::flush(sim::Channel* ch) {
  OutputQueue& q = outputs_[ch->id()];
  while (!q.pending.empty()) {
    const std::size_t n = ch->try_send(q.pending.view());
    if (n == 0) break;
    q.pending.drop(n);
  }
  if (!q.pending.empty()) return;
  for (InputConn& in : inputs_) {
    if (in.blocked_on == ch) in.blocked_on = nullptr;
  }
  kick();
}

std::size_t Proxy::invites_waiting() const {
  std::size_t n = 0;
  for (const InputConn& in : inputs_) {
    n += static_cast<std::size_t>(std::count_if(in.ready.begin(), in.ready.end(), [](const SipMessage& m) {
      return m.is_request() && m.method == Method::kInvite;
    }));
  }
  return n;
}

std::size_t Proxy::pending_output_bytes() const {
  std::size_t n = 0;
  for (const auto& [id, q] : outputs_) n += q.pending.size();
  return n;
}

}  // namespace sipovl::proxy
