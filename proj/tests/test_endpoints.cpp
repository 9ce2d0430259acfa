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

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sipovl/endpoints.hpp"
#include "sipovl/errors.hpp"
#include "sipovl/sim.hpp"
#include "sipovl/sip_message.hpp"

using namespace std::chrono_literals;
using sipovl::SimTime;
using sipovl::endpoints::Arrival;
using sipovl::endpoints::Uac;
using sipovl::endpoints::UacConfig;
using sipovl::endpoints::Uas;
using sipovl::endpoints::UasCallState;
using sipovl::endpoints::UasConfig;
using sipovl::sim::Channel;
using sipovl::sim::Scheduler;
using sipovl::sip::Method;
using sipovl::sip::SipMessage;

namespace {

std::vector<SipMessage> drain(Channel& ch) {
  const std::string buf = ch.read(1u << 20);
  std::vector<SipMessage> out;
  std::size_t off = 0;
  for (;;) {
    auto r = sipovl::sip::parse(std::string_view(buf).substr(off));
    auto* ok = std::get_if<sipovl::sip::Parsed>(&r);
    if (!ok) break;
    off += ok->consumed;
    out.push_back(ok->message);
  }
  return out;
}

void put(Channel& ch, const SipMessage& m) {
  const std::string frame = sipovl::sip::encode(m, {});
  ASSERT_EQ(ch.try_send(frame), frame.size());
}

struct UacRig {
  Scheduler s;
  Channel to_se{s, 10, "uac->se", {}};
  Channel from_se{s, 11, "se->uac", {}};
  Uac uac;

  explicit UacRig(UacConfig cfg) : uac(s, 1, cfg, to_se, from_se) { uac.start(); }
};

UacConfig one_call() {
  UacConfig c;
  c.rate = 1.0;
  c.duration = 1s;
  return c;
}

struct UasRig {
  Scheduler s;
  Channel from_re{s, 10, "re->uas", {}};
  Channel to_re{s, 11, "uas->re", {}};
  Uas uas;

  UasRig() : uas(s, 1, UasConfig{}, from_re, to_re) { uas.start(); }
};

}  // namespace

TEST(CallId, CarriesSeIndex) {
  EXPECT_EQ(sipovl::endpoints::make_call_id(7, 42), "7-42");
  EXPECT_EQ(sipovl::endpoints::se_index_of("7-42"), 7u);
  EXPECT_THROW(sipovl::endpoints::se_index_of("x-1"), std::invalid_argument);
  EXPECT_THROW(sipovl::endpoints::se_index_of("12"), std::invalid_argument);
}

TEST(Uac, RejectsBadConfig) {
  UacConfig c;
  c.rate = 0;
  EXPECT_THROW(c.validate(), sipovl::ConfigError);
  c.rate = 1;
  c.duration = 0s;
  EXPECT_THROW(c.validate(), sipovl::ConfigError);
}

TEST(Uac, DeterministicArrivalsAreEvenlySpaced) {
  UacConfig c;
  c.rate = 150.0;
  c.duration = 2s;
  UacRig r(c);
  r.s.run_until(SimTime{3s});
  ASSERT_EQ(r.uac.counters().invites_generated, 300u);
  std::vector<SimTime> at;
  for (const auto& [id, call] : r.uac.calls()) at.push_back(call.invite_at);
  std::sort(at.begin(), at.end());
  for (std::size_t k = 0; k < at.size(); ++k) {
    // Exact k/rate, rounded to the nanosecond.
    EXPECT_EQ(at[k].count(), std::llround(static_cast<double>(k) * 1e9 / 150.0));
  }
}

TEST(Uac, PoissonArrivalsAreReproducible) {
  UacConfig c;
  c.rate = 50.0;
  c.duration = 20s;
  c.arrival = Arrival::kPoisson;
  c.seed = 99;
  UacRig a(c), b(c);
  a.s.run_until(SimTime{21s});
  b.s.run_until(SimTime{21s});
  EXPECT_EQ(a.uac.counters().invites_generated, b.uac.counters().invites_generated);
  const double n = static_cast<double>(a.uac.counters().invites_generated);
  EXPECT_NEAR(n, 1000.0, 4 * std::sqrt(1000.0));
  c.seed = 100;
  UacRig d(c);
  d.s.run_until(SimTime{21s});
  EXPECT_NE(a.uac.calls().at("0-1").invite_at, d.uac.calls().at("0-1").invite_at);
}

TEST(Uac, FirstOkRecordsPddAndSendsAckThenBye) {
  UacRig r(one_call());
  r.s.run_until(SimTime{20ms} - SimTime{100us});
  auto sent = r.uac.uac_step(r.s.now());
  EXPECT_TRUE(sent.empty());
  ASSERT_EQ(drain(r.to_se).size(), 1u);
  put(r.from_se, SipMessage::response(180, Method::kInvite, "0-0"));
  put(r.from_se, SipMessage::response(200, Method::kInvite, "0-0"));
  r.s.run_until(SimTime{30ms});
  ASSERT_EQ(r.uac.pdd_samples().size(), 1u);
  EXPECT_DOUBLE_EQ(r.uac.pdd_samples()[0], 0.020);
  auto out = drain(r.to_se);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].method, Method::kAck);
  EXPECT_EQ(out[1].method, Method::kBye);
  EXPECT_EQ(*r.uac.calls().at("0-0").bye_at, SimTime{20ms});
}

TEST(Uac, RejectionIsTerminal) {
  UacRig r(one_call());
  r.s.run_until(SimTime{1ms});
  drain(r.to_se);
  put(r.from_se, SipMessage::response(503, Method::kInvite, "0-0"));
  r.s.run_until(SimTime{2ms});
  EXPECT_EQ(r.uac.counters().rejected, 1u);
  EXPECT_TRUE(drain(r.to_se).empty());
  EXPECT_TRUE(r.uac.pdd_samples().empty());
}

TEST(Uac, DuplicateOkRegeneratesAck) {
  UacRig r(one_call());
  r.s.run_until(SimTime{1ms});
  drain(r.to_se);
  put(r.from_se, SipMessage::response(200, Method::kInvite, "0-0"));
  r.s.run_until(SimTime{2ms});
  drain(r.to_se);
  put(r.from_se, SipMessage::response(200, Method::kInvite, "0-0"));
  r.s.run_until(SimTime{3ms});
  auto out = drain(r.to_se);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].method, Method::kAck);
  EXPECT_EQ(r.uac.counters().acks_regenerated, 1u);
  EXPECT_EQ(r.uac.counters().ok_retransmissions_received, 1u);
}

TEST(Uac, ByeAnswerCountedOnce) {
  UacRig r(one_call());
  r.s.run_until(SimTime{1ms});
  put(r.from_se, SipMessage::response(200, Method::kInvite, "0-0"));
  r.s.run_until(SimTime{2ms});
  put(r.from_se, SipMessage::response(202, Method::kBye, "0-0"));
  put(r.from_se, SipMessage::response(202, Method::kBye, "0-0"));
  r.s.run_until(SimTime{3ms});
  EXPECT_EQ(r.uac.counters().bye_ok, 1u);
  EXPECT_EQ(r.uac.counters().late_responses, 1u);
  EXPECT_EQ(r.uac.bye_timeouts(SimTime{100s}), 0u);
}

TEST(Uas, InviteGetsRingingThenOk) {
  UasRig r;
  auto out = r.uas.uas_on_message(SipMessage::request(Method::kInvite, "0-0"), SimTime{0});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].status, 180);
  EXPECT_EQ(out[1].status, 200);
  EXPECT_EQ(r.uas.calls().at("0-0").state, UasCallState::kAwaitingAck);
  EXPECT_TRUE(r.uas.calls().at("0-0").timer_armed);
}

TEST(Uas, RetransmitsOnScheduleThenTimesOut) {
  UasRig r;
  r.uas.uas_on_message(SipMessage::request(Method::kInvite, "0-0"), SimTime{0});
  const std::vector<double> offsets{0.5, 1.5, 3.5, 7.5, 11.5, 15.5, 19.5, 23.5, 27.5, 31.5};
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const SimTime at = sipovl::from_seconds(offsets[k]);
    r.s.run_until(at - SimTime{1});
    EXPECT_EQ(r.uas.counters().ok_retransmissions, k) << "before offset " << offsets[k];
    r.s.run_until(at);
    EXPECT_EQ(r.uas.counters().ok_retransmissions, k + 1) << "at offset " << offsets[k];
    drain(r.to_re);
  }
  r.s.run_until(SimTime{32s} - SimTime{1});
  EXPECT_EQ(r.uas.calls().at("0-0").state, UasCallState::kAwaitingAck);
  r.s.run_until(SimTime{32s});
  EXPECT_EQ(r.uas.calls().at("0-0").state, UasCallState::kTimedOut);
  EXPECT_FALSE(r.uas.calls().at("0-0").timer_armed);
  EXPECT_EQ(r.uas.counters().timed_out, 1u);
}

TEST(Uas, AckStopsRetransmission) {
  UasRig r;
  r.uas.uas_on_message(SipMessage::request(Method::kInvite, "0-0"), SimTime{0});
  r.s.run_until(SimTime{600ms});
  r.uas.uas_on_message(SipMessage::request(Method::kAck, "0-0"), r.s.now());
  r.s.run_until(SimTime{40s});
  EXPECT_EQ(r.uas.counters().ok_retransmissions, 1u);
  EXPECT_EQ(r.uas.calls().at("0-0").state, UasCallState::kCompleted);
  EXPECT_FALSE(r.uas.calls().at("0-0").timer_armed);
  auto out = r.uas.uas_on_message(SipMessage::request(Method::kBye, "0-0"), r.s.now());
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].status, 202);
  EXPECT_EQ(out[0].cseq_method, Method::kBye);
  // Success is dated at the ACK, not the BYE.
  EXPECT_EQ(r.uas.successes().at(0).first, SimTime{600ms});
}

TEST(Uas, LateByeOpensUnexpectedState) {
  UasRig r;
  r.uas.uas_on_message(SipMessage::request(Method::kInvite, "0-0"), SimTime{0});
  r.s.run_until(SimTime{40s});
  auto out = r.uas.uas_on_message(SipMessage::request(Method::kBye, "0-0"), r.s.now());
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(r.uas.counters().unexpected_created, 1u);
  r.s.run_until(SimTime{72s} - SimTime{1});
  EXPECT_EQ(r.uas.counters().unexpected_timed_out, 0u);
  r.s.run_until(SimTime{72s});
  EXPECT_EQ(r.uas.counters().unexpected_timed_out, 1u);
}

TEST(Uas, AckWithoutInviteIsUnexpected) {
  UasRig r;
  EXPECT_TRUE(r.uas.uas_on_message(SipMessage::request(Method::kAck, "3-9"), SimTime{0}).empty());
  EXPECT_EQ(r.uas.counters().unexpected_created, 1u);
  EXPECT_TRUE(r.uas.calls().empty());
}

TEST(Uas, ThroughputProbe) {
  UasRig r;
  EXPECT_EQ(r.uas.throughput_probe(SimTime{1s}, 1s), 0.0);
  for (int i = 0; i < 65; ++i) {
    const std::string id = "0-" + std::to_string(i);
    const SimTime t = SimTime{10ms} * (i + 1);
    r.s.run_until(t);
    r.uas.uas_on_message(SipMessage::request(Method::kInvite, id), t);
    r.uas.uas_on_message(SipMessage::request(Method::kAck, id), t);
    drain(r.to_re);
  }
  EXPECT_DOUBLE_EQ(r.uas.throughput_probe(SimTime{1s}, 1s), 65.0);

  // An ACK after the timeout does not count.
  r.uas.uas_on_message(SipMessage::request(Method::kInvite, "1-0"), r.s.now());
  r.s.run_until(r.s.now() + 33s);
  r.uas.uas_on_message(SipMessage::request(Method::kAck, "1-0"), r.s.now());
  EXPECT_EQ(r.uas.throughput_probe(r.s.now(), 1s), 0.0);
  EXPECT_EQ(r.uas.counters().acks_matched, 65u);
}
