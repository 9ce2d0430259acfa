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
#include <string>
#include <vector>

#include "sipovl/errors.hpp"
#include "sipovl/flowlink.hpp"
#include "flow_reference.hpp"

using namespace std::chrono_literals;
using sipovl::Duration;
using sipovl::SimTime;
using sipovl::flow::ByteFifo;
using sipovl::flow::FlowLink;
using sipovl::flow::LinkConfig;

namespace {

LinkConfig cfg(std::size_t send, std::size_t recv, Duration delay = 100us) {
  LinkConfig c;
  c.send_buf = send;
  c.recv_buf = recv;
  c.one_way_delay = delay;
  return c;
}

}  // namespace

TEST(ByteFifo, TakeDropAndCompact) {
  ByteFifo f;
  std::string all;
  for (int i = 0; i < 2000; ++i) {
    const std::string chunk(7, static_cast<char>('a' + i % 26));
    f.append(chunk);
    all += chunk;
    if (i % 3 == 0) {
      ASSERT_EQ(f.take(5), all.substr(0, 5));
      all.erase(0, 5);
    }
    if (i % 5 == 0) {
      f.drop(3);
      all.erase(0, 3);
    }
    ASSERT_EQ(f.view(), all);
  }
  f.drop(1u << 30);
  EXPECT_TRUE(f.empty());
}

TEST(FlowLink, FreshLinkIsEmpty) {
  FlowLink l(cfg(16384, 65536));
  EXPECT_EQ(l.unsent_bytes(), 0u);
  EXPECT_EQ(l.advertised_window(), 65536u);
  EXPECT_EQ(l.readable_bytes(), 0u);
}

TEST(FlowLink, ZeroBufferRejected) {
  EXPECT_THROW(FlowLink{cfg(0, 1024)}, sipovl::ConfigError);
  EXPECT_THROW(FlowLink{cfg(1024, 0)}, sipovl::ConfigError);
  EXPECT_THROW(FlowLink{cfg(1024, 1024, -1us)}, sipovl::ConfigError);
}

TEST(FlowLink, TrySendAcceptsWhatFits) {
  FlowLink l(cfg(16384, 65536));
  EXPECT_EQ(l.try_send(std::string(1024, 'i')), 1024u);

  FlowLink small(cfg(2048, 1, 0us));
  // Fill recv (1 byte), then the send queue holds what cannot move.
  EXPECT_EQ(small.try_send(std::string(1537, 'a')), 1537u);
  small.transfer_step(SimTime{0});
  EXPECT_EQ(small.unsent_bytes(), 1536u);
  EXPECT_EQ(small.try_send(std::string(1024, 'b')), 512u);
  EXPECT_EQ(small.try_send("c"), 0u);
}

TEST(FlowLink, ClosedWindowKeepsBytesUnsent) {
  FlowLink l(cfg(16384, 1024, 0us));
  l.try_send(std::string(1024, 'a'));
  l.transfer_step(SimTime{0});
  EXPECT_EQ(l.advertised_window(), 0u);
  EXPECT_EQ(l.try_send(std::string(1024, 'b')), 1024u);
  l.transfer_step(SimTime{0});
  EXPECT_EQ(l.unsent_bytes(), 1024u);
  EXPECT_EQ(l.read(4096).size(), 1024u);
  l.transfer_step(SimTime{0});
  EXPECT_EQ(l.unsent_bytes(), 0u);
}

TEST(FlowLink, DeliveryAfterOneWayDelay) {
  FlowLink l(cfg(16384, 65536));
  l.try_send(std::string(1024, 'a'));
  EXPECT_EQ(l.transfer_step(SimTime{0}), 0u);
  EXPECT_EQ(l.unsent_bytes(), 0u);
  EXPECT_EQ(l.in_transit_bytes(), 1024u);
  ASSERT_TRUE(l.next_arrival().has_value());
  EXPECT_EQ(*l.next_arrival(), SimTime{100us});
  EXPECT_EQ(l.transfer_step(SimTime{99us}), 0u);
  EXPECT_EQ(l.transfer_step(SimTime{100us}), 1024u);
  EXPECT_EQ(l.readable_bytes(), 1024u);
}

TEST(FlowLink, ReadIsPartialAndReopensWindow) {
  FlowLink l(cfg(16384, 4096, 0us));
  l.try_send(std::string(1024, 'a'));
  l.transfer_step(SimTime{0});
  EXPECT_EQ(l.read(4096).size(), 1024u);
  EXPECT_EQ(l.read(4096).size(), 0u);

  l.try_send(std::string(1024, 'b'));
  l.transfer_step(SimTime{0});
  const std::size_t before = l.advertised_window();
  EXPECT_EQ(l.read(512).size(), 512u);
  EXPECT_EQ(l.advertised_window(), before + 512);
}

TEST(FlowLink, WindowQuantumOpensInWholeSteps) {
  LinkConfig c = cfg(16384, 2048, 0us);
  c.window_quantum = 1448;
  FlowLink l(c);
  EXPECT_EQ(l.advertised_window(), 1448u);
  l.try_send(std::string(3000, 'a'));
  l.transfer_step(SimTime{0});
  EXPECT_EQ(l.readable_bytes(), 1448u);
  EXPECT_EQ(l.advertised_window(), 0u);  // 600 free, below one quantum
  l.read(1000);
  EXPECT_EQ(l.advertised_window(), 1448u);
  l.transfer_step(SimTime{0});
  EXPECT_EQ(l.readable_bytes(), 448u + 1448u);

  // The quantum never exceeds the buffer, so a tiny buffer still moves data.
  LinkConfig tiny = cfg(16384, 1024, 0us);
  tiny.window_quantum = 1448;
  FlowLink t(tiny);
  t.try_send(std::string(2000, 'b'));
  t.transfer_step(SimTime{0});
  EXPECT_EQ(t.readable_bytes(), 1024u);
}

// Conservation, bounds, FIFO order and zero-window monotonicity over
// 10^4 randomized schedules, checked step by step against the reference.
TEST(FlowLinkProperty, RandomSchedulesMatchReference) {
  const std::string failure = sipovl::testing::check_flowlink_schedules(7, 10000);
  EXPECT_TRUE(failure.empty()) << failure;
}
