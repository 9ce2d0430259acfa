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

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

#include "sipovl/time.hpp"

namespace sipovl::flow {

// FIFO of bytes with cheap pops from the front.
class ByteFifo {
 public:
  std::size_t size() const { return data_.size() - head_; }
  bool empty() const { return size() == 0; }
  void append(std::string_view bytes) { data_.append(bytes); }
  std::string_view view() const { return std::string_view(data_).substr(head_); }
  std::string take(std::size_t n);
  void drop(std::size_t n);

 private:
  void compact();

  std::string data_;
  std::size_t head_ = 0;
};

struct LinkConfig {
  std::size_t send_buf = 16384;
  std::size_t recv_buf = 65536;
  // Half of a 0.2 ms LAN round trip.
  Duration one_way_delay = std::chrono::microseconds(100);
  // When nonzero the receiver opens its window only in whole multiples of
  // min(window_quantum, recv_buf), as a receiver avoiding silly windows
  // does with its MSS. 0 keeps the window byte-granular.
  std::size_t window_quantum = 0;

  // Throws ConfigError when a buffer is zero or the delay is negative.
  void validate() const;
};

// One direction of a TCP connection, reduced to receiver flow control:
//
//   try_send -> [send queue] --transfer_step--> [in transit] --> [recv queue] -> read
//
// Bytes leave the send queue only while the advertised window
// (recv_buf - recv queue - in transit) is open. No congestion window, no
// loss, byte-granular transfer unless a window quantum is configured.
class FlowLink {
 public:
  explicit FlowLink(const LinkConfig& cfg);

  const LinkConfig& config() const { return cfg_; }

  // Appends as much of `payload` as fits in the send buffer. Never blocks.
  std::size_t try_send(std::string_view payload);

  // Bytes written by the application but not yet handed to the network.
  std::size_t unsent_bytes() const { return send_queue_.size(); }

  // Delivers in-transit bytes that are due at `now`, then launches as many
  // queued bytes as the window allows. Returns the bytes delivered.
  std::size_t transfer_step(SimTime now);

  std::string read(std::size_t max);

  std::size_t advertised_window() const;
  std::size_t send_space() const { return cfg_.send_buf - send_queue_.size(); }
  std::size_t readable_bytes() const { return recv_queue_.size(); }
  std::size_t in_transit_bytes() const { return in_transit_bytes_; }
  std::optional<SimTime> next_arrival() const;

  std::uint64_t bytes_accepted() const { return accepted_total_; }
  std::uint64_t bytes_read() const { return read_total_; }

 private:
  struct Segment {
    SimTime due;
    std::string bytes;
  };

  std::size_t deliver_due(SimTime now);

  LinkConfig cfg_;
  ByteFifo send_queue_;
  std::deque<Segment> in_transit_;
  std::size_t in_transit_bytes_ = 0;
  ByteFifo recv_queue_;
  std::uint64_t accepted_total_ = 0;
  std::uint64_t read_total_ = 0;
};

// The operations a transport backend offers to the forwarding logic.
template <typename L>
concept ByteLink = requires(L link, const L& clink, std::string_view payload, SimTime now,
                            std::size_t max) {
  { link.try_send(payload) } -> std::same_as<std::size_t>;
  { clink.unsent_bytes() } -> std::same_as<std::size_t>;
  { link.transfer_step(now) } -> std::same_as<std::size_t>;
  { link.read(max) } -> std::same_as<std::string>;
};

static_assert(ByteLink<FlowLink>);

}  // namespace sipovl::flow
