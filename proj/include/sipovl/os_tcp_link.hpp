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
#include <string>
#include <string_view>

#include "sipovl/flowlink.hpp"

namespace sipovl::flow {

// FlowLink operations over a real kernel TCP connection on loopback.
// Linux only. The sender side owns `send_buf`, the receiver side `recv_buf`;
// both are interpreted as *effective* sizes and converted to setsockopt
// requests by sndbuf_request()/rcvbuf_request().
//
// unsent_bytes() uses ioctl(SIOCOUTQNSD): bytes in the send queue not yet
// sent. transfer_step() is the kernel's job; it only reports the bytes
// currently readable (FIONREAD).
//
// One thread per link; nothing here is synchronized.
class OsTcpLink {
 public:
  // Throws std::system_error when the loopback connection cannot be made.
  static OsTcpLink open_loopback(const LinkConfig& cfg);

  OsTcpLink(OsTcpLink&& other) noexcept;
  OsTcpLink& operator=(OsTcpLink&& other) noexcept;
  OsTcpLink(const OsTcpLink&) = delete;
  OsTcpLink& operator=(const OsTcpLink&) = delete;
  ~OsTcpLink();

  std::size_t try_send(std::string_view payload);
  std::size_t unsent_bytes() const;
  std::size_t transfer_step(SimTime now);
  std::string read(std::size_t max);

  int sender_fd() const { return sender_; }
  int receiver_fd() const { return receiver_; }

  // Linux doubles SO_SNDBUF/SO_RCVBUF requests and keeps a quarter of the
  // receive allocation for bookkeeping, so an effective receive size E needs
  // a request of 2E/3 and an effective send size S needs S/2.
  static int sndbuf_request(std::size_t effective);
  static int rcvbuf_request(std::size_t effective);

 private:
  OsTcpLink(int sender, int receiver) : sender_(sender), receiver_(receiver) {}
  void close_all() noexcept;

  int sender_ = -1;
  int receiver_ = -1;
};

static_assert(ByteLink<OsTcpLink>);

}  // namespace sipovl::flow
