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

#include "sipovl/os_tcp_link.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <linux/sockios.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/ioctl.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <system_error>
#include <utility>

namespace sipovl::flow {
namespace {

[[noreturn]] void fail(const char* what) {
  throw std::system_error(errno, std::generic_category(), what);
}

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {
    if (fd_ < 0) fail("socket");
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }
  int release() { return std::exchange(fd_, -1); }

 private:
  int fd_;
};

void set_int_opt(int fd, int level, int name, int value, const char* what) {
  if (::setsockopt(fd, level, name, &value, sizeof(value)) != 0) fail(what);
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) != 0) fail("fcntl");
}

}  // namespace

int OsTcpLink::sndbuf_request(std::size_t effective) {
  return static_cast<int>((effective + 1) / 2);
}

int OsTcpLink::rcvbuf_request(std::size_t effective) {
  return static_cast<int>((effective * 2 + 2) / 3);
}

OsTcpLink OsTcpLink::open_loopback(const LinkConfig& cfg) {
  cfg.validate();
  Fd listener(::socket(AF_INET, SOCK_STREAM, 0));
  // The receive buffer must be sized before the handshake so the window
  // scale matches; accepted sockets inherit it from the listener.
  set_int_opt(listener.get(), SOL_SOCKET, SO_RCVBUF, rcvbuf_request(cfg.recv_buf), "SO_RCVBUF");

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) fail("bind");
  if (::listen(listener.get(), 1) != 0) fail("listen");
  socklen_t len = sizeof(addr);
  if (::getsockname(listener.get(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) fail("getsockname");

  Fd sender(::socket(AF_INET, SOCK_STREAM, 0));
  set_int_opt(sender.get(), SOL_SOCKET, SO_SNDBUF, sndbuf_request(cfg.send_buf), "SO_SNDBUF");
  set_int_opt(sender.get(), IPPROTO_TCP, TCP_NODELAY, 1, "TCP_NODELAY");
  if (::connect(sender.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) fail("connect");
  Fd receiver(::accept(listener.get(), nullptr, nullptr));

  set_nonblocking(sender.get());
  set_nonblocking(receiver.get());
  return OsTcpLink(sender.release(), receiver.release());
}

OsTcpLink::OsTcpLink(OsTcpLink&& other) noexcept
    : sender_(std::exchange(other.sender_, -1)), receiver_(std::exchange(other.receiver_, -1)) {}

OsTcpLink& OsTcpLink::operator=(OsTcpLink&& other) noexcept {
  if (this != &other) {
    close_all();
    sender_ = std::exchange(other.sender_, -1);
    receiver_ = std::exchange(other.receiver_, -1);
  }
  return *this;
}

OsTcpLink::~OsTcpLink() { close_all(); }

void OsTcpLink::close_all() noexcept {
  if (sender_ >= 0) ::close(sender_);
  if (receiver_ >= 0) ::close(receiver_);
  sender_ = receiver_ = -1;
}

std::size_t OsTcpLink::try_send(std::string_view payload) {
  if (payload.empty()) return 0;
  const ssize_t n = ::send(sender_, payload.data(), payload.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
  if (n < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK) return 0;
    fail("send");
  }
  return static_cast<std::size_t>(n);
}

std::size_t OsTcpLink::unsent_bytes() const {
  int n = 0;
  if (::ioctl(sender_, SIOCOUTQNSD, &n) != 0) fail("ioctl(SIOCOUTQNSD)");
  return static_cast<std::size_t>(n);
}

std::size_t OsTcpLink::transfer_step(SimTime) {
  int n = 0;
  if (::ioctl(receiver_, FIONREAD, &n) != 0) fail("ioctl(FIONREAD)");
  return static_cast<std::size_t>(n);
}

std::string OsTcpLink::read(std::size_t max) {
  std::string out(max, '\0');
  const ssize_t n = ::recv(receiver_, out.data(), max, MSG_DONTWAIT);
  if (n < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK) return {};
    fail("recv");
  }
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace sipovl::flow
