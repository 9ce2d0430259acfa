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

#include "sipovl/flowlink.hpp"

#include <algorithm>

#include "sipovl/errors.hpp"

namespace sipovl::flow {

std::string ByteFifo::take(std::size_t n) {
  n = std::min(n, size());
  std::string out = data_.substr(head_, n);
  head_ += n;
  compact();
  return out;
}

void ByteFifo::drop(std::size_t n) {
  head_ += std::min(n, size());
  compact();
}

void ByteFifo::compact() {
  if (head_ == data_.size()) {
    data_.clear();
    head_ = 0;
  } else if (head_ > 4096 && head_ * 2 > data_.size()) {
    data_.erase(0, head_);
    head_ = 0;
  }
}

void LinkConfig::validate() const {
  if (send_buf < 1 || recv_buf < 1) throw ConfigError("link buffers must be at least one byte");
  if (one_way_delay < Duration::zero()) throw ConfigError("link delay must be non-negative");
}

FlowLink::FlowLink(const LinkConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

std::size_t FlowLink::try_send(std::string_view payload) {
  const std::size_t n = std::min(payload.size(), send_space());
  send_queue_.append(payload.substr(0, n));
  accepted_total_ += n;
  return n;
}

std::size_t FlowLink::deliver_due(SimTime now) {
  std::size_t delivered = 0;
  while (!in_transit_.empty() && in_transit_.front().due <= now) {
    Segment& seg = in_transit_.front();
    recv_queue_.append(seg.bytes);
    delivered += seg.bytes.size();
    in_transit_bytes_ -= seg.bytes.size();
    in_transit_.pop_front();
  }
  return delivered;
}

std::size_t FlowLink::transfer_step(SimTime now) {
  std::size_t delivered = deliver_due(now);
  const std::size_t adv = advertised_window();
  const std::size_t window = adv > in_transit_bytes_ ? adv - in_transit_bytes_ : 0;
  const std::size_t n = std::min(send_queue_.size(), window);
  if (n > 0) {
    in_transit_.push_back(Segment{now + cfg_.one_way_delay, send_queue_.take(n)});
    in_transit_bytes_ += n;
    // A zero delay lands in the same step.
    delivered += deliver_due(now);
  }
  return delivered;
}

std::size_t FlowLink::advertised_window() const {
  const std::size_t free = cfg_.recv_buf - recv_queue_.size();
  if (cfg_.window_quantum == 0) return free;
  const std::size_t q = std::min(cfg_.window_quantum, cfg_.recv_buf);
  return free / q * q;
}

std::string FlowLink::read(std::size_t max) {
  std::string out = recv_queue_.take(max);
  read_total_ += out.size();
  return out;
}

std::optional<SimTime> FlowLink::next_arrival() const {
  if (in_transit_.empty()) return std::nullopt;
  return in_transit_.front().due;
}

}  // namespace sipovl::flow
