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
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace sipovl::sip {

enum class Method : std::uint8_t { kInvite, kAck, kBye };
enum class MessageKind : std::uint8_t { kRequest, kResponse };

enum class MessageClass : std::uint8_t {
  kInviteRequest,
  kNonInviteRequest,
  kProvisionalResponse,
  kFinalResponse,
};

std::string_view method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);
std::string_view class_name(MessageClass c);

// The subset of SIP the simulator speaks. For requests `cseq_method` always
// equals `method` and `status` is 0; for responses `method` is unused and
// `cseq_method` names the request being answered.
struct SipMessage {
  MessageKind kind = MessageKind::kRequest;
  Method method = Method::kInvite;
  int status = 0;
  Method cseq_method = Method::kInvite;
  std::string call_id;
  std::size_t body_len = 0;

  static SipMessage request(Method m, std::string call_id);
  static SipMessage response(int status, Method answering, std::string call_id);

  bool is_request() const { return kind == MessageKind::kRequest; }
  bool is_response() const { return kind == MessageKind::kResponse; }

  // Length of serialize(*this).
  std::size_t wire_len() const;

  friend bool operator==(const SipMessage&, const SipMessage&) = default;
};

class PadTooSmall : public std::invalid_argument {
 public:
  PadTooSmall(std::size_t requested, std::size_t minimal);
  std::size_t requested() const { return requested_; }
  std::size_t minimal() const { return minimal_; }

 private:
  std::size_t requested_;
  std::size_t minimal_;
};

struct Parsed {
  SipMessage message;
  std::size_t consumed = 0;
};
struct NeedMoreData {};
struct Malformed {
  std::string reason;
};
using ParseResult = std::variant<Parsed, NeedMoreData, Malformed>;

// Longest header block accepted before the stream is declared malformed.
inline constexpr std::size_t kMaxHeaderBytes = 8192;

// Incremental framing: returns a message only once the start line, headers
// and the full Content-Length body are present in `buffer`.
ParseResult parse(std::string_view buffer);

// Throws std::invalid_argument for messages that are not well formed.
std::string serialize(const SipMessage& msg);

// Grows the filler body so the frame is exactly `pad_to` bytes.
// Throws PadTooSmall when pad_to is below the minimal encoding.
std::string serialize(const SipMessage& msg, std::size_t pad_to);

MessageClass classify(const SipMessage& msg);

// Configurable on-the-wire size per message class.
struct WireSizes {
  std::size_t invite = 1024;
  std::size_t non_invite = 512;
  std::size_t provisional = 512;
  std::size_t final_response = 512;

  std::size_t size_for(MessageClass c) const;
  std::size_t largest() const;
};

// serialize() padded to the size configured for the message's class.
std::string encode(const SipMessage& msg, const WireSizes& sizes);

}  // namespace sipovl::sip
