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

#include "sipovl/sip_message.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <string>

namespace sipovl::sip {
namespace {

constexpr std::string_view kCrlf = "\r\n";
constexpr std::string_view kVersion = "SIP/2.0";
constexpr std::string_view kRequestUri = "sip:callee@uas.invalid";
// Content-Length is written with a fixed width so that every frame size
// above the minimum is reachable by padding the body.
constexpr std::size_t kLengthDigits = 5;
constexpr std::size_t kMaxBody = 99999;

std::string_view reason_phrase(int status) {
  switch (status) {
    case 100: return "Trying";
    case 180: return "Ringing";
    case 200: return "OK";
    case 202: return "Accepted";
    case 408: return "Request Timeout";
    case 503: return "Service Unavailable";
    default: break;
  }
  if (status < 200) return "Session Progress";
  if (status < 300) return "Success";
  if (status < 400) return "Redirection";
  if (status < 500) return "Client Error";
  if (status < 600) return "Server Error";
  return "Global Failure";
}

int cseq_number(Method m) { return m == Method::kBye ? 2 : 1; }

bool valid_call_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return c > ' ' && c < 0x7f;
  });
}

void check_well_formed(const SipMessage& msg) {
  if (!valid_call_id(msg.call_id)) {
    throw std::invalid_argument("sip: call-id must be non-empty printable ASCII without spaces");
  }
  if (msg.is_response() && (msg.status < 100 || msg.status > 699)) {
    throw std::invalid_argument("sip: response status out of range");
  }
  if (msg.is_request() && (msg.status != 0 || msg.cseq_method != msg.method)) {
    throw std::invalid_argument("sip: request carries a status or mismatched CSeq method");
  }
  if (msg.body_len > kMaxBody) {
    throw std::invalid_argument("sip: body too large for Content-Length field");
  }
}

std::string header_block(const SipMessage& msg) {
  std::string out;
  out.reserve(128);
  if (msg.is_request()) {
    out.append(method_name(msg.method)).append(" ").append(kRequestUri).append(" ").append(kVersion);
  } else {
    out.append(kVersion).append(" ").append(std::to_string(msg.status)).append(" ")
        .append(reason_phrase(msg.status));
  }
  out.append(kCrlf);
  out.append("Call-ID: ").append(msg.call_id).append(kCrlf);
  out.append("CSeq: ").append(std::to_string(cseq_number(msg.cseq_method))).append(" ")
      .append(method_name(msg.cseq_method)).append(kCrlf);
  std::string len = std::to_string(msg.body_len);
  out.append("Content-Length: ").append(kLengthDigits - len.size(), '0').append(len).append(kCrlf);
  out.append(kCrlf);
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; };
           return lower(x) == lower(y);
         });
}

template <typename Int>
bool parse_uint(std::string_view s, Int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

// Fills kind/method/status from the start line, or returns a reason.
std::optional<std::string> parse_start_line(std::string_view line, SipMessage& msg) {
  if (line.substr(0, kVersion.size() + 1) == "SIP/2.0 ") {
    std::string_view rest = line.substr(kVersion.size() + 1);
    int status = 0;
    if (rest.size() < 3 || !parse_uint(rest.substr(0, 3), status) || status < 100 || status > 699) {
      return "bad status code";
    }
    if (rest.size() > 3 && rest[3] != ' ') return "bad status line";
    msg.kind = MessageKind::kResponse;
    msg.status = status;
    return std::nullopt;
  }
  auto sp1 = line.find(' ');
  auto sp2 = line.rfind(' ');
  if (sp1 == std::string_view::npos || sp1 == sp2) return "not a request or status line";
  auto method = method_from_name(line.substr(0, sp1));
  if (!method) return "unknown method";
  if (line.substr(sp2 + 1) != kVersion) return "bad SIP version";
  msg.kind = MessageKind::kRequest;
  msg.method = *method;
  msg.cseq_method = *method;
  msg.status = 0;
  return std::nullopt;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kInvite: return "INVITE";
    case Method::kAck: return "ACK";
    case Method::kBye: return "BYE";
  }
  return "?";
}

std::optional<Method> method_from_name(std::string_view name) {
  if (name == "INVITE") return Method::kInvite;
  if (name == "ACK") return Method::kAck;
  if (name == "BYE") return Method::kBye;
  return std::nullopt;
}

std::string_view class_name(MessageClass c) {
  switch (c) {
    case MessageClass::kInviteRequest: return "invite";
    case MessageClass::kNonInviteRequest: return "non_invite";
    case MessageClass::kProvisionalResponse: return "provisional";
    case MessageClass::kFinalResponse: return "final";
  }
  return "?";
}

SipMessage SipMessage::request(Method m, std::string call_id) {
  SipMessage msg;
  msg.kind = MessageKind::kRequest;
  msg.method = m;
  msg.cseq_method = m;
  msg.call_id = std::move(call_id);
  return msg;
}

SipMessage SipMessage::response(int status, Method answering, std::string call_id) {
  SipMessage msg;
  msg.kind = MessageKind::kResponse;
  msg.status = status;
  msg.cseq_method = answering;
  msg.call_id = std::move(call_id);
  return msg;
}

std::size_t SipMessage::wire_len() const { return header_block(*this).size() + body_len; }

PadTooSmall::PadTooSmall(std::size_t requested, std::size_t minimal)
    : std::invalid_argument("sip: pad_to " + std::to_string(requested) +
                            " is below the minimal encoding of " + std::to_string(minimal) + " bytes"),
      requested_(requested),
      minimal_(minimal) {}

std::string serialize(const SipMessage& msg) {
  check_well_formed(msg);
  std::string out = header_block(msg);
  out.append(msg.body_len, 'x');
  return out;
}

std::string serialize(const SipMessage& msg, std::size_t pad_to) {
  check_well_formed(msg);
  const std::size_t minimal = msg.wire_len();
  if (pad_to < minimal) throw PadTooSmall(pad_to, minimal);
  SipMessage padded = msg;
  padded.body_len += pad_to - minimal;
  return serialize(padded);
}

ParseResult parse(std::string_view buffer) {
  const auto first_eol = buffer.find(kCrlf);
  SipMessage msg;
  if (first_eol != std::string_view::npos) {
    if (auto err = parse_start_line(buffer.substr(0, first_eol), msg)) return Malformed{*err};
  }
  const auto head_end = buffer.find("\r\n\r\n");
  if (head_end == std::string_view::npos) {
    if (buffer.size() > kMaxHeaderBytes) return Malformed{"header block too long"};
    return NeedMoreData{};
  }
  if (head_end > kMaxHeaderBytes) return Malformed{"header block too long"};

  bool have_call_id = false;
  bool have_cseq = false;
  std::optional<std::size_t> content_length;
  std::string_view headers = buffer.substr(first_eol + 2, head_end >= first_eol + 2 ? head_end - first_eol - 2 : 0);
  while (!headers.empty()) {
    auto eol = headers.find(kCrlf);
    std::string_view line = headers.substr(0, eol);
    headers = eol == std::string_view::npos ? std::string_view{} : headers.substr(eol + 2);
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return Malformed{"header without colon"};
    std::string_view name = trim(line.substr(0, colon));
    std::string_view value = trim(line.substr(colon + 1));
    if (iequals(name, "Call-ID")) {
      if (!valid_call_id(value)) return Malformed{"bad Call-ID"};
      msg.call_id = std::string(value);
      have_call_id = true;
    } else if (iequals(name, "CSeq")) {
      auto sp = value.find(' ');
      unsigned seq = 0;
      if (sp == std::string_view::npos || !parse_uint(value.substr(0, sp), seq)) return Malformed{"bad CSeq"};
      auto m = method_from_name(trim(value.substr(sp + 1)));
      if (!m) return Malformed{"unknown CSeq method"};
      msg.cseq_method = *m;
      have_cseq = true;
    } else if (iequals(name, "Content-Length")) {
      std::size_t len = 0;
      if (!parse_uint(value, len) || len > kMaxBody) return Malformed{"bad Content-Length"};
      content_length = len;
    }
  }
  if (!have_call_id || !have_cseq || !content_length) return Malformed{"missing mandatory header"};
  if (msg.is_request() && msg.cseq_method != msg.method) return Malformed{"CSeq method mismatch"};

  const std::size_t total = head_end + 4 + *content_length;
  if (buffer.size() < total) return NeedMoreData{};
  msg.body_len = *content_length;
  return Parsed{std::move(msg), total};
}

MessageClass classify(const SipMessage& msg) {
  if (msg.is_request()) {
    return msg.method == Method::kInvite ? MessageClass::kInviteRequest
                                         : MessageClass::kNonInviteRequest;
  }
  return msg.status < 200 ? MessageClass::kProvisionalResponse : MessageClass::kFinalResponse;
}

std::size_t WireSizes::size_for(MessageClass c) const {
  switch (c) {
    case MessageClass::kInviteRequest: return invite;
    case MessageClass::kNonInviteRequest: return non_invite;
    case MessageClass::kProvisionalResponse: return provisional;
    case MessageClass::kFinalResponse: return final_response;
  }
  return invite;
}

std::size_t WireSizes::largest() const {
  return std::max({invite, non_invite, provisional, final_response});
}

std::string encode(const SipMessage& msg, const WireSizes& sizes) {
  return serialize(msg, sizes.size_for(classify(msg)));
}

}  // namespace sipovl::sip
