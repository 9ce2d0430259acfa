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

#include "sipovl/scenario.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "sipovl/errors.hpp"

namespace sipovl::harness {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                    std::string(want));
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  value = trim(value);
  T out{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc{} || p != value.data() + value.size()) {
    bad_value(key, value, "an integer");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string text(trim(value));
  if (text.empty()) bad_value(key, value, "a number");
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double out = 0.0;
  in >> out;
  if (in.fail() || !in.eof() || !std::isfinite(out)) bad_value(key, value, "a number");
  return out;
}

std::vector<double> parse_doubles(std::string_view key, std::string_view value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_double(key, item));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_number(values[i]);
  }
  return out;
}

Duration ms(double v) { return from_seconds(v / 1000.0); }
double as_ms(Duration d) { return to_seconds(d) * 1000.0; }

struct KeyDef {
  std::string name;
  std::function<void(Scenario&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const Scenario&)> get;
};

void add_hop_keys(std::vector<KeyDef>& keys, const std::string& prefix, HopBuffers Scenario::*field, Hop hop) {
  keys.push_back({prefix + ".send_buf",
                  [field](Scenario& s, std::string_view k, std::string_view v) {
                    (s.*field).send_buf = parse_integer<std::size_t>(k, v);
                  },
                  [hop](const Scenario& s) { return std::to_string(link_config(s, hop).send_buf); }});
  keys.push_back({prefix + ".recv_buf",
                  [field](Scenario& s, std::string_view k, std::string_view v) {
                    (s.*field).recv_buf = parse_integer<std::size_t>(k, v);
                  },
                  [hop](const Scenario& s) { return std::to_string(link_config(s, hop).recv_buf); }});
}

void add_cost_keys(std::vector<KeyDef>& keys, const std::string& prefix, proxy::CostModel Scenario::*field) {
  const std::pair<const char*, Duration proxy::CostModel::*> parts[] = {
      {"invite_ms", &proxy::CostModel::invite},
      {"non_invite_ms", &proxy::CostModel::non_invite},
      {"provisional_ms", &proxy::CostModel::provisional},
      {"final_ms", &proxy::CostModel::final_response},
  };
  for (const auto& [suffix, member] : parts) {
    keys.push_back({prefix + "." + suffix,
                    [field, member = member](Scenario& s, std::string_view k, std::string_view v) {
                      (s.*field).*member = ms(parse_double(k, v));
                    },
                    [field, member = member](const Scenario& s) { return format_number(as_ms((s.*field).*member)); }});
  }
}

void add_size_key(std::vector<KeyDef>& keys, const std::string& name, std::size_t sip::WireSizes::*member) {
  keys.push_back({name,
                  [member](Scenario& s, std::string_view k, std::string_view v) {
                    s.sizes.*member = parse_integer<std::size_t>(k, v);
                  },
                  [member](const Scenario& s) { return std::to_string(s.sizes.*member); }});
}

std::vector<KeyDef> build_keys() {
  std::vector<KeyDef> keys;
  keys.push_back({"name", [](Scenario& s, auto, auto v) { s.name = std::string(trim(v)); },
                  [](const Scenario& s) { return s.name; }});
  keys.push_back({"num_se", [](Scenario& s, auto k, auto v) { s.num_se = parse_integer<std::size_t>(k, v); },
                  [](const Scenario& s) { return std::to_string(s.num_se); }});
  keys.push_back({"per_se_rate",
                  [](Scenario& s, auto k, auto v) {
                    s.per_se_rate = parse_doubles(k, v);
                    s.load_multiple = 0.0;
                  },
                  [](const Scenario& s) { return join(s.per_se_rate); }});
  keys.push_back({"load.multiple",
                  [](Scenario& s, auto k, auto v) {
                    s.load_multiple = parse_double(k, v);
                    s.per_se_rate.clear();
                  },
                  [](const Scenario& s) { return format_number(s.load_multiple); }});
  keys.push_back({"load.shares", [](Scenario& s, auto k, auto v) { s.load_shares = parse_doubles(k, v); },
                  [](const Scenario& s) { return join(s.load_shares); }});
  keys.push_back({"capacity", [](Scenario& s, auto k, auto v) { s.capacity = parse_double(k, v); },
                  [](const Scenario& s) { return format_number(s.capacity); }});
  keys.push_back({"duration", [](Scenario& s, auto k, auto v) { s.duration_s = parse_integer<int>(k, v); },
                  [](const Scenario& s) { return std::to_string(s.duration_s); }});
  keys.push_back({"warmup", [](Scenario& s, auto k, auto v) { s.warmup_s = parse_integer<int>(k, v); },
                  [](const Scenario& s) { return std::to_string(s.warmup_s); }});
  keys.push_back({"mechanism",
                  [](Scenario& s, auto k, auto v) {
                    auto m = proxy::mechanism_from_name(trim(v));
                    if (!m) bad_value(k, v, "default, ecs-bm-sf or ics-bm-sf");
                    s.mechanism = *m;
                  },
                  [](const Scenario& s) { return std::string(proxy::mechanism_name(s.mechanism)); }});
  keys.push_back({"arrival",
                  [](Scenario& s, auto k, auto v) {
                    auto a = endpoints::arrival_from_name(trim(v));
                    if (!a) bad_value(k, v, "deterministic or poisson");
                    s.arrival = *a;
                  },
                  [](const Scenario& s) { return std::string(endpoints::arrival_name(s.arrival)); }});
  keys.push_back({"seed", [](Scenario& s, auto k, auto v) { s.seed = parse_integer<std::uint64_t>(k, v); },
                  [](const Scenario& s) { return std::to_string(s.seed); }});
  keys.push_back({"link.one_way_delay_us",
                  [](Scenario& s, auto k, auto v) { s.one_way_delay = from_seconds(parse_double(k, v) / 1e6); },
                  [](const Scenario& s) { return format_number(to_seconds(s.one_way_delay) * 1e6); }});
  keys.push_back({"link.window_quantum",
                  [](Scenario& s, auto k, auto v) { s.window_quantum = parse_integer<std::size_t>(k, v); },
                  [](const Scenario& s) { return std::to_string(s.window_quantum); }});
  add_hop_keys(keys, "uac_se", &Scenario::uac_se, Hop::kUacToSe);
  add_hop_keys(keys, "se_uac", &Scenario::se_uac, Hop::kSeToUac);
  add_hop_keys(keys, "se_re", &Scenario::se_re, Hop::kSeToRe);
  add_hop_keys(keys, "re_se", &Scenario::re_se, Hop::kReToSe);
  add_hop_keys(keys, "se_re_invite", &Scenario::se_re_invite, Hop::kSeToReInvite);
  add_hop_keys(keys, "re_uas", &Scenario::re_uas, Hop::kReToUas);
  add_hop_keys(keys, "uas_re", &Scenario::uas_re, Hop::kUasToRe);
  keys.push_back({"se.app_buf", [](Scenario& s, auto k, auto v) { s.se_app_buf = parse_integer<std::size_t>(k, v); },
                  [](const Scenario& s) { return std::to_string(se_app_buf(s)); }});
  keys.push_back({"re.app_buf", [](Scenario& s, auto k, auto v) { s.re_app_buf = parse_integer<std::size_t>(k, v); },
                  [](const Scenario& s) { return std::to_string(re_app_buf(s)); }});
  keys.push_back({"re.invite_app_buf",
                  [](Scenario& s, auto k, auto v) { s.re_invite_app_buf = parse_integer<std::size_t>(k, v); },
                  [](const Scenario& s) { return std::to_string(re_invite_app_buf(s)); }});
  add_cost_keys(keys, "re.cost", &Scenario::re_cost);
  add_cost_keys(keys, "se.cost", &Scenario::se_cost);
  add_size_key(keys, "size.invite", &sip::WireSizes::invite);
  add_size_key(keys, "size.non_invite", &sip::WireSizes::non_invite);
  add_size_key(keys, "size.provisional", &sip::WireSizes::provisional);
  add_size_key(keys, "size.final", &sip::WireSizes::final_response);
  keys.push_back({"sip.t1_ms", [](Scenario& s, auto k, auto v) { s.retransmission.t1 = ms(parse_double(k, v)); },
                  [](const Scenario& s) { return format_number(as_ms(s.retransmission.t1)); }});
  keys.push_back({"sip.t2_ms", [](Scenario& s, auto k, auto v) { s.retransmission.t2 = ms(parse_double(k, v)); },
                  [](const Scenario& s) { return format_number(as_ms(s.retransmission.t2)); }});
  keys.push_back({"sip.total_timeout_ms",
                  [](Scenario& s, auto k, auto v) { s.retransmission.total_timeout = ms(parse_double(k, v)); },
                  [](const Scenario& s) { return format_number(as_ms(s.retransmission.total_timeout)); }});
  keys.push_back({"proxy.send_timeout_ms", [](Scenario& s, auto k, auto v) { s.send_timeout = ms(parse_double(k, v)); },
                  [](const Scenario& s) { return format_number(as_ms(s.send_timeout)); }});
  keys.push_back({"proxy.rejection_status",
                  [](Scenario& s, auto k, auto v) { s.rejection_status = parse_integer<int>(k, v); },
                  [](const Scenario& s) { return std::to_string(s.rejection_status); }});
  keys.push_back({"se.sf_threshold",
                  [](Scenario& s, auto k, auto v) { s.sf_threshold = parse_integer<std::size_t>(k, v); },
                  [](const Scenario& s) { return std::to_string(s.sf_threshold); }});
  keys.push_back({"uas.receive_timeout_ms",
                  [](Scenario& s, auto k, auto v) { s.uas_receive_timeout = ms(parse_double(k, v)); },
                  [](const Scenario& s) { return format_number(as_ms(s.uas_receive_timeout)); }});
  keys.push_back({"uac.receive_timeout_ms",
                  [](Scenario& s, auto k, auto v) { s.uac_receive_timeout = ms(parse_double(k, v)); },
                  [](const Scenario& s) { return format_number(as_ms(s.uac_receive_timeout)); }});
  return keys;
}

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> keys = build_keys();
  return keys;
}

const KeyDef& find_key(std::string_view key) {
  for (const KeyDef& def : registry()) {
    if (def.name == key) return def;
  }
  throw ConfigError("unknown scenario key '" + std::string(key) + "'");
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  while (true) {
    auto comma = text.find(',');
    out.emplace_back(trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.size() == 1 && out.front().empty()) out.clear();
  return out;
}

flow::LinkConfig link_config(const Scenario& s, Hop hop) {
  const HopBuffers* hb = nullptr;
  std::size_t send = kDefaultSendBuf;
  std::size_t recv = kDefaultRecvBuf;
  switch (hop) {
    case Hop::kUacToSe: hb = &s.uac_se; break;
    case Hop::kSeToUac: hb = &s.se_uac; break;
    case Hop::kSeToRe:
      hb = &s.se_re;
      // ICS minimizes only the RE receive buffer.
      if (s.mechanism == proxy::Mechanism::kIcsBmSf) recv = kMinimizedRecvBuf;
      break;
    case Hop::kReToSe: hb = &s.re_se; break;
    case Hop::kSeToReInvite:
      hb = &s.se_re_invite;
      send = kMinimizedSendBuf;
      recv = kMinimizedRecvBuf;
      break;
    case Hop::kReToUas: hb = &s.re_uas; break;
    case Hop::kUasToRe: hb = &s.uas_re; break;
  }
  return flow::LinkConfig{hb->send_buf.value_or(send), hb->recv_buf.value_or(recv), s.one_way_delay,
                          s.window_quantum};
}

std::size_t se_app_buf(const Scenario& s) { return s.se_app_buf.value_or(kDefaultAppBuf); }
std::size_t re_app_buf(const Scenario& s) { return s.re_app_buf.value_or(kDefaultAppBuf); }
std::size_t re_invite_app_buf(const Scenario& s) {
  if (s.re_invite_app_buf) return *s.re_invite_app_buf;
  return s.mechanism == proxy::Mechanism::kEcsBmSf ? kMinimizedAppBuf : re_app_buf(s);
}

bool uses_capacity(const Scenario& s) { return s.per_se_rate.empty(); }

void validate(const Scenario& s) {
  if (s.num_se < 1 || s.num_se > 1000) throw ConfigError("num_se must be between 1 and 1000");
  if (!s.per_se_rate.empty()) {
    if (s.per_se_rate.size() != s.num_se) throw ConfigError("per_se_rate needs one rate per SE");
    for (double r : s.per_se_rate) {
      if (!(r > 0.0)) throw ConfigError("per_se_rate entries must be positive");
    }
  } else {
    if (!(s.load_multiple > 0.0)) throw ConfigError("set either per_se_rate or a positive load.multiple");
    if (!s.load_shares.empty() && s.load_shares.size() != s.num_se) {
      throw ConfigError("load.shares needs one share per SE");
    }
    for (double w : s.load_shares) {
      if (!(w > 0.0)) throw ConfigError("load.shares entries must be positive");
    }
  }
  if (s.capacity < 0.0) throw ConfigError("capacity must be non-negative");
  if (s.duration_s < 1) throw ConfigError("duration must be at least one second");
  if (s.warmup_s < 0 || s.warmup_s >= s.duration_s) throw ConfigError("warmup must lie in [0, duration)");
  if (s.one_way_delay < Duration::zero()) throw ConfigError("link delay must be non-negative");
  for (Hop h : {Hop::kUacToSe, Hop::kSeToUac, Hop::kSeToRe, Hop::kReToSe, Hop::kSeToReInvite, Hop::kReToUas,
                Hop::kUasToRe}) {
    link_config(s, h).validate();
  }
  s.retransmission.validate();
  if (s.send_timeout <= Duration::zero() || s.uas_receive_timeout <= Duration::zero() ||
      s.uac_receive_timeout <= Duration::zero()) {
    throw ConfigError("timeouts must be positive");
  }

  // Every configured size must hold the longest header block this scenario
  // can produce.
  const std::string longest_id = endpoints::make_call_id(s.num_se - 1, 9'999'999'999ULL);
  const std::size_t min_request = sip::SipMessage::request(sip::Method::kInvite, longest_id).wire_len();
  const std::size_t min_response = sip::SipMessage::response(503, sip::Method::kInvite, longest_id).wire_len();
  if (s.sizes.invite < min_request || s.sizes.non_invite < min_request ||
      s.sizes.provisional < min_response || s.sizes.final_response < min_response) {
    throw ConfigError("message sizes must be at least " + std::to_string(std::max(min_request, min_response)) +
                      " bytes");
  }

  for (const auto& [role, cost] : {std::pair{"re", s.re_cost}, std::pair{"se", s.se_cost}}) {
    proxy::ProxyConfig pc;
    pc.cost = cost;
    pc.sizes = s.sizes;
    pc.rejection_status = s.rejection_status;
    pc.send_timeout = s.send_timeout;
    pc.app_buf = std::string_view(role) == "re" ? std::min(re_app_buf(s), re_invite_app_buf(s)) : se_app_buf(s);
    pc.validate();
  }
  if (proxy::has_smart_forwarding(s.mechanism)) {
    const Hop invite_hop = s.mechanism == proxy::Mechanism::kEcsBmSf ? Hop::kSeToReInvite : Hop::kSeToRe;
    if (link_config(s, invite_hop).send_buf < s.sizes.invite + s.sf_threshold) {
      throw ConfigError("SE INVITE send buffer cannot hold a whole INVITE");
    }
  }
}

std::vector<double> offered_rates(const Scenario& s, double capacity) {
  if (!s.per_se_rate.empty()) return s.per_se_rate;
  if (!(capacity > 0.0)) throw ConfigError("load.multiple needs a positive capacity");
  std::vector<double> shares = s.load_shares;
  if (shares.empty()) shares.assign(s.num_se, 1.0);
  double total = 0.0;
  for (double w : shares) total += w;
  std::vector<double> rates;
  for (double w : shares) rates.push_back(s.load_multiple * capacity * w / total);
  return rates;
}

const std::vector<std::string>& scenario_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const KeyDef& def : registry()) out.push_back(def.name);
    return out;
  }();
  return names;
}

void set_key(Scenario& s, std::string_view key, std::string_view value) {
  find_key(trim(key)).set(s, trim(key), value);
}

std::string get_key(const Scenario& s, std::string_view key) { return find_key(key).get(s); }

Scenario parse_scenario_text(std::string_view text, Scenario base) {
  int line_no = 0;
  while (!text.empty()) {
    auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    set_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

Scenario load_scenario_file(const std::filesystem::path& path, Scenario base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (base.name == "custom") base.name = path.stem().string();
  return parse_scenario_text(buf.str(), std::move(base));
}

}  // namespace sipovl::harness
