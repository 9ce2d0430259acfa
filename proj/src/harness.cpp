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

#include "sipovl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "sipovl/endpoints.hpp"
#include "sipovl/errors.hpp"
#include "sipovl/proxy.hpp"
#include "sipovl/sim.hpp"

namespace sipovl::harness {
namespace {

using endpoints::UasCallState;
using proxy::Mechanism;
using proxy::Proxy;
using sim::Channel;
using sim::ModuleId;

constexpr ModuleId kSamplerId = std::numeric_limits<ModuleId>::max();

void check(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation("end-of-run check failed: " + what);
}

std::size_t second_of(SimTime t, std::size_t len) {
  const auto s = static_cast<std::size_t>(t / std::chrono::seconds(1));
  return std::min(s, len - 1);
}

}  // namespace

MetricsReport run(const Scenario& input) {
  Scenario s = input;
  validate(s);
  if (uses_capacity(s) && !(s.capacity > 0.0)) s.capacity = calibrate(s);
  const std::vector<double> rates = offered_rates(s, s.capacity);
  const std::size_t n = s.num_se;
  const auto len = static_cast<std::size_t>(s.duration_s);
  const bool ecs = s.mechanism == Mechanism::kEcsBmSf;

  sim::Scheduler sched;
  std::vector<std::unique_ptr<Channel>> channels;
  auto next_channel = static_cast<ModuleId>(2 * n + 2);
  auto make = [&](const std::string& name, Hop hop) {
    channels.push_back(std::make_unique<Channel>(sched, next_channel++, name, link_config(s, hop)));
    return channels.back().get();
  };

  proxy::ProxyConfig re_cfg;
  re_cfg.role = proxy::Role::kRe;
  re_cfg.mechanism = s.mechanism;
  re_cfg.app_buf = re_app_buf(s);
  re_cfg.cost = s.re_cost;
  re_cfg.send_timeout = s.send_timeout;
  re_cfg.rejection_status = s.rejection_status;
  re_cfg.sf_threshold = s.sf_threshold;
  re_cfg.sizes = s.sizes;
  proxy::ProxyConfig se_cfg = re_cfg;
  se_cfg.role = proxy::Role::kSe;
  se_cfg.app_buf = se_app_buf(s);
  se_cfg.cost = s.se_cost;

  Channel* re_uas = make("re-uas", Hop::kReToUas);
  Channel* uas_re = make("uas-re", Hop::kUasToRe);
  Proxy re(sched, static_cast<ModuleId>(2 * n), "re", re_cfg);
  std::vector<std::unique_ptr<Proxy>> ses;
  std::vector<std::unique_ptr<endpoints::Uac>> uacs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string tag = std::to_string(i);
    Channel* uac_se = make("uac" + tag + "-se" + tag, Hop::kUacToSe);
    Channel* se_uac = make("se" + tag + "-uac" + tag, Hop::kSeToUac);
    Channel* se_re = make("se" + tag + "-re", Hop::kSeToRe);
    Channel* se_re_invite = ecs ? make("se" + tag + "-re-invite", Hop::kSeToReInvite) : nullptr;
    Channel* re_se = make("re-se" + tag, Hop::kReToSe);

    auto se = std::make_unique<Proxy>(sched, static_cast<ModuleId>(n + i), "se" + tag, se_cfg);
    se->add_upstream(proxy::UpstreamPeer{{proxy::Input{uac_se, 0}}, se_uac});
    se->set_downstream(proxy::DownstreamPeer{se_re, se_re_invite, proxy::Input{re_se, 0}});
    if (ecs) {
      re.add_upstream(proxy::UpstreamPeer{
          {proxy::Input{se_re_invite, re_invite_app_buf(s)}, proxy::Input{se_re, 0}}, re_se});
    } else {
      re.add_upstream(proxy::UpstreamPeer{{proxy::Input{se_re, 0}}, re_se});
    }
    ses.push_back(std::move(se));

    endpoints::UacConfig uc;
    uc.rate = rates[i];
    uc.duration = std::chrono::seconds(s.duration_s);
    uc.arrival = s.arrival;
    uc.seed = s.seed;
    uc.se_index = i;
    // Stagger the SEs inside one inter-arrival gap.
    uc.phase = from_seconds(static_cast<double>(i) / static_cast<double>(n) / rates[i]);
    uc.sizes = s.sizes;
    uc.receive_timeout = s.uac_receive_timeout;
    uacs.push_back(std::make_unique<endpoints::Uac>(sched, static_cast<ModuleId>(i), uc, *uac_se, *se_uac));
  }
  re.set_downstream(proxy::DownstreamPeer{re_uas, nullptr, proxy::Input{uas_re, 0}});

  endpoints::UasConfig uas_cfg;
  uas_cfg.retransmission = s.retransmission;
  uas_cfg.receive_timeout = s.uas_receive_timeout;
  uas_cfg.sizes = s.sizes;
  endpoints::Uas uas(sched, static_cast<ModuleId>(2 * n + 1), uas_cfg, *re_uas, *uas_re);
  uas.start();
  for (auto& uac : uacs) uac->start();

  MetricsReport report;
  report.active_sessions.assign(len, 0.0);
  report.retransmissions.assign(len, 0.0);
  std::uint64_t retx_seen = 0;
  for (std::size_t t = 1; t <= len; ++t) {
    sched.schedule(std::chrono::seconds(t), kSamplerId, [&, t] {
      report.active_sessions[t - 1] = static_cast<double>(re.active_sessions());
      const std::uint64_t retx = uas.counters().ok_retransmissions;
      report.retransmissions[t - 1] = static_cast<double>(retx - retx_seen);
      retx_seen = retx;
    });
  }
  const SimTime end = std::chrono::seconds(s.duration_s);
  sched.run_until(end);
  report.events = sched.executed();

  report.scenario = s;
  report.offered = rates;

  // Outcome partition, judged from the UAS side.
  Totals& tot = report.totals;
  const auto& uas_calls = uas.calls();
  std::vector<double> pdd;
  for (const auto& uac : uacs) {
    const auto& uc = uac->counters();
    tot.invites_generated += uc.invites_generated;
    tot.responses_408 += uc.invite_408 + uc.bye_408;
    tot.bye_ok += uc.bye_ok;
    tot.bye_timeouts += uac->bye_timeouts(end);
    tot.acks_regenerated += uc.acks_regenerated;
    tot.acks_suppressed += uc.acks_suppressed;
    pdd.insert(pdd.end(), uac->pdd_samples().begin(), uac->pdd_samples().end());
    for (const auto& [id, call] : uac->calls()) {
      auto it = uas_calls.find(id);
      if (it == uas_calls.end()) {
        if (call.rejected) {
          ++tot.rejected;
        } else {
          ++tot.in_flight;
        }
        continue;
      }
      check(!call.rejected, "rejected session " + id + " reached the UAS");
      switch (it->second.state) {
        case UasCallState::kCompleted:
        case UasCallState::kClosed: ++tot.successful; break;
        case UasCallState::kTimedOut: ++tot.timed_out; break;
        case UasCallState::kAwaitingAck: ++tot.in_flight; break;
      }
    }
  }
  const auto& us = uas.counters();
  tot.ok_retransmissions = us.ok_retransmissions;
  tot.unexpected = us.unexpected_created;
  tot.ringing_sent = us.ringing_sent;
  tot.first_ok_sent = us.first_ok_sent;
  tot.uas_invites = us.invites_received;
  tot.malformed = us.malformed + re.counters().malformed;
  tot.re_messages = re.counters().messages_processed;
  tot.proxy_send_timeouts = re.counters().send_timeouts;
  tot.pending_output_peak = re.counters().pending_output_peak;
  std::uint64_t se_rejected = 0;
  for (const auto& se : ses) {
    const auto& c = se->counters();
    tot.malformed += c.malformed;
    tot.proxy_send_timeouts += c.send_timeouts;
    tot.pending_output_peak = std::max(tot.pending_output_peak, c.pending_output_peak);
    se_rejected += c.invites_rejected;
    check(c.invites_received == c.invites_forwarded + c.invites_rejected + se->invites_waiting(),
          se->name() + " INVITE conservation");
  }

  check(tot.invites_generated == tot.rejected + tot.successful + tot.timed_out + tot.in_flight,
        "outcome partition");
  check(tot.successful == us.acks_matched, "successes match UAS ACK count");
  check(tot.timed_out == us.timed_out, "timeouts match UAS count");
  check(tot.rejected <= se_rejected, "rejections originate at an SE");
  check(us.ringing_sent == us.first_ok_sent && us.first_ok_sent == us.invites_received,
        "180 / first 200 / INVITE counts agree");
  check(!proxy::has_smart_forwarding(s.mechanism) || se_rejected > 0 || tot.rejected == 0,
        "no rejections without smart forwarding");

  // Per-second series.
  report.throughput.assign(len, 0.0);
  report.throughput_per_se.assign(n, std::vector<double>(len, 0.0));
  for (const auto& [t, se] : uas.successes()) {
    const std::size_t sec = second_of(t, len);
    report.throughput[sec] += 1.0;
    report.throughput_per_se.at(se)[sec] += 1.0;
  }
  for (auto& series : report.re_rate) series.assign(len, 0.0);
  const auto& per_second = re.per_second();
  for (std::size_t sec = 0; sec < per_second.size(); ++sec) {
    const std::size_t slot = std::min(sec, len - 1);
    for (std::size_t k = 0; k < proxy::kTrafficKinds; ++k) {
      report.re_rate[k][slot] += static_cast<double>(per_second[sec][k]);
    }
  }

  report.pdd = summarize_pdd(std::move(pdd));
  report.mean_throughput = window_mean(report.throughput, s.warmup_s, s.duration_s);
  for (const auto& series : report.throughput_per_se) {
    report.per_se_throughput.push_back(window_mean(series, s.warmup_s, s.duration_s));
  }
  report.mean_active_sessions = window_mean(report.active_sessions, 0, s.duration_s);
  report.max_active_sessions = *std::max_element(report.active_sessions.begin(), report.active_sessions.end());
  for (std::size_t i = 0; i < len; ++i) {
    if (report.retransmissions[i] > 0) {
      report.first_retransmission_second = static_cast<int>(i + 1);
      break;
    }
  }
  return report;
}

double calibrate(const Scenario& base) {
  Scenario c;
  c.name = "calibrate";
  c.re_cost = base.re_cost;
  c.se_cost = base.se_cost;
  c.sizes = base.sizes;
  c.retransmission = base.retransmission;
  c.send_timeout = base.send_timeout;
  c.uas_receive_timeout = base.uas_receive_timeout;
  c.uac_receive_timeout = base.uac_receive_timeout;
  c.one_way_delay = base.one_way_delay;
  c.seed = base.seed;
  c.duration_s = 30;
  c.warmup_s = 0;
  c.per_se_rate = {1.0};

  std::string cache_key;
  for (const std::string& key : scenario_keys()) cache_key += get_key(c, key) + '\n';
  static std::mutex mu;
  static std::map<std::string, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(cache_key); it != cache.end()) return it->second;

  auto carried = [&](double rate) {
    c.per_se_rate = {rate};
    const MetricsReport r = run(c);
    return static_cast<double>(r.totals.successful) >= 0.99 * static_cast<double>(r.totals.invites_generated);
  };
  double lo = 0.0;
  double hi = 8.0;
  while (carried(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw ConfigError("calibration did not find a saturating load");
  }
  while (hi - lo > 0.25) {
    const double mid = (lo + hi) / 2.0;
    (carried(mid) ? lo : hi) = mid;
  }
  if (!(lo > 0.0)) throw ConfigError("calibration found no sustainable load");
  cache.emplace(cache_key, lo);
  return lo;
}

std::vector<MetricsReport> sweep(const std::string& key, const std::vector<std::string>& values,
                                 const Scenario& base, bool parallel) {
  (void)get_key(base, key);  // unknown keys fail before anything runs
  if (values.empty()) throw ConfigError("sweep over " + key + " needs at least one value");
  std::vector<Scenario> points;
  for (const std::string& v : values) {
    Scenario s = base;
    set_key(s, key, v);
    validate(s);
    if (uses_capacity(s) && !(s.capacity > 0.0)) s.capacity = calibrate(s);
    points.push_back(std::move(s));
  }
  std::vector<MetricsReport> out;
  if (!parallel || points.size() == 1 || std::thread::hardware_concurrency() < 2) {
    for (const Scenario& s : points) out.push_back(run(s));
    return out;
  }
  std::vector<std::future<MetricsReport>> jobs;
  for (const Scenario& s : points) jobs.push_back(std::async(std::launch::async, [s] { return run(s); }));
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

FairnessShares fairness_ratios(const MetricsReport& report) {
  if (report.per_se_throughput.size() < 2) throw ConfigError("fairness needs at least two SEs");
  FairnessShares out;
  double total = 0.0;
  for (double v : report.per_se_throughput) total += v;
  double offered = 0.0;
  for (double v : report.offered) offered += v;
  if (!(total > 0.0)) throw ConfigError("fairness needs nonzero throughput");
  for (double v : report.per_se_throughput) out.throughput.push_back(v / total);
  for (double v : report.offered) out.offered.push_back(v / offered);
  return out;
}

namespace {

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string num(double v) { return format_number(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ";" : "") + num(values[i]);
  return out;
}

std::vector<std::pair<std::string, std::string>> summary_fields(const MetricsReport& r) {
  std::vector<std::pair<std::string, std::string>> f;
  f.emplace_back("schema_version", std::to_string(kCsvSchemaVersion));
  for (const std::string& key : scenario_keys()) f.emplace_back(key, get_key(r.scenario, key));
  double offered = 0.0;
  for (double v : r.offered) offered += v;
  const Totals& t = r.totals;
  f.emplace_back("offered_cps", num(offered));
  f.emplace_back("offered_per_se", join_numbers(r.offered));
  f.emplace_back("invites_generated", num(t.invites_generated));
  f.emplace_back("rejected", num(t.rejected));
  f.emplace_back("successful", num(t.successful));
  f.emplace_back("timed_out", num(t.timed_out));
  f.emplace_back("in_flight", num(t.in_flight));
  f.emplace_back("ok_retransmissions", num(t.ok_retransmissions));
  f.emplace_back("responses_408", num(t.responses_408));
  f.emplace_back("proxy_send_timeouts", num(t.proxy_send_timeouts));
  f.emplace_back("unexpected", num(t.unexpected));
  f.emplace_back("bye_ok", num(t.bye_ok));
  f.emplace_back("bye_timeouts", num(t.bye_timeouts));
  f.emplace_back("acks_regenerated", num(t.acks_regenerated));
  f.emplace_back("acks_suppressed", num(t.acks_suppressed));
  f.emplace_back("malformed", num(t.malformed));
  f.emplace_back("mean_throughput_cps", num(r.mean_throughput));
  f.emplace_back("per_se_throughput_cps", join_numbers(r.per_se_throughput));
  f.emplace_back("mean_active_sessions", num(r.mean_active_sessions));
  f.emplace_back("max_active_sessions", num(r.max_active_sessions));
  f.emplace_back("first_retransmission_s",
                 r.first_retransmission_second ? std::to_string(*r.first_retransmission_second) : "");
  f.emplace_back("pdd_count", std::to_string(r.pdd.count));
  f.emplace_back("pdd_p50_s", num(r.pdd.p50));
  f.emplace_back("pdd_p90_s", num(r.pdd.p90));
  f.emplace_back("pdd_p99_s", num(r.pdd.p99));
  f.emplace_back("pdd_p99_8_s", num(r.pdd.p998));
  f.emplace_back("pdd_max_s", num(r.pdd.max));
  f.emplace_back("pdd_below_500ms", num(r.pdd.fraction_below_500ms));
  for (std::size_t b = 0; b < r.pdd.histogram.size(); ++b) {
    const std::string name =
        b < kPddBucketEdges.size() ? "pdd_lt_" + num(kPddBucketEdges[b]) + "s" : "pdd_ge_" + num(kPddBucketEdges.back()) + "s";
    f.emplace_back(name, num(r.pdd.histogram[b]));
  }
  return f;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ConfigError("cannot write " + path.string());
}

}  // namespace

std::string summary_csv(const std::vector<MetricsReport>& reports) {
  std::string out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto fields = summary_fields(reports[i]);
    if (i == 0) {
      for (std::size_t k = 0; k < fields.size(); ++k) out += (k ? "," : "") + csv_field(fields[k].first);
      out += '\n';
    }
    for (std::size_t k = 0; k < fields.size(); ++k) out += (k ? "," : "") + csv_field(fields[k].second);
    out += '\n';
  }
  return out;
}

std::string series_csv(const std::vector<double>& values, const std::vector<std::vector<double>>& per_se,
                       int t_offset) {
  std::string out = "t_seconds,value";
  for (std::size_t k = 0; k < per_se.size(); ++k) out += ",se" + std::to_string(k);
  out += '\n';
  for (std::size_t t = 0; t < values.size(); ++t) {
    out += std::to_string(static_cast<int>(t) + t_offset) + "," + num(values[t]);
    for (const auto& series : per_se) out += "," + num(series.at(t));
    out += '\n';
  }
  return out;
}

void write_reports(const std::filesystem::path& dir, const std::vector<MetricsReport>& reports) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "summary.csv", summary_csv(reports));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const MetricsReport& r = reports[i];
    std::filesystem::path sub = dir;
    if (reports.size() > 1) {
      sub = dir / ("run_" + std::to_string(i));
      std::filesystem::create_directories(sub, ec);
      if (ec) throw ConfigError("cannot create " + sub.string() + ": " + ec.message());
    }
    write_file(sub / "series_throughput.csv", series_csv(r.throughput, r.throughput_per_se, 0));
    write_file(sub / "series_active_sessions.csv", series_csv(r.active_sessions, {}, 1));
    write_file(sub / "series_retransmissions.csv", series_csv(r.retransmissions, {}, 1));
    for (std::size_t k = 0; k < proxy::kTrafficKinds; ++k) {
      const std::string kind(proxy::traffic_name(static_cast<proxy::Traffic>(k)));
      write_file(sub / ("series_re_rate_" + kind + ".csv"), series_csv(r.re_rate[k], {}, 0));
    }
  }
}

void print_summary(std::ostream& os, const MetricsReport& r) {
  const Scenario& s = r.scenario;
  const Totals& t = r.totals;
  double offered = 0.0;
  for (double v : r.offered) offered += v;
  auto ms = [](double seconds) { return num(std::round(seconds * 1e4) / 10.0) + " ms"; };
  os << "scenario    " << s.name << "  mechanism=" << proxy::mechanism_name(s.mechanism) << "  SEs=" << s.num_se
     << "  duration=" << s.duration_s << " s  seed=" << s.seed << '\n';
  if (s.capacity > 0.0) os << "capacity    " << num(s.capacity) << " cps\n";
  os << "offered     " << num(offered) << " cps\n";
  os << "INVITEs     generated " << t.invites_generated << "  rejected " << t.rejected << "  successful "
     << t.successful << "  timed out " << t.timed_out << "  in flight " << t.in_flight << '\n';
  os << "200 OK      retransmitted " << t.ok_retransmissions;
  if (r.first_retransmission_second) os << " (first by second " << *r.first_retransmission_second << ")";
  os << "  ACKs regenerated " << t.acks_regenerated << "  suppressed " << t.acks_suppressed << '\n';
  os << "timeouts    408 received " << t.responses_408 << "  unexpected " << t.unexpected << "  BYE unanswered "
     << t.bye_timeouts << '\n';
  os << "throughput  mean " << num(std::round(r.mean_throughput * 100) / 100) << " cps after " << s.warmup_s
     << " s warmup, last 30 s " << num(std::round(window_mean(r.throughput, s.duration_s - 30, s.duration_s) * 100) / 100)
     << " cps\n";
  os << "active      mean " << num(std::round(r.mean_active_sessions * 100) / 100) << "  max "
     << num(r.max_active_sessions) << '\n';
  os << "PDD         p50 " << ms(r.pdd.p50) << "  p90 " << ms(r.pdd.p90) << "  p99 " << ms(r.pdd.p99) << "  p99.8 "
     << ms(r.pdd.p998) << "  (" << r.pdd.count << " samples)\n";
  if (s.num_se >= 2 && r.mean_throughput > 0.0) {
    const FairnessShares shares = fairness_ratios(r);
    os << "per SE      cps / share / offered share\n";
    for (std::size_t i = 0; i < s.num_se; ++i) {
      os << "  se" << i << "  " << num(std::round(r.per_se_throughput[i] * 100) / 100) << "  "
         << num(std::round(shares.throughput[i] * 1000) / 1000) << "  "
         << num(std::round(shares.offered[i] * 1000) / 1000) << '\n';
    }
  }
}

}  // namespace sipovl::harness
