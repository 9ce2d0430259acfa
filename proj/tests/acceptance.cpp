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

// Runs the eight acceptance checks and prints one PASS/FAIL line for each.
// Exit status is the number of failed checks (0 when all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "flow_reference.hpp"
#include "sipovl/errors.hpp"
#include "sipovl/harness.hpp"
#include "sipovl/presets.hpp"
#include "sipovl/retransmission.hpp"

using namespace sipovl::harness;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << (ok ? "" : "FAILED ") << what;
  }
};

std::vector<MetricsReport> g_reports;  // every run, for the partition check

std::string num(double v) { return format_number(std::round(v * 1000.0) / 1000.0); }

const Scenario& preset(const std::string& name) {
  const Preset* p = find_preset(name);
  if (p == nullptr) throw sipovl::ConfigError("missing preset " + name);
  return p->scenario;
}

MetricsReport run_kept(const Scenario& s) {
  g_reports.push_back(run(s));
  return g_reports.back();
}

std::vector<MetricsReport> sweep_kept(const std::string& preset_name) {
  const Preset* p = find_preset(preset_name);
  if (p == nullptr || !p->sweep) throw sipovl::ConfigError("missing sweep preset " + preset_name);
  auto reports = sweep(p->sweep->key, p->sweep->values, p->scenario);
  g_reports.insert(g_reports.end(), reports.begin(), reports.end());
  return reports;
}

double final_window(const MetricsReport& r, int seconds) {
  const int d = r.scenario.duration_s;
  return window_mean(r.throughput, d - seconds, d);
}

void retransmission_schedule(Outcome& o) {
  const std::vector<double> want{0.5, 1.5, 3.5, 7.5, 11.5, 15.5, 19.5, 23.5, 27.5, 31.5};
  const sipovl::sip::RetransmissionPolicy policy;
  const auto got = sipovl::sip::retransmit_offsets(policy);
  bool exact = got.size() == want.size();
  for (std::size_t i = 0; exact && i < got.size(); ++i) {
    exact = got[i] == std::chrono::milliseconds(static_cast<long>(want[i] * 1000));
  }
  o.require(exact, "offsets 0.5..31.5 s exact");
  o.require(policy.total_timeout == std::chrono::seconds(32), "timeout 32 s");
}

void collapse(Outcome& o) {
  const MetricsReport r = run_kept(preset("default-collapse"));
  const double c = r.scenario.capacity;
  o.detail << "C=" << num(c) << " cps";
  o.require(r.first_retransmission_second && *r.first_retransmission_second < 5,
            "first retransmission in second " +
                (r.first_retransmission_second ? std::to_string(*r.first_retransmission_second) : "-") + " < 5");
  const double tail = final_window(r, 30);
  o.require(tail <= 0.1 * c, "final 30 s throughput " + num(tail) + " <= " + num(0.1 * c));
  // active_sessions[t] is sampled at t+1 s.
  const double early = *std::max_element(r.active_sessions.begin(), r.active_sessions.begin() + 5);
  o.require(early >= 40, "active sessions within 5 s peak " + num(early) + " >= 40");
}

void recovery(Outcome& o) {
  const MetricsReport r = run_kept(preset("ics-bm-sf"));
  const double c = r.scenario.capacity;
  o.require(r.mean_throughput >= 0.9 * c, "throughput " + num(r.mean_throughput) + " >= " + num(0.9 * c));
  o.require(r.totals.ok_retransmissions == 0,
            "200 OK retransmissions " + std::to_string(r.totals.ok_retransmissions) + " == 0");
  o.require(r.max_active_sessions <= 5, "max active sessions " + num(r.max_active_sessions) + " <= 5");
  o.require(r.pdd.fraction_below_500ms >= 0.99, "PDD < 500 ms for " + num(100 * r.pdd.fraction_below_500ms) + "%");
  o.require(r.pdd.p99 < 0.1, "PDD p99 " + num(r.pdd.p99 * 1000) + " ms < 100 ms");
}

void scaling(Outcome& o) {
  const auto rs = sweep_kept("se-scaling");
  const double expected[] = {1, 3, 10};
  if (rs.size() != 3) throw sipovl::InvariantViolation("se-scaling must have three points");
  const double base = rs[0].mean_active_sessions;
  for (std::size_t k = 0; k < 3; ++k) {
    const MetricsReport& r = rs[k];
    const double c = r.scenario.capacity;
    const std::string tag = std::to_string(r.scenario.num_se) + " SE";
    o.require(r.mean_throughput >= 0.85 * c, tag + " throughput " + num(r.mean_throughput));
    const double ratio = base > 0 ? r.mean_active_sessions / base : 0.0;
    o.require(ratio >= 0.5 * expected[k] && ratio <= 1.5 * expected[k],
              tag + " active " + num(r.mean_active_sessions) + " ratio " + num(ratio));
    if (k > 0) {
      o.require(r.pdd.p50 > rs[k - 1].pdd.p50, tag + " median PDD " + num(r.pdd.p50 * 1000) + " ms rising");
    }
  }
}

void recvbuf(Outcome& o) {
  const auto rs = sweep_kept("recvbuf-sweep");
  std::uint64_t prev = 0;
  bool monotone = true;
  std::ostringstream counts;
  for (const MetricsReport& r : rs) {
    const auto buf = link_config(r.scenario, Hop::kSeToRe).recv_buf;
    const auto n = r.totals.ok_retransmissions;
    counts << (counts.tellp() > 0 ? " " : "") << buf << ":" << n;
    if (n < prev) monotone = false;
    prev = n;
    if (buf == 2048) o.require(n == 0, "2 KB retransmissions " + std::to_string(n) + " == 0");
    if (buf == 16384 || buf == 65536) o.require(n > 0, std::to_string(buf / 1024) + " KB retransmissions > 0");
  }
  o.require(monotone, "nondecreasing [" + counts.str() + "]");
}

void fairness(Outcome& o) {
  const auto rs = sweep_kept("fairness-321");
  for (const MetricsReport& r : rs) {
    const double c = r.scenario.capacity;
    const double offered_total = r.scenario.load_multiple * c;
    const FairnessShares f = fairness_ratios(r);
    const bool below = offered_total < c;
    std::vector<double> target = below ? std::vector<double>{3.0 / 6, 2.0 / 6, 1.0 / 6}
                                       : std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3};
    const double tol = below ? 0.10 : 0.15;
    std::ostringstream shares;
    bool ok = f.throughput.size() == 3;
    for (std::size_t i = 0; ok && i < 3; ++i) {
      shares << (i ? "/" : "") << num(f.throughput[i]);
      ok = std::abs(f.throughput[i] - target[i]) <= tol * target[i];
    }
    o.require(ok, "x" + num(r.scenario.load_multiple) + " shares " + shares.str() +
                      (below ? " vs 3:2:1" : " vs equal"));
  }
}

std::string dir_bytes(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    all += std::filesystem::relative(f, dir).string() + "\n" + ss.str();
  }
  return all;
}

void properties(Outcome& o) {
  const std::string flow = sipovl::testing::check_flowlink_schedules(20260, 10000);
  o.require(flow.empty(), flow.empty() ? "flowlink 10^4 schedules" : "flowlink: " + flow);

  // Smart-forwarding safety and non-INVITE liveness are checked inside the
  // proxy and abort a run with InvariantViolation; the runs of criteria 2-6
  // got here, so they held there. Exercise them once more under Poisson load.
  Scenario s = preset("ics-bm-sf");
  s.num_se = 3;
  s.load_multiple = 3.0;
  s.arrival = sipovl::endpoints::Arrival::kPoisson;
  s.seed = 4242;
  s.duration_s = 60;
  run_kept(s);
  o.require(true, "SF safety and non-INVITE liveness held in " + std::to_string(g_reports.size()) + " runs");

  std::size_t broken = 0;
  for (const MetricsReport& r : g_reports) {
    const Totals& t = r.totals;
    if (t.invites_generated != t.rejected + t.successful + t.timed_out + t.in_flight) ++broken;
  }
  o.require(broken == 0, "outcome partition in every run");

  const auto tmp = std::filesystem::temp_directory_path() / "sipovl_acceptance";
  std::filesystem::remove_all(tmp);
  write_reports(tmp / "a", {run(s)});
  write_reports(tmp / "b", {run(s)});
  const bool same = dir_bytes(tmp / "a") == dir_bytes(tmp / "b");
  std::filesystem::remove_all(tmp);
  o.require(same, "same seed gives byte-identical CSV");
}

void underload(Outcome& o) {
  Scenario s = preset("ics-bm-sf");
  s.name = "underload";
  s.load_multiple = 0.5;
  const MetricsReport r = run_kept(s);
  double offered = 0;
  for (double x : r.offered) offered += x;
  o.require(std::abs(r.mean_throughput - offered) <= 0.02 * offered,
            "throughput " + num(r.mean_throughput) + " vs offered " + num(offered));
  const double reject_share =
      r.totals.invites_generated ? static_cast<double>(r.totals.rejected) / r.totals.invites_generated : 0.0;
  o.require(reject_share <= 0.01, "rejects " + num(100 * reject_share) + "% <= 1%");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"retransmission schedule", retransmission_schedule},
      {"default collapse", collapse},
      {"ICS+BM+SF recovery", recovery},
      {"SE scaling", scaling},
      {"receive-buffer sweep", recvbuf},
      {"fairness 3:2:1", fairness},
      {"property suites", properties},
      {"underload", underload},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << (o.detail.tellp() > 0 ? "; " : "") << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("criterion %zu %-26s %s  (%s) [%.1fs]\n", i + 1, criteria[i].first.c_str(),
                o.pass ? "PASS" : "FAIL", o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
