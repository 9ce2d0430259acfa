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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sipovl/metrics.hpp"
#include "sipovl/scenario.hpp"

namespace sipovl::harness {

inline constexpr int kCsvSchemaVersion = 1;

// Runs one scenario on a fresh scheduler. A zero capacity with a load
// multiple triggers calibrate() first. Throws ConfigError before anything
// runs and InvariantViolation when end-of-run accounting does not add up.
MetricsReport run(const Scenario& s);

// Highest deterministic load (to 0.25 cps) that one SE under the Default
// mechanism carries with at least 99% of sessions set up, for the cost
// model, sizes and timers of `s`. Cached per process.
double calibrate(const Scenario& s);

// One report per value of `key`, all with the base seed. Runs may execute
// concurrently.
std::vector<MetricsReport> sweep(const std::string& key, const std::vector<std::string>& values,
                                 const Scenario& base, bool parallel = true);

struct FairnessShares {
  std::vector<double> throughput;  // sums to 1
  std::vector<double> offered;     // sums to 1
};
// Requires at least two SEs and some throughput.
FairnessShares fairness_ratios(const MetricsReport& report);

// CSV output. write_reports() puts summary.csv in `dir` and the series of
// each run in `dir` (one run) or `dir/run_<k>` (several).
std::string summary_csv(const std::vector<MetricsReport>& reports);
std::string series_csv(const std::vector<double>& values, const std::vector<std::vector<double>>& per_se,
                       int t_offset);
void write_reports(const std::filesystem::path& dir, const std::vector<MetricsReport>& reports);

// Human-readable end-of-run summary.
void print_summary(std::ostream& os, const MetricsReport& report);

}  // namespace sipovl::harness
