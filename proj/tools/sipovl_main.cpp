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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sipovl/errors.hpp"
#include "sipovl/harness.hpp"
#include "sipovl/presets.hpp"
#include "sipovl/scenario.hpp"

namespace {

using namespace sipovl;
using namespace sipovl::harness;

struct RunOptions {
  std::string target;
  std::string out = "sipovl-out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::string sweep;
  std::optional<double> load_multiple;
  bool serial = false;
};

int run_command(const RunOptions& opt) {
  Scenario scenario;
  std::optional<SweepSpec> sweep_spec;
  bool calibrate_only = false;
  if (const Preset* p = find_preset(opt.target)) {
    scenario = p->scenario;
    sweep_spec = p->sweep;
    calibrate_only = p->calibrate_only;
  } else if (std::filesystem::is_regular_file(opt.target)) {
    scenario = load_scenario_file(opt.target);
  } else {
    throw ConfigError("'" + opt.target + "' is neither a preset nor a readable scenario file");
  }

  for (const std::string& kv : opt.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_key(scenario, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opt.seed) scenario.seed = *opt.seed;
  if (opt.load_multiple) set_key(scenario, "load.multiple", std::to_string(*opt.load_multiple));
  if (!opt.sweep.empty()) {
    const auto eq = opt.sweep.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep expects key=v1,v2,...");
    sweep_spec = SweepSpec{opt.sweep.substr(0, eq), split_list(opt.sweep.substr(eq + 1))};
  }

  const std::filesystem::path out(opt.out);
  if (calibrate_only) {
    const double capacity = calibrate(scenario);
    std::filesystem::create_directories(out);
    std::ofstream csv(out / "calibration.csv", std::ios::binary | std::ios::trunc);
    csv << "schema_version,capacity_cps\n" << kCsvSchemaVersion << ',' << format_number(capacity) << '\n';
    if (!csv) throw ConfigError("cannot write " + (out / "calibration.csv").string());
    std::cout << "capacity    " << format_number(capacity) << " cps\n";
    return 0;
  }

  std::vector<MetricsReport> reports;
  if (sweep_spec) {
    reports = sweep(sweep_spec->key, sweep_spec->values, scenario, !opt.serial);
  } else {
    reports.push_back(run(scenario));
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (sweep_spec) {
      std::cout << (i ? "\n" : "") << "== " << sweep_spec->key << " = " << sweep_spec->values[i] << " ==\n";
    }
    print_summary(std::cout, reports[i]);
  }
  write_reports(out, reports);
  std::cout << "\nCSV written to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIP-over-TCP overload control simulator"};
  app.require_subcommand(1);

  RunOptions opt;
  auto* run_cmd = app.add_subcommand("run", "Run a preset or a scenario file");
  run_cmd->add_option("target", opt.target, "Preset name or scenario file")->required();
  run_cmd->add_option("--out", opt.out, "Output directory for CSV files");
  run_cmd->add_option("--seed", opt.seed, "Random seed");
  run_cmd->add_option("--set", opt.sets, "Scenario override key=value (repeatable)")->allow_extra_args(false);
  run_cmd->add_option("--sweep", opt.sweep, "Sweep key=v1,v2,...");
  run_cmd->add_option("--load-multiple", opt.load_multiple, "Aggregate offered load as a multiple of capacity");
  run_cmd->add_flag("--serial", opt.serial, "Run sweep points one after another");

  auto* list_cmd = app.add_subcommand("list", "List presets");
  auto* keys_cmd = app.add_subcommand("keys", "List scenario keys with their default values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (list_cmd->parsed()) {
      for (const Preset& p : presets()) std::cout << p.name << "\n    " << p.description << '\n';
      return 0;
    }
    if (keys_cmd->parsed()) {
      const Scenario defaults;
      for (const std::string& key : scenario_keys()) std::cout << key << " = " << get_key(defaults, key) << '\n';
      return 0;
    }
    return run_command(opt);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }
}
