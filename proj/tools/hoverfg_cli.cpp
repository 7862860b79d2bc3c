// Copyright 2026 The hoverfg Authors
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

// hoverfg command-line tool: simulate sensor logs, run the sensor ablation,
// and dump per-epoch trajectories.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hoverfg/hoverfg.hpp"

namespace {

using namespace hoverfg;

std::string truth_path_for(const std::string& log_path) {
  std::string base = log_path;
  const auto dot = base.rfind('.');
  const auto slash = base.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    base.erase(dot);
  }
  return base + ".truth.fjl";
}

RunConfig config_from_log(const LogContents& log) {
  const auto text = header_config(log.header);
  if (!text) return {};
  try {
    return run_config_from_json(Json::parse(*text));
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("log config header: ") + e.what());
  }
}

struct Inputs {
  LogContents log;
  std::vector<TruthEpoch> truth;
  RunConfig config;
};

Inputs load_inputs(const std::string& log_path, const std::string& truth_path,
                   const std::string& config_path) {
  Inputs in;
  in.log = read_log_with_header(log_path);
  in.truth = read_truth(truth_path);
  in.config = config_from_log(in.log);
  if (!config_path.empty()) {
    // An explicit config overrides the estimator settings only; the
    // scenario stays the one the log was generated from.
    const RunConfig c = load_run_config(config_path);
    in.config.estimator = c.estimator;
  }
  return in;
}

std::vector<AblationRow> load_rows(const std::string& spec) {
  if (spec.empty() || spec == "default") return default_rows();
  return rows_from_json(parse_json_file(spec));
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 std::string truth_out) {
  const RunConfig cfg =
      config_path.empty() ? RunConfig{} : load_run_config(config_path);
  if (truth_out.empty()) truth_out = truth_path_for(out);
  const GroundTruth truth = generate_truth(cfg.scenario);
  const std::vector<SensorRecord> records = simulate(truth);
  const std::string header = "config " + to_json(cfg).dump();
  write_log(records, out, {header});
  write_truth(truth.epochs(), truth_out, {header});
  std::fprintf(stderr, "wrote %zu records to %s and %zu epochs to %s\n",
               records.size(), out.c_str(), truth.epochs().size(),
               truth_out.c_str());
  return 0;
}

int cmd_ablate(const std::string& log_path, const std::string& truth_path,
               const std::string& config_path, const std::string& rows_spec,
               int seeds, const std::string& report, const std::string& format) {
  const Inputs in = load_inputs(log_path, truth_path, config_path);
  const std::vector<AblationRow> rows = load_rows(rows_spec);
  if (seeds > 1 && !header_config(in.log.header)) {
    throw ConfigError(
        "--seeds > 1 needs the scenario config embedded in the log header");
  }
  std::vector<ErrorReport> reports;
  reports.push_back(
      run_ablation(in.log.records, in.truth, rows, in.config.estimator));
  if (seeds > 1) {
    ScenarioConfig next = in.config.scenario;
    next.rng_seed += 1;
    for (ErrorReport& r :
         run_ablation_seeds(next, rows, in.config.estimator, seeds - 1)) {
      reports.push_back(std::move(r));
    }
  }
  for (std::size_t s = 0; s < reports.size(); ++s) {
    for (const RowResult& r : reports[s].rows) {
      if (r.divergent) {
        std::fprintf(stderr, "seed %zu: row '%s' diverged: %s\n", s,
                     r.row.name.c_str(), r.diagnostics.c_str());
      }
    }
  }
  emit_report(aggregate(reports),
              format == "markdown" ? ReportFormat::Markdown : ReportFormat::Csv,
              report);
  std::fprintf(stderr, "wrote report to %s\n", report.c_str());
  return 0;
}

int cmd_dump(const std::string& log_path, const std::string& truth_path,
             const std::string& config_path, const std::string& rows_spec,
             const std::string& row_name, const std::string& out) {
  const Inputs in = load_inputs(log_path, truth_path, config_path);
  const AblationRow row = find_row(load_rows(rows_spec), row_name);
  const ErrorReport report =
      run_ablation(in.log.records, in.truth, {row}, in.config.estimator);
  const RowResult& r = report.rows.front();
  if (r.divergent) {
    std::fprintf(stderr, "row '%s' diverged: %s\n", r.row.name.c_str(),
                 r.diagnostics.c_str());
  }
  emit_trajectory_dump(report, in.truth, row_name, out);
  std::fprintf(stderr, "wrote %zu epochs to %s\n", r.estimate.size(),
               out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV-UGV cooperative localization with hover constraints"};
  app.require_subcommand(1);

  std::string config, out, truth_out;
  auto* sim = app.add_subcommand("simulate", "generate a sensor log and truth");
  sim->add_option("--config", config, "JSON run config (defaults if omitted)")
      ->check(CLI::ExistingFile);
  sim->add_option("--out", out, "sensor log to write (.fjl)")->required();
  sim->add_option("--truth", truth_out,
                  "truth file to write (default <out stem>.truth.fjl)");

  std::string log, truth, rows = "default", report, format = "csv", row;
  int seeds = 1;
  auto* abl = app.add_subcommand("ablate", "run the sensor ablation");
  abl->add_option("--log", log, "sensor log")->required()->check(CLI::ExistingFile);
  abl->add_option("--truth", truth, "truth file")->required()->check(CLI::ExistingFile);
  abl->add_option("--config", config, "JSON config overriding estimator settings")
      ->check(CLI::ExistingFile);
  abl->add_option("--rows", rows, "rows JSON file or 'default'");
  abl->add_option("--seeds", seeds, "number of seeds (median aggregation)")
      ->check(CLI::PositiveNumber);
  abl->add_option("--report", report, "report path")->required();
  abl->add_option("--format", format, "csv or markdown")
      ->check(CLI::IsMember({"csv", "markdown"}));

  auto* dmp = app.add_subcommand("dump", "per-epoch trajectory CSV for one row");
  dmp->add_option("--log", log, "sensor log")->required()->check(CLI::ExistingFile);
  dmp->add_option("--truth", truth, "truth file")->required()->check(CLI::ExistingFile);
  dmp->add_option("--config", config, "JSON config overriding estimator settings")
      ->check(CLI::ExistingFile);
  dmp->add_option("--rows", rows, "rows JSON file or 'default'");
  dmp->add_option("--row", row, "row name")->required();
  dmp->add_option("--out", out, "CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "hoverfg: error: %s\nRun with --help for usage.\n",
                 e.what());
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }
  try {
    if (sim->parsed()) return cmd_simulate(config, out, truth_out);
    if (abl->parsed()) {
      return cmd_ablate(log, truth, config, rows, seeds, report, format);
    }
    if (dmp->parsed()) return cmd_dump(log, truth, config, rows, row, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hoverfg: error: %s\n", e.what());
    return 1;
  }
  return 1;
}
