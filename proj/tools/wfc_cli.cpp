// Command-line front end: closed-loop runs, look-up tables, wind data
// preparation and trace metrics.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wfc/case_config.hpp"
#include "wfc/case_runner.hpp"
#include "wfc/errors.hpp"
#include "wfc/metrics.hpp"
#include "wfc/plant.hpp"
#include "wfc/reference.hpp"

namespace {

using json = nlohmann::ordered_json;

wfc::PowerTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw wfc::DataError("cannot open " + path);
  return wfc::read_power_trace(in);
}

int run(const std::string& config, const std::string& controller, std::uint64_t seed,
        double duration, const std::string& measurements, const std::string& output) {
  const wfc::CaseConfig cfg = wfc::load_case_config(config);
  std::vector<std::string> names;
  if (controller == "all") {
    names = cfg.controllers;
  } else {
    names.push_back(controller);
  }
  // Baseline first so the others can be normalised against it.
  std::stable_partition(names.begin(), names.end(), [](const auto& s) { return s == "baseline"; });

  wfc::RunOptions o;
  o.seed = seed;
  o.output_root = output;
  if (duration > 0.0) o.duration = duration;
  if (!measurements.empty()) {
    if (measurements != "noise-free" && measurements != "disturbed") {
      throw wfc::ConfigError("measurements", "expected noise-free or disturbed");
    }
    o.disturbed = measurements == "disturbed";
  }
  std::optional<wfc::LookupTable> lut;
  Eigen::MatrixXd baseline;
  for (const auto& name : names) {
    o.controller = name;
    if (name.rfind("lut-", 0) == 0 && !lut) lut = wfc::case_lut(cfg);
    o.lut = lut ? &*lut : nullptr;
    o.baseline_power = baseline.size() ? &baseline : nullptr;
    const wfc::RunResult r = wfc::run_case(cfg, o);
    if (name == "baseline") baseline = r.power;
    json line{{"controller", name},
              {"directory", r.directory},
              {"farm_energy", r.metrics.farm_energy},
              {"rate_violations", r.rate_violations}};
    if (r.metrics.has_baseline) line["median_efficiency"] = r.metrics.efficiency_quartiles.median;
    std::cout << line.dump() << '\n';
  }
  return 0;
}

int generate(const std::string& config, double grid_step, const std::string& output) {
  wfc::CaseConfig cfg = wfc::load_case_config(config);
  if (grid_step > 0.0) cfg.reference.lut_step = grid_step;
  cfg.reference.lut_file.clear();
  wfc::LutGenerationReport report;
  const wfc::LookupTable lut = wfc::case_lut(cfg, &report);
  if (output.empty() || output == "-") {
    wfc::write_lut(std::cout, lut);
  } else {
    std::ofstream out(output);
    if (!out) throw wfc::DataError("cannot write " + output);
    wfc::write_lut(out, lut);
  }
  std::cerr << json{{"directions", lut.directions()}, {"stalled", report.stalled}}.dump() << '\n';
  return 0;
}

int prepare(const std::string& input, const std::string& output, double spacing, double cutoff,
            double max_gap) {
  std::ifstream in(input);
  if (!in) throw wfc::DataError("cannot open " + input);
  const wfc::DirectionSeries raw = wfc::read_direction_series(in);
  wfc::DirectionSeries s =
      wfc::prepare_direction_series(raw.time, raw.direction, spacing, cutoff, max_gap);
  s.metadata = raw.metadata;
  std::ostringstream note;
  note << " prepared: spacing " << spacing << " s, low-pass " << cutoff << " Hz, zero phase";
  s.metadata += note.str() + "\n";
  std::ofstream out(output);
  if (!out) throw wfc::DataError("cannot write " + output);
  wfc::write_direction_series(out, s);
  return 0;
}

int metrics(const std::string& run_dir, const std::string& baseline_dir, double dt) {
  const wfc::PowerTrace t = load_trace(run_dir + "/trace.csv");
  if (t.yaw.size() == 0) throw wfc::DataError("trace has no orientation columns");
  std::optional<wfc::PowerTrace> b;
  if (!baseline_dir.empty()) b = load_trace(baseline_dir + "/trace.csv");
  const int window = static_cast<int>(std::lround(600.0 / dt));
  const wfc::RunMetrics m = wfc::run_metrics(t.power, t.yaw, dt, b ? &b->power : nullptr, window);
  std::cout << wfc::metrics_json(m);
  return 0;
}

int tuning(const std::string& ref, const std::string& model, int max_lag) {
  const wfc::PowerTrace r = load_trace(ref);
  const wfc::PowerTrace m = load_trace(model);
  const wfc::TuningMetrics t =
      wfc::tuning_report(r.power, m.power, m.spread.size() ? &m.spread : nullptr, max_lag);
  std::cout << t.to_json() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop wind farm flow control with a dynamic wake model"};
  app.require_subcommand(1);

  std::string config, controller = "all", measurements, output = "runs";
  std::uint64_t seed = 1;
  double duration = 0.0;
  auto* run_cmd = app.add_subcommand("run", "Run controllers against the synthetic plant");
  run_cmd->add_option("--config", config, "Case configuration (JSON)")->required();
  run_cmd->add_option("--controller", controller,
                      "baseline, lut-2, lut-4, clc-energy-500, clc-energy-1000, clc-shifted or all");
  run_cmd->add_option("--seed", seed, "Run seed");
  run_cmd->add_option("--duration", duration, "Recorded duration (s), overrides the config");
  run_cmd->add_option("--measurements", measurements, "noise-free or disturbed");
  run_cmd->add_option("--output", output, "Root of the run directories");

  double grid_step = 0.0;
  std::string lut_out;
  auto* lut_cmd = app.add_subcommand("generate-lut", "Steady-state optimal misalignment table");
  lut_cmd->add_option("--config", config, "Case configuration (JSON)")->required();
  lut_cmd->add_option("--grid-step", grid_step, "Direction step (deg)");
  lut_cmd->add_option("--output", lut_out, "Output file, stdout when omitted");

  std::string input, wind_out;
  double spacing = 20.0, cutoff = 1.0 / 600.0, max_gap = 120.0;
  auto* wind_cmd = app.add_subcommand("prepare-wind", "Resample and low-pass a direction record");
  wind_cmd->add_option("--input", input, "Raw two-column record")->required();
  wind_cmd->add_option("--output", wind_out, "Prepared series")->required();
  wind_cmd->add_option("--spacing", spacing, "Grid spacing (s)");
  wind_cmd->add_option("--cutoff", cutoff, "Cut-off frequency (Hz)");
  wind_cmd->add_option("--max-gap", max_gap, "Largest interpolation span (s)");

  std::string run_dir, baseline_dir;
  double dt = 5.0;
  auto* met_cmd = app.add_subcommand("metrics", "Energy and yaw-travel metrics of a run");
  met_cmd->add_option("--run-dir", run_dir, "Run directory")->required();
  met_cmd->add_option("--baseline-dir", baseline_dir, "Baseline run directory");
  met_cmd->add_option("--dt", dt, "Trace step (s)");

  std::string ref, model;
  int max_lag = 120;
  auto* tun_cmd = app.add_subcommand("tuning-report", "Model-versus-reference power errors");
  tun_cmd->add_option("--ref", ref, "Reference trace CSV")->required();
  tun_cmd->add_option("--model", model, "Model trace CSV (spread columns optional)")->required();
  tun_cmd->add_option("--max-lag", max_lag, "Largest shift scanned (steps)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    if (*run_cmd) return run(config, controller, seed, duration, measurements, output);
    if (*lut_cmd) return generate(config, grid_step, lut_out);
    if (*wind_cmd) return prepare(input, wind_out, spacing, cutoff, max_gap);
    if (*met_cmd) return metrics(run_dir, baseline_dir, dt);
    if (*tun_cmd) return tuning(ref, model, max_lag);
  } catch (const wfc::ConfigError& e) {
    std::cerr << json{{"error", "config"}, {"field", e.field()}, {"message", e.what()}}.dump()
              << '\n';
    return 3;
  } catch (const wfc::DataError& e) {
    std::cerr << json{{"error", "data"}, {"message", e.what()}}.dump() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 1;
}
