#pragma once

// Closed-loop runs of one controller against the synthetic plant.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wfc/case_config.hpp"
#include "wfc/metrics.hpp"
#include "wfc/reference.hpp"

namespace wfc {

struct RunOptions {
  std::string controller = "baseline";
  std::uint64_t seed = 1;
  std::optional<double> duration;    // overrides the config
  std::optional<bool> disturbed;     // overrides the config
  std::string output_root;           // empty: no files
  const LookupTable* lut = nullptr;  // table for lut-* controllers; generated when absent
  const Eigen::MatrixXd* baseline_power = nullptr;  // for normalised metrics
};

struct RunResult {
  std::string controller;
  std::string directory;  // empty when nothing was written
  std::vector<double> time;      // s, relative to the end of the spin-up
  Eigen::MatrixXd power;         // turbines x steps, W
  Eigen::MatrixXd orientation;   // deg
  Eigen::MatrixXd yaw;           // misalignment, deg
  Eigen::MatrixXd phi;           // local background direction, deg
  Eigen::MatrixXd estimate;      // ensemble-mean turbine power, W (closed loop only)
  Eigen::MatrixXd spread;        // ensemble standard deviation of turbine power, W
  RunMetrics metrics;
  int rate_violations = 0;
  double max_orientation_step = 0.0;  // deg
  int optimizations = 0;
  int assimilations = 0;
};

/// Table over the full circle with the case's grid step.
LookupTable case_lut(const CaseConfig& cfg, LutGenerationReport* report = nullptr);

RunResult run_case(const CaseConfig& cfg, const RunOptions& options);

/// Run directory "<root>/<hash>-<seed>/<controller>".
std::string run_directory(const CaseConfig& cfg, const RunOptions& options);

/// Per-step trace: time, then power_i, yaw_i, orientation_i, phi_i per turbine.
void write_trace(std::ostream& os, const RunResult& r, const std::vector<TurbineSite>& sites);

/// Reads the power columns (and spread columns if present) of a trace or
/// estimate CSV. Rows are turbines, columns are steps.
struct PowerTrace {
  std::vector<double> time;
  Eigen::MatrixXd power;
  Eigen::MatrixXd spread;  // empty without spread columns
  Eigen::MatrixXd yaw;     // empty without yaw columns
};
PowerTrace read_power_trace(std::istream& is);

std::string metrics_json(const RunMetrics& m);

}  // namespace wfc
