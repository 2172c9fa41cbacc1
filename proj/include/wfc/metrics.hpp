#pragma once

// Energy, yaw-travel and model-tuning metrics on uniformly sampled traces.

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace wfc {

/// E(k) = dt * sum of the last `window` samples, for every k with a full
/// window (window - 1 <= k). Throws DataError when the trace is too short.
Eigen::VectorXd sliding_energy(const Eigen::VectorXd& power, double dt, int window = 120);

/// Sum of absolute wrapped orientation increments (deg).
double yaw_travel(const std::vector<double>& yaw);

struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

/// Linear-interpolation quartiles of a sample.
Quartiles quartiles(std::vector<double> values);

struct RunMetrics {
  std::vector<double> turbine_energy;  // J
  double farm_energy = 0.0;            // J
  Eigen::VectorXd windowed_energy;     // J, farm, 600 s windows
  std::vector<double> yaw_travel;      // deg
  Eigen::VectorXd efficiency;          // windowed energy / baseline windowed energy
  Quartiles efficiency_quartiles;
  bool has_baseline = false;
};

/// power: turbines x steps (W); yaw: turbines x steps (deg).
RunMetrics run_metrics(const Eigen::MatrixXd& power, const Eigen::MatrixXd& yaw, double dt,
                       const Eigen::MatrixXd* baseline_power = nullptr, int window = 120);

struct TurbineTuning {
  double best_correlation = 0.0;
  int best_lag = 0;  // model trace is best aligned when shifted by this many steps
  double bias = 0.0;
  double abs_error = 0.0;
  double weighted_error = 0.0;  // mean |error| / spread
};

struct TuningMetrics {
  double mean_bias = 0.0;
  double mean_abs_error = 0.0;
  double mean_sq_turbine_error = 0.0;
  double mean_sq_farm_error = 0.0;
  double farm_bias = 0.0;
  double spread_weighted_sq_error = 0.0;
  std::vector<TurbineTuning> turbines;

  std::string to_json() const;
};

/// Reference and model traces: turbines x steps (W). `spread` is the
/// predicted ensemble standard deviation of the model trace; when absent a
/// unit spread is used.
TuningMetrics tuning_report(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& model,
                            const Eigen::MatrixXd* spread = nullptr, int max_lag = 120);

}  // namespace wfc
