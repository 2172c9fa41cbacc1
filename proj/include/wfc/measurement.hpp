#pragma once

#include <vector>

namespace wfc {

/// Per-turbine measurements delivered to the estimator and controllers.
///   mode 1: power and noise-free direction every 15 s
///   mode 2: power and 60 s averaged probe direction every 15 s
///   mode 3: noise-free direction every 5 s, free-stream speed given
///   mode 4: 60 s averaged probe direction every 60 s, free-stream speed given
struct MeasurementFrame {
  double time = 0.0;  // s
  int mode = 1;
  double window = 0.0;  // averaging window of the probe direction (s)
  std::vector<double> power;           // W
  std::vector<double> phi_probe;       // deg
  std::vector<double> phi_noise_free;  // deg
  double u_inf = 0.0;                  // m/s, modes 3 and 4

  bool has_power() const { return mode == 1 || mode == 2; }
  bool disturbed() const { return mode == 2 || mode == 4; }
  const std::vector<double>& phi() const { return disturbed() ? phi_probe : phi_noise_free; }
};

/// Sampling interval (s) and probe averaging window (s) of a mode.
double mode_interval(int mode);
double mode_window(int mode);

}  // namespace wfc
