#pragma once

// Dead-band direction filter and look-up-table yaw controllers.

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "wfc/floridyn.hpp"
#include "wfc/pso.hpp"

namespace wfc {

struct DeadBandState {
  double phi_hat = 0.0;   // filtered direction (deg)
  long tau = 0;           // step of the last update
  double limit = 2.0;     // deg
  double k_i = 0.01;      // 1/s
  double integral = 0.0;  // sum of wrapped deviations since the last update (deg)
};

/// Feeds one measurement taken at step k. Returns true when phi_hat changed.
/// The deviation of the current sample is included in the running sum.
bool deadband_update(DeadBandState& state, double phi_meas, double dt, long k);

/// Optimal misalignment per grid direction and turbine.
struct LookupTable {
  double start = 0.0;  // deg
  double step = 1.0;   // deg
  bool periodic = true;
  Eigen::MatrixXd gamma;  // directions x turbines, misalignment (deg)

  int directions() const { return static_cast<int>(gamma.rows()); }
  int turbines() const { return static_cast<int>(gamma.cols()); }
  double direction(int r) const { return start + r * step; }
  /// Linear interpolation in direction; periodic tables wrap, others clamp.
  double misalignment(double phi, int turbine) const;

  static LookupTable zeros(int turbines);
};

/// New orientation after one step towards phi_hat - misalignment, limited to
/// rate * dt.
double lut_yaw_step(double orientation, double phi_hat, double misalignment, double rate,
                    double dt);

struct LutGenerationConfig {
  double gamma_limit = 33.0;  // search box (deg)
  YawLimitConfig limits;
  PsoConfig pso;
  double crosswind_limit = 2.0;  // D, for splitting the farm into groups
};

struct LutGenerationReport {
  int stalled = 0;  // directions where the swarm did not beat greedy
};

/// Steady-state optimum misalignments over the given direction grid.
LookupTable generate_lut(const FlowModel& model, const std::vector<TurbineSite>& sites,
                         double start, double step, int count, bool periodic,
                         const LutGenerationConfig& cfg, LutGenerationReport* report = nullptr);

/// Tabular text: "# start step periodic turbines" header line followed by one
/// row per direction: direction, then one misalignment per turbine.
void write_lut(std::ostream& os, const LookupTable& lut);
LookupTable read_lut(std::istream& is);

}  // namespace wfc
