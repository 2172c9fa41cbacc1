#pragma once

// Steady-state farm evaluation for uniform inflow: wakes are laid out along
// straight axes, which is the converged limit of the dynamic simulation.

#include <vector>

#include "wfc/floridyn.hpp"

namespace wfc {

struct SteadyResult {
  std::vector<double> u_eff;
  std::vector<double> ti;
  std::vector<double> power;  // W
  double total = 0.0;         // W
};

/// misalignment[i] is heading - orientation of turbine i (deg).
SteadyResult steady_state(const FlowModel& model, const std::vector<TurbineSite>& sites, double u,
                          double phi, const std::vector<double>& misalignment);

}  // namespace wfc
