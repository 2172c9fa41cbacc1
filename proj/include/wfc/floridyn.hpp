#pragma once

// Dynamic wake simulation with observation points (OPs).
//
// Every turbine owns a chain of OPs, newest first. An OP is shed at the rotor
// each step and carries the rotor's yaw and induction together with the flow
// state it saw. OPs move on the undeflected wake axis ("base" position); the
// deflected centre is reconstructed from the downwind distance x_w and the
// frozen yaw when a wake is evaluated.

#include <Eigen/Dense>
#include <deque>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wfc/wake_model.hpp"

namespace wfc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Spatio-temporal kernel widths. Lengths are in rotor diameters.
struct WeightingConfig {
  double dw_phi = 2.87;
  double cw_phi = 2.87;
  double t_phi = 50.0;  // s
  double dw_u = 0.6966;
  double cw_u = 0.3570;
  double t_u = 206.2331;  // s
  double advection = 0.7396;

  void validate() const;
};

struct SimConfig {
  double dt = 5.0;  // s
  int n_op = 200;
  double u_inf = 8.0;
  double phi_inf = 0.0;  // deg
  double ti0 = 0.054;

  void validate() const;
};

struct FlowModel {
  TurbineModel turbine;
  WakeParams wake;
  WeightingConfig weights;
  SimConfig sim;
  double shear_exponent = 0.071;
};

struct TurbineSite {
  int id = 0;
  double x = 0.0;  // m
  double y = 0.0;  // m
};

struct ObservationPoint {
  double bx = 0.0;  // undeflected wake-axis position (m)
  double by = 0.0;
  double x_w = 0.0;  // downwind distance from the source rotor (m)
  double yaw = 0.0;  // misalignment at shed time (deg)
  double induction = 0.0;
  double u = 0.0;    // m/s
  double phi = 0.0;  // deg
  double ti = 0.0;
  double shed_time = 0.0;  // s
  int source = 0;          // index into FarmState::sites
  double u_adv = 0.0;      // kernel-weighted flow used for the last advection
  double phi_adv = 0.0;
  double vx = 0.0;  // advection velocity including the advection factor (m/s)
  double vy = 0.0;
};

using OpChain = std::deque<ObservationPoint>;

struct TurbineState {
  double orientation = 0.0;  // rotor-normal heading (deg)
  double yaw = 0.0;          // misalignment phi_bg - orientation (deg)
  double induction = 1.0 / 3.0;
  double u_bg = 0.0;    // background hub-height speed (m/s)
  double phi_bg = 0.0;  // background direction (deg)
  double u_eff = 0.0;   // rotor-effective speed (m/s)
  double ti = 0.0;      // local turbulence intensity
  double power = 0.0;   // W
};

struct FarmState {
  std::vector<TurbineSite> sites;
  std::vector<OpChain> chains;  // newest OP first
  std::vector<TurbineState> turbines;
  long step = 0;
  double time = 0.0;  // s

  int size() const { return static_cast<int>(sites.size()); }
};

/// Exogenous inputs for one step. Empty members are not applied.
struct Forcing {
  std::optional<double> uniform_phi;  // overwrite every OP direction
  std::vector<double> u_bg;           // per-turbine background speed
  std::vector<double> phi_bg;         // per-turbine background direction
};

/// Kernel: OPs advect with the kernel-weighted flow of their own chain and
/// turbines read their background from all nearby OPs.
/// Frozen: OPs keep the advection velocity of their last kernel evaluation
/// and turbines hold their background state. Used for predictions, where no
/// new information enters the model.
enum class Propagation { kKernel, kFrozen };

struct FlowSample {
  double u = 0.0;
  double phi = 0.0;
};

struct TurbineInflow {
  double u_eff = 0.0;
  double phi = 0.0;
  double ti = 0.0;
};

/// Chains initialised at steady state for uniform flow (u, phi). Orientations
/// default to the flow heading.
FarmState make_farm_state(const FlowModel& model, std::vector<TurbineSite> sites, double u,
                          double phi, const std::vector<double>* orientations = nullptr);

/// Advances the farm by one time step with the given orientation commands.
/// Throws StateCorruptionError when a chain holds no OP.
void step(FarmState& state, const FlowModel& model, const std::vector<double>& orientations,
          const Forcing* forcing = nullptr, Propagation mode = Propagation::kKernel);

/// Kernel-weighted flow at a point over all OPs. Distances are taken in the
/// frame whose downwind axis has the given heading; time offsets against
/// `time`. Falls back to the nearest OP when no weight is significant.
FlowSample weighted_flow_at(const FarmState& state, const WeightingConfig& weights,
                            double diameter, Vec2 position, double heading, double time);

/// Rotor-effective inflow of one turbine from its background state and all
/// other chains.
TurbineInflow turbine_inflow(const FarmState& state, const FlowModel& model, int turbine);

/// Combined hub-height velocity-reduction fraction at a point from all
/// chains except `exclude`.
double point_deficit(const FarmState& state, const FlowModel& model, Vec2 p, int exclude = -1);

/// Recomputes turbine backgrounds (from the OPs), inflow and power.
void refresh_turbines(FarmState& state, const FlowModel& model);

/// Recomputes inflow and power for fixed backgrounds.
void refresh_power(FarmState& state, const FlowModel& model);

struct Prediction {
  Eigen::MatrixXd power;  // turbines x horizon, W
  Eigen::MatrixXd yaw;    // misalignment, deg
};

/// Rolls a copy forward with frozen propagation. plan[i][k] is the
/// orientation of turbine i at step k + 1; column k of the result is step
/// k + 1.
Prediction predict(const FarmState& state, const FlowModel& model, int horizon,
                   const std::vector<std::vector<double>>& plan);

/// Sub-state restricted to `members`, with chains trimmed to OPs within
/// `reach` metres of their rotor (at least one OP is kept).
FarmState extract_group(const FarmState& state, const std::vector<int>& members, double reach);

/// Deflected wake-centre position of an OP.
Vec2 op_center(const ObservationPoint& op, const FlowModel& model);

/// One CSV record per OP.
void write_snapshot(std::ostream& os, const FarmState& state, const FlowModel& model);
/// Reads OP chains written by write_snapshot into a state with known sites.
void read_snapshot(std::istream& is, FarmState& state, const FlowModel& model);

}  // namespace wfc
