#pragma once

// Economic model-predictive yaw control: farm decomposition, two-parameter
// yaw trajectories and swarm optimisation of predicted energy.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "wfc/floridyn.hpp"
#include "wfc/pso.hpp"

namespace wfc {

struct YawBasisParams {
  double o1 = 0.5;
  double o2 = 0.5;
  double action_horizon = 100.0;  // s
  double rate = 0.3;              // deg/s
};

/// Yaw displacement (deg) at normalised time tn in [0, 1].
double basis_psi(const YawBasisParams& p, double tn);

/// Samples gamma0 + psi at k * dt for k = 0..steps. Beyond the action horizon
/// the final angle holds.
std::vector<double> trajectory(const YawBasisParams& p, double gamma0, int steps, double dt);

struct FarmGraph {
  int n = 0;
  std::vector<std::vector<int>> downstream;  // direct edges i -> j
  std::vector<std::vector<int>> groups;      // weakly connected, sorted
  Eigen::MatrixXd downwind;                  // downwind(i, j) in the frame of i (m)
  Eigen::MatrixXi delay;                     // delay(i, j) in steps, for every pair

  bool edge(int i, int j) const;
  /// All turbines reachable from i.
  std::vector<int> descendants(int i) const;
  /// Members of a group with every turbine listed before its upstream
  /// turbines. Throws CycleError on cyclic groups.
  std::vector<int> downstream_first(const std::vector<int>& group) const;
};

/// Edge i -> j iff j is downstream of i in i's wind frame and within
/// `crosswind_limit` (m) of its axis. Delays use the local speed u[i].
FarmGraph decompose(const std::vector<TurbineSite>& sites, const std::vector<double>& phi,
                    const std::vector<double>& u, double crosswind_limit, double advection,
                    double dt);

enum class CostKind { kEnergy, kShifted };

struct MpcConfig {
  CostKind cost = CostKind::kShifted;
  int tau_ph = 100;  // steps, energy cost
  int tau_ah = 20;   // steps
  int k_mpc = 12;    // steps between optimisations
  double rate = 0.3;  // deg/s
  YawLimitConfig limits;
  PsoConfig pso;
  double crosswind_limit = 2.0;  // D
  double reach_margin = 2.0;     // D kept beyond the farthest group member

  void validate() const;
};

/// Orientation plans for steps 1..steps of every member, decoded from theta
/// (o1, o2 per member).
std::vector<std::vector<double>> decode_plans(const Eigen::VectorXd& theta, const FarmState& group,
                                              const MpcConfig& cfg, double dt, int steps);

/// -dt * sum of yaw-weighted predicted power over tau_ph steps for all
/// members of `group`.
double cost_energy(const FarmState& group, const FlowModel& model, const MpcConfig& cfg,
                   const Eigen::VectorXd& theta, int tau_ph);

/// Time-shifted bookkeeping: -dt * sum_{k<tau_ah} [P(a, k) + sum_j P(j, k + delay_j)].
/// P holds yaw-weighted power, column k is step k + 1.
double shifted_energy(const Eigen::MatrixXd& weighted_power, int actuated,
                      const std::vector<std::pair<int, int>>& downstream_delays, int tau_ah,
                      double dt);

/// Shifted cost of member `actuated` of `group` with parameters theta (2
/// entries). `fixed` holds orientation plans of every member for at least
/// the evaluation horizon; the actuated row is replaced.
double cost_shifted(const FarmState& group, const FlowModel& model, const MpcConfig& cfg,
                    const FarmGraph& graph, const std::vector<int>& members, int actuated,
                    const Eigen::VectorXd& theta, const std::vector<std::vector<double>>& fixed);

struct OptimizationTrace {
  double time = 0.0;
  std::vector<int> group;  // turbine ids
  int turbine = -1;        // actuated turbine id, -1 for joint optimisation
  int iterations = 0;
  int evaluations = 0;
  std::vector<double> history;
  std::vector<double> theta;

  std::string to_json() const;
};

struct ControlOutput {
  std::vector<std::vector<double>> plans;  // per turbine, orientation for steps 1..tau_ah
  FarmGraph graph;
  std::vector<OptimizationTrace> traces;
};

/// One receding-horizon optimisation on a representative state.
ControlOutput control_step(const FarmState& state, const FlowModel& model, const MpcConfig& cfg,
                           std::uint64_t seed);

}  // namespace wfc
