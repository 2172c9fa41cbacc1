#pragma once

// Global-best particle swarm minimiser on the unit hypercube.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace wfc {

struct PsoConfig {
  int particles = 100;
  int max_iter = 20;
  int stall_iter = 4;        // stop after this many iterations without improvement
  double stall_tol = 1e-6;   // relative improvement regarded as none
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  std::uint64_t seed = 1;

  void validate() const;
};

struct PsoResult {
  Eigen::VectorXd theta;
  double cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::vector<double> history;  // best cost after the initial swarm and each iteration
};

using CostFunction = std::function<double(const Eigen::VectorXd&)>;

/// Minimises `cost` over [0,1]^dim. `initial` positions replace the first
/// random particles (clamped to the box).
PsoResult pso_minimize(const CostFunction& cost, int dim, const PsoConfig& cfg,
                       const std::vector<Eigen::VectorXd>& initial = {});

}  // namespace wfc
