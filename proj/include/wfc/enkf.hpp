#pragma once

// Ensemble Kalman filter on the OP flow states of an ensemble of farm models.
//
// Every ensemble is projected onto the OPs of ensemble 0 (the common nodes),
// perturbed with process noise and corrected from turbine power (speed
// channel) and wind direction (direction channel). The node increments are
// written back onto the OP with the same chain and index in every ensemble.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wfc/floridyn.hpp"
#include "wfc/measurement.hpp"

namespace wfc {

struct EnkfConfig {
  int n_e = 50;
  int k_enkf = 3;              // steps between assimilations
  double l_loc_phi = 2.8;      // D
  double l_loc_u = 6.8011;     // D
  double sigma_mu_u = 0.1991;  // m/s
  double sigma_mu_phi = 0.0;   // deg
  double sigma_nu_p = 0.08;    // MW
  double sigma_nu_phi = 3.0;   // deg
  double taper_support = 2.0;  // localisation cut-off in units of l_loc
  double projection_length = 15.0;  // m

  void validate() const;
};

struct CommonNodes {
  std::vector<Vec2> position;
  std::vector<std::pair<int, int>> index;  // (chain, OP index) in the reference ensemble

  int size() const { return static_cast<int>(position.size()); }
};

using ProjectionMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

CommonNodes common_nodes(const FarmState& reference);

/// Row-normalised Gaussian weights from the OPs of `ensemble` (flattened
/// chain by chain) to the nodes. Only OPs of the node's chain contribute.
ProjectionMatrix projection_weights(const FarmState& ensemble, const CommonNodes& nodes,
                                    double length);

struct CommonValues {
  Eigen::VectorXd u;
  Eigen::VectorXd phi;
};

CommonValues project(const FarmState& ensemble, const CommonNodes& nodes, double length);

struct MeasurementPrediction {
  Eigen::VectorXd power;  // MW
  Eigen::VectorXd phi;    // deg
};

MeasurementPrediction predict_measurements(const FarmState& ensemble);

/// Gaussian taper with a hard cut-off at `support` * l.
double localization(double distance, double l, double support);

struct Analysis {
  Eigen::MatrixXd increment;  // states x ensembles
  Eigen::MatrixXd gain;       // states x measurements
  double innovation_norm = 0.0;
};

/// Stochastic EnKF analysis. X: states x ensembles, HX: predicted
/// measurements x ensembles, `perturbation`: measurement noise draws.
/// For circular quantities (deg) anomalies and innovations are wrapped.
Analysis enkf_analysis(const Eigen::MatrixXd& X, const Eigen::MatrixXd& HX,
                       const Eigen::VectorXd& y, const Eigen::MatrixXd& R,
                       const Eigen::MatrixXd& rho_xy, const Eigen::MatrixXd& rho_yy,
                       const Eigen::MatrixXd& perturbation, bool circular);

struct AssimilationDiagnostics {
  double time = 0.0;
  double innovation_u = 0.0;
  double innovation_phi = 0.0;
  double spread_u = 0.0;
  double spread_phi = 0.0;
  double gain_u = 0.0;
  double gain_phi = 0.0;
  int nodes = 0;

  std::string to_json() const;
};

/// Corrects every ensemble in place and refreshes turbine states.
AssimilationDiagnostics assimilate(std::vector<FarmState>& ensembles, const MeasurementFrame& frame,
                                   const FlowModel& model, const EnkfConfig& cfg,
                                   std::mt19937_64& rng);

/// Positions of ensemble 0 with flow states averaged across ensembles.
FarmState ensemble_mean_state(const std::vector<FarmState>& ensembles, const FlowModel& model);

}  // namespace wfc
