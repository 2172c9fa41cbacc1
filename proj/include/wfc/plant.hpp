#pragma once

// Synthetic "true" farm: a dynamic wake model with its own parameters,
// driven by a prepared wind-direction series and Ornstein-Uhlenbeck
// turbulence, plus the measurement modes seen by the controllers.

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "wfc/floridyn.hpp"
#include "wfc/measurement.hpp"

namespace wfc {

struct DirectionSeries {
  std::vector<double> time;       // s, uniform
  std::vector<double> direction;  // deg, wrapped to [0, 360)
  std::string metadata;

  /// Circular linear interpolation, clamped at the ends.
  double at(double t) const;
};

/// Two-column text (seconds, degrees); lines starting with '#' are metadata.
DirectionSeries read_direction_series(std::istream& is);
void write_direction_series(std::ostream& os, const DirectionSeries& series);

/// Second-order Butterworth low-pass coefficients (bilinear transform with
/// pre-warping). Returns {b0, b1, b2, a1, a2} with a0 = 1.
std::array<double, 5> butterworth2(double cutoff_hz, double sample_hz);

/// Zero-phase forward-backward filtering with odd extension at both ends.
std::vector<double> filtfilt(const std::array<double, 5>& coeffs, const std::vector<double>& x);

/// Unwraps, resamples onto a uniform grid, low-pass filters with zero phase
/// and re-wraps an irregular direction record.
DirectionSeries prepare_direction_series(const std::vector<double>& time,
                                         const std::vector<double>& direction,
                                         double spacing = 20.0, double cutoff_hz = 1.0 / 600.0,
                                         double max_gap = 120.0);

struct PlantConfig {
  FlowModel model;
  double u_inf = 8.0;
  double sigma_u = 0.3;     // m/s, stationary OU standard deviation
  double sigma_phi = 2.0;   // deg, probe direction OU standard deviation
  double tau_ou = 60.0;     // s
  double waked_noise_gain = 6.0;  // probe noise amplification per unit deficit
  double bias_gain = 20.0;        // deg per unit lateral deficit difference
  std::uint64_t seed = 1;

  void validate() const;
};

/// Instantaneous readings of one plant step.
struct PlantSample {
  double time = 0.0;
  std::vector<double> power;           // W
  std::vector<double> phi_probe;       // deg
  std::vector<double> phi_noise_free;  // deg
  std::vector<double> deficit;         // rotor velocity-reduction fraction
};

/// Exact discretisation of dx = -x / tau dt + sigma sqrt(2 / tau) dW.
class OrnsteinUhlenbeck {
 public:
  OrnsteinUhlenbeck(double sigma, double tau) : sigma_(sigma), tau_(tau) {}
  double step(double dt, std::mt19937_64& rng);
  double value() const { return x_; }

 private:
  double sigma_;
  double tau_;
  double x_ = 0.0;
};

class Plant {
 public:
  Plant(PlantConfig cfg, std::vector<TurbineSite> sites, DirectionSeries wind,
        const std::vector<double>* orientations = nullptr);

  /// Advances one step with rate-feasible orientation set points.
  void step(const std::vector<double>& orientations);

  const FarmState& state() const { return state_; }
  const PlantSample& sample() const { return sample_; }
  double time() const { return state_.time; }
  double wind_direction(double t) const { return wind_.at(t); }

  /// Frame for the given mode from the samples of the last averaging window.
  MeasurementFrame measure(int mode) const;

 private:
  void record();

  PlantConfig cfg_;
  DirectionSeries wind_;
  FarmState state_;
  std::mt19937_64 rng_;
  std::vector<OrnsteinUhlenbeck> ou_u_, ou_phi_;
  PlantSample sample_;
  std::deque<PlantSample> history_;
};

/// CSV header for measurement logs.
void write_measurement_header(std::ostream& os);
void write_measurement(std::ostream& os, const MeasurementFrame& frame,
                       const std::vector<TurbineSite>& sites);

}  // namespace wfc
