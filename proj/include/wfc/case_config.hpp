#pragma once

// Case description for closed-loop runs. Every block carries the canonical
// parameter set as defaults, so a config that lists only the layout runs.

#include <cstdint>
#include <string>
#include <vector>

#include "wfc/empc.hpp"
#include "wfc/enkf.hpp"
#include "wfc/floridyn.hpp"
#include "wfc/plant.hpp"
#include "wfc/reference.hpp"

namespace wfc {

/// Driving wind direction. Either a prepared series file or a synthetic
/// record that goes through the same preparation pipeline.
struct WindConfig {
  std::string file;  // resolved against the config directory
  double start = 0.0;        // deg
  double drift = 0.0;        // deg per hour
  double amplitude = 0.0;    // deg, slow sinusoidal swing
  double period = 3600.0;    // s
  double walk = 0.0;         // deg per sqrt(hour), random-walk intensity
  double raw_spacing = 10.0; // s, mean spacing of the synthetic raw record
  std::uint64_t seed = 7;
};

struct ReferenceSettings {
  double k_i = 0.01;       // 1/s
  double lut_step = 1.0;   // deg
  std::string lut_file;    // optional precomputed table
  LutGenerationConfig lut;
};

struct PlantSettings {
  double advection_scale = 0.88;  // plant d relative to the controller's
  double k_a_scale = 1.12;        // plant k_a relative to the controller's
  double sigma_u = 0.3;
  double sigma_phi = 2.0;
  double tau_ou = 60.0;
  double waked_noise_gain = 6.0;
  double bias_gain = 20.0;
};

struct CaseConfig {
  std::string name = "case";
  std::vector<TurbineSite> layout;  // m
  FlowModel model;
  EnkfConfig enkf;
  MpcConfig mpc;
  ReferenceSettings reference;
  PlantSettings plant;
  WindConfig wind;
  double duration = 3600.0;  // s
  double spinup = 600.0;     // s of greedy operation before t = 0
  std::uint64_t seed = 1;
  bool disturbed = false;  // measurement modes 2/4 instead of 1/3
  std::vector<std::string> controllers;

  /// Plant configuration derived from the model and the plant block.
  PlantConfig plant_config(std::uint64_t seed) const;
};

/// The roster in its canonical order.
const std::vector<std::string>& controller_roster();

/// Parses JSON text. Unknown keys and out-of-range values raise ConfigError
/// with the dotted path of the field.
CaseConfig parse_case_config(const std::string& text, const std::string& base_dir = ".");
CaseConfig load_case_config(const std::string& path);

/// Full JSON echo including defaults.
std::string case_config_echo(const CaseConfig& cfg);

/// FNV-1a of the echo, 16 hex digits.
std::string case_config_hash(const CaseConfig& cfg);

/// Direction series driving the plant. Synthetic records draw their walk from
/// the wind seed mixed with the run seed; files ignore the run seed.
DirectionSeries build_wind(const CaseConfig& cfg, std::uint64_t run_seed);

}  // namespace wfc
