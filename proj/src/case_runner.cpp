#include "wfc/case_runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "wfc/angles.hpp"
#include "wfc/empc.hpp"
#include "wfc/enkf.hpp"
#include "wfc/errors.hpp"
#include "wfc/plant.hpp"
#include "wfc/seed.hpp"

namespace wfc {

namespace {

enum class Kind { kClosedLoop, kReference };

struct ControllerSpec {
  Kind kind = Kind::kReference;
  CostKind cost = CostKind::kShifted;
  double horizon = 0.0;  // s, energy cost
  double limit = 2.0;    // deg, dead-band threshold
  bool steering = false;
};

ControllerSpec parse_controller(const std::string& name) {
  ControllerSpec s;
  if (name == "baseline") return s;
  if (name == "lut-2" || name == "lut-4") {
    s.limit = name == "lut-2" ? 2.0 : 4.0;
    s.steering = true;
    return s;
  }
  s.kind = Kind::kClosedLoop;
  if (name == "clc-shifted") return s;
  if (name == "clc-energy-500" || name == "clc-energy-1000") {
    s.cost = CostKind::kEnergy;
    s.horizon = name == "clc-energy-500" ? 500.0 : 1000.0;
    return s;
  }
  throw ConfigError("controller", "unknown controller \"" + name + "\"");
}

// Compact deterministic number formatting for text outputs.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double limited(double current, double target, double max_step) {
  const double d = wrap180(target - current);
  return wrap360(current + std::clamp(d, -max_step, max_step));
}

// Dead-band filtered heading per turbine, fed at the mode's sampling rate.
class ReferenceController {
 public:
  ReferenceController(int n, double limit, double k_i, double phi0) : bands_(n) {
    for (auto& b : bands_) {
      b.phi_hat = wrap360(phi0);
      b.limit = limit;
      b.k_i = k_i;
    }
  }

  void observe(const std::vector<double>& phi, double interval, long k) {
    for (std::size_t i = 0; i < bands_.size(); ++i) deadband_update(bands_[i], phi[i], interval, k);
  }

  double heading(int i) const { return bands_[i].phi_hat; }

  void retune(double limit) {
    for (auto& b : bands_) {
      b.limit = limit;
      b.integral = 0.0;
    }
  }

 private:
  std::vector<DeadBandState> bands_;
};

}  // namespace

LookupTable case_lut(const CaseConfig& cfg, LutGenerationReport* report) {
  if (!cfg.reference.lut_file.empty()) {
    std::ifstream in(cfg.reference.lut_file);
    if (!in) throw ConfigError("reference.lut_file", "cannot open " + cfg.reference.lut_file);
    LookupTable t = read_lut(in);
    if (t.turbines() != static_cast<int>(cfg.layout.size())) {
      throw ConfigError("reference.lut_file", "turbine count differs from the layout");
    }
    return t;
  }
  const double step = cfg.reference.lut_step;
  const int count = static_cast<int>(std::lround(360.0 / step));
  return generate_lut(cfg.model, cfg.layout, 0.0, step, count, true, cfg.reference.lut, report);
}

std::string run_directory(const CaseConfig& cfg, const RunOptions& o) {
  CaseConfig c = cfg;
  if (o.duration) c.duration = *o.duration;
  if (o.disturbed) c.disturbed = *o.disturbed;
  return (std::filesystem::path(o.output_root) /
          (case_config_hash(c) + "-" + std::to_string(o.seed)) / o.controller)
      .string();
}

RunResult run_case(const CaseConfig& cfg_in, const RunOptions& o) {
  CaseConfig cfg = cfg_in;
  if (o.duration) cfg.duration = *o.duration;
  if (o.disturbed) cfg.disturbed = *o.disturbed;
  const ControllerSpec spec = parse_controller(o.controller);
  const FlowModel& model = cfg.model;
  const double dt = model.sim.dt;
  const int n = static_cast<int>(cfg.layout.size());
  const double rate = cfg.mpc.rate;
  const double max_step = rate * dt;

  MpcConfig mpc = cfg.mpc;
  mpc.cost = spec.cost;
  if (spec.cost == CostKind::kEnergy) {
    mpc.tau_ph = static_cast<int>(std::lround(spec.horizon / dt));
  }
  mpc.validate();
  cfg.enkf.validate();

  const int mode = spec.kind == Kind::kClosedLoop ? (cfg.disturbed ? 2 : 1)
                                                  : (cfg.disturbed ? 4 : 3);
  const long interval_steps = std::lround(mode_interval(mode) / dt);
  const long spin_steps = std::lround(cfg.spinup / dt);
  const long run_steps = std::lround(cfg.duration / dt);

  LookupTable lut = LookupTable::zeros(n);
  if (spec.steering) lut = o.lut ? *o.lut : case_lut(cfg);

  const DirectionSeries wind = build_wind(cfg, o.seed);
  Plant plant(cfg.plant_config(mix_seed(o.seed, 1)), cfg.layout, wind);

  // Output sinks.
  RunResult r;
  r.controller = o.controller;
  std::unique_ptr<std::ofstream> meas_log, opt_log, enkf_log;
  if (!o.output_root.empty()) {
    r.directory = run_directory(cfg, o);
    std::filesystem::create_directories(r.directory);
    std::ofstream(r.directory + "/config.json") << case_config_echo(cfg);
    meas_log = std::make_unique<std::ofstream>(r.directory + "/measurements.csv");
    opt_log = std::make_unique<std::ofstream>(r.directory + "/optimizer.jsonl");
    enkf_log = std::make_unique<std::ofstream>(r.directory + "/assimilation.jsonl");
    write_measurement_header(*meas_log);
  }

  // Estimator ensembles start from the first noise-free reading; they only
  // see the plant through measurements afterwards.
  std::vector<FarmState> ensembles;
  std::mt19937_64 enkf_rng(mix_seed(o.seed, 2));
  if (spec.kind == Kind::kClosedLoop) {
    const FarmState proto =
        make_farm_state(model, cfg.layout, model.sim.u_inf, wind.at(0.0), nullptr);
    ensembles.assign(cfg.enkf.n_e, proto);
  }

  // Spin-up: greedy tracking of the noise-free direction, identical for all
  // controllers.
  ReferenceController greedy(n, 2.0, cfg.reference.k_i, wind.at(0.0));
  std::vector<double> orient(n);
  for (int i = 0; i < n; ++i) orient[i] = plant.state().turbines[i].orientation;

  ReferenceController ref(n, spec.limit, cfg.reference.k_i, wind.at(0.0));
  std::vector<std::vector<double>> plans;
  long plan_start = 0;

  r.time.reserve(run_steps);
  r.power.resize(n, run_steps);
  r.orientation.resize(n, run_steps);
  r.yaw.resize(n, run_steps);
  r.phi.resize(n, run_steps);
  if (spec.kind == Kind::kClosedLoop) {
    r.estimate.resize(n, run_steps);
    r.spread.resize(n, run_steps);
  }

  const long total = spin_steps + run_steps;
  for (long k = 0; k < total; ++k) {
    const bool spinning = k < spin_steps;
    const long rk = k - spin_steps;  // step index within the recorded run

    // Set points for the step k -> k + 1.
    std::vector<double> next(n);
    if (spinning) {
      for (int i = 0; i < n; ++i) next[i] = lut_yaw_step(orient[i], greedy.heading(i), 0.0, rate, dt);
    } else if (spec.kind == Kind::kReference) {
      for (int i = 0; i < n; ++i) {
        const double h = ref.heading(i);
        next[i] = lut_yaw_step(orient[i], h, lut.misalignment(h, i), rate, dt);
      }
    } else {
      if (rk % mpc.k_mpc == 0) {
        const FarmState mean = ensemble_mean_state(ensembles, model);
        ControlOutput out = control_step(mean, model, mpc, mix_seed(o.seed, 1000 + rk));
        plans = std::move(out.plans);
        plan_start = rk;
        ++r.optimizations;
        if (opt_log) {
          for (auto& t : out.traces) {
            t.time = rk * dt;
            *opt_log << t.to_json() << '\n';
          }
        }
      }
      const long j = rk - plan_start;
      for (int i = 0; i < n; ++i) {
        const double target = j < static_cast<long>(plans[i].size()) ? plans[i][j] : orient[i];
        next[i] = limited(orient[i], target, max_step);
      }
    }

    for (int i = 0; i < n; ++i) {
      const double d = std::abs(wrap180(next[i] - orient[i]));
      if (!spinning) {
        r.max_orientation_step = std::max(r.max_orientation_step, d);
        if (d > max_step + 1e-9) ++r.rate_violations;
      }
    }
    orient = next;
    plant.step(orient);
    for (auto& e : ensembles) step(e, model, orient);

    const long kk = k + 1;  // plant step count after this step
    // Greedy spin-up readings and the controller's own readings.
    if (spinning) {
      if (kk % std::lround(mode_interval(3) / dt) == 0) {
        greedy.observe(plant.measure(3).phi(), mode_interval(3), kk);
      }
    }
    if (kk % interval_steps == 0) {
      const MeasurementFrame frame = plant.measure(mode);
      if (meas_log && !spinning) write_measurement(*meas_log, frame, cfg.layout);
      if (spec.kind == Kind::kReference) {
        ref.observe(frame.phi(), mode_interval(mode), kk);
      } else {
        AssimilationDiagnostics d = assimilate(ensembles, frame, model, cfg.enkf, enkf_rng);
        if (!spinning) {
          ++r.assimilations;
          if (enkf_log) {
            d.time = (kk - spin_steps) * dt;
            *enkf_log << d.to_json() << '\n';
          }
        }
      }
    }
    if (kk == spin_steps && spec.kind == Kind::kReference) {
      // Hand over with the spin-up's filtered heading.
      ref = greedy;
      ref.retune(spec.limit);
    }

    if (!spinning) {
      const FarmState& s = plant.state();
      r.time.push_back((kk - spin_steps) * dt);
      for (int i = 0; i < n; ++i) {
        r.power(i, rk) = s.turbines[i].power;
        r.orientation(i, rk) = s.turbines[i].orientation;
        r.yaw(i, rk) = s.turbines[i].yaw;
        r.phi(i, rk) = s.turbines[i].phi_bg;
      }
      if (spec.kind == Kind::kClosedLoop) {
        const double ne = static_cast<double>(ensembles.size());
        for (int i = 0; i < n; ++i) {
          double m = 0.0, q = 0.0;
          for (const auto& e : ensembles) m += e.turbines[i].power;
          m /= ne;
          for (const auto& e : ensembles) q += std::pow(e.turbines[i].power - m, 2);
          r.estimate(i, rk) = m;
          r.spread(i, rk) = std::sqrt(q / (ne - 1.0));
        }
      }
    }
  }

  const int window = static_cast<int>(std::lround(600.0 / dt));
  r.metrics = run_metrics(r.power, r.orientation, dt, o.baseline_power, window);

  if (!r.directory.empty()) {
    std::ofstream trace(r.directory + "/trace.csv");
    write_trace(trace, r, cfg.layout);
    std::ofstream(r.directory + "/metrics.json") << metrics_json(r.metrics);
    std::ofstream plot(r.directory + "/plot.csv");
    plot << "time,turbine,metric,value\n";
    for (std::size_t k = 0; k < r.time.size(); ++k) {
      for (int i = 0; i < n; ++i) {
        const std::string p = num(r.time[k]) + "," + std::to_string(cfg.layout[i].id) + ",";
        plot << p << "power," << num(r.power(i, k)) << '\n';
        plot << p << "yaw," << num(r.yaw(i, k)) << '\n';
        plot << p << "orientation," << num(r.orientation(i, k)) << '\n';
        plot << p << "phi," << num(r.phi(i, k)) << '\n';
      }
    }
    for (Eigen::Index k = 0; k < r.metrics.windowed_energy.size(); ++k) {
      const double t = r.time[k + window - 1];
      plot << num(t) << ",farm,energy_600s," << num(r.metrics.windowed_energy(k)) << '\n';
      if (r.metrics.has_baseline) {
        plot << num(t) << ",farm,efficiency," << num(r.metrics.efficiency(k)) << '\n';
      }
    }
    if (spec.kind == Kind::kClosedLoop) {
      std::ofstream est(r.directory + "/estimate.csv");
      est << "time";
      for (const auto& s : cfg.layout) est << ",power_" << s.id << ",spread_" << s.id;
      est << '\n';
      for (std::size_t k = 0; k < r.time.size(); ++k) {
        est << num(r.time[k]);
        for (int i = 0; i < n; ++i) est << ',' << num(r.estimate(i, k)) << ',' << num(r.spread(i, k));
        est << '\n';
      }
    }
  }
  return r;
}

void write_trace(std::ostream& os, const RunResult& r, const std::vector<TurbineSite>& sites) {
  os << "time";
  for (const auto& s : sites) {
    os << ",power_" << s.id << ",yaw_" << s.id << ",orientation_" << s.id << ",phi_" << s.id;
  }
  os << '\n';
  for (std::size_t k = 0; k < r.time.size(); ++k) {
    os << num(r.time[k]);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      os << ',' << num(r.power(i, k)) << ',' << num(r.yaw(i, k)) << ',' << num(r.orientation(i, k))
         << ',' << num(r.phi(i, k));
    }
    os << '\n';
  }
}

PowerTrace read_power_trace(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty trace file");
  std::vector<std::string> cols;
  {
    std::istringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  std::vector<int> pcol, scol, ycol;
  for (int c = 0; c < static_cast<int>(cols.size()); ++c) {
    if (cols[c].rfind("power_", 0) == 0) pcol.push_back(c);
    if (cols[c].rfind("spread_", 0) == 0) scol.push_back(c);
    if (cols[c].rfind("orientation_", 0) == 0) ycol.push_back(c);
  }
  if (pcol.empty()) throw DataError("trace has no power columns");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) v.push_back(std::stod(c));
    if (v.size() != cols.size()) throw DataError("trace row has the wrong number of fields");
    rows.push_back(std::move(v));
  }
  PowerTrace t;
  const auto m = static_cast<Eigen::Index>(rows.size());
  t.power.resize(static_cast<Eigen::Index>(pcol.size()), m);
  if (scol.size() == pcol.size()) t.spread.resize(t.power.rows(), m);
  if (ycol.size() == pcol.size()) t.yaw.resize(t.power.rows(), m);
  for (Eigen::Index k = 0; k < m; ++k) {
    t.time.push_back(rows[k][0]);
    for (std::size_t i = 0; i < pcol.size(); ++i) {
      t.power(i, k) = rows[k][pcol[i]];
      if (t.spread.size()) t.spread(i, k) = rows[k][scol[i]];
      if (t.yaw.size()) t.yaw(i, k) = rows[k][ycol[i]];
    }
  }
  return t;
}

std::string metrics_json(const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["farm_energy"] = m.farm_energy;
  j["turbine_energy"] = m.turbine_energy;
  j["yaw_travel"] = m.yaw_travel;
  j["windowed_energy_count"] = m.windowed_energy.size();
  if (m.has_baseline) {
    j["efficiency"] = {{"q1", m.efficiency_quartiles.q1},
                       {"median", m.efficiency_quartiles.median},
                       {"q3", m.efficiency_quartiles.q3}};
  }
  return j.dump(2) + "\n";
}

}  // namespace wfc
