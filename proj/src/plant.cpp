#include "wfc/plant.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "wfc/angles.hpp"
#include "wfc/errors.hpp"

namespace wfc {

double DirectionSeries::at(double t) const {
  if (time.empty()) throw DataError("empty direction series");
  if (time.size() == 1 || t <= time.front()) return direction.front();
  if (t >= time.back()) return direction.back();
  const double dt = time[1] - time[0];
  const auto i = std::min(static_cast<std::size_t>((t - time.front()) / dt), time.size() - 2);
  const double f = (t - time[i]) / (time[i + 1] - time[i]);
  return wrap360(direction[i] + f * wrap180(direction[i + 1] - direction[i]));
}

DirectionSeries read_direction_series(std::istream& is) {
  DirectionSeries s;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      s.metadata += line.substr(1);
      s.metadata += '\n';
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double t, d;
    if (!(ss >> t >> d)) throw DataError("malformed direction record: " + line);
    s.time.push_back(t);
    s.direction.push_back(wrap360(d));
  }
  if (s.time.empty()) throw DataError("direction series has no records");
  return s;
}

void write_direction_series(std::ostream& os, const DirectionSeries& s) {
  std::istringstream meta(s.metadata);
  std::string line;
  while (std::getline(meta, line)) os << '#' << line << '\n';
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < s.time.size(); ++i) os << s.time[i] << ' ' << s.direction[i] << '\n';
  os.precision(old);
}

std::array<double, 5> butterworth2(double cutoff_hz, double sample_hz) {
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_hz);
  const double norm = 1.0 + std::numbers::sqrt2 * k + k * k;
  const double b0 = k * k / norm;
  return {b0, 2.0 * b0, b0, 2.0 * (k * k - 1.0) / norm,
          (1.0 - std::numbers::sqrt2 * k + k * k) / norm};
}

namespace {

std::vector<double> lfilter(const std::array<double, 5>& c, const std::vector<double>& x,
                            double x0) {
  const auto [b0, b1, b2, a1, a2] = c;
  // Steady-state initial conditions for a constant input x0.
  double z0 = (b1 + b2 - a1 - a2) * x0;
  double z1 = (b2 - a2) * x0;
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    y[n] = b0 * x[n] + z0;
    z0 = b1 * x[n] + z1 - a1 * y[n];
    z1 = b2 * x[n] - a2 * y[n];
  }
  return y;
}

}  // namespace

std::vector<double> filtfilt(const std::array<double, 5>& coeffs, const std::vector<double>& x) {
  constexpr int kPad = 6;
  const int n = static_cast<int>(x.size());
  if (n <= kPad) throw DataError("series too short for zero-phase filtering");
  std::vector<double> ext;
  ext.reserve(n + 2 * kPad);
  for (int i = kPad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (int i = n - 2; i >= n - 1 - kPad; --i) ext.push_back(2.0 * x[n - 1] - x[i]);

  std::vector<double> y = lfilter(coeffs, ext, ext.front());
  std::reverse(y.begin(), y.end());
  y = lfilter(coeffs, y, y.front());
  std::reverse(y.begin(), y.end());
  return {y.begin() + kPad, y.begin() + kPad + n};
}

DirectionSeries prepare_direction_series(const std::vector<double>& time,
                                         const std::vector<double>& direction, double spacing,
                                         double cutoff_hz, double max_gap) {
  if (time.size() != direction.size()) throw DataError("time and direction lengths differ");
  if (time.size() < 2) throw DataError("direction record needs at least two samples");
  for (std::size_t i = 1; i < time.size(); ++i) {
    if (!(time[i] > time[i - 1])) throw DataError("direction record times must increase");
    if (time[i] - time[i - 1] > max_gap) {
      throw DataError("gap of " + std::to_string(time[i] - time[i - 1]) + " s at t = " +
                      std::to_string(time[i - 1]));
    }
  }
  std::vector<double> unwrapped(direction.size());
  unwrapped[0] = direction[0];
  for (std::size_t i = 1; i < direction.size(); ++i) {
    unwrapped[i] = unwrapped[i - 1] + wrap180(direction[i] - direction[i - 1]);
  }
  DirectionSeries out;
  const int count = static_cast<int>(std::floor((time.back() - time.front()) / spacing + 1e-9)) + 1;
  std::vector<double> grid(count);
  std::size_t j = 0;
  for (int k = 0; k < count; ++k) {
    const double t = time.front() + k * spacing;
    while (j + 2 < time.size() && time[j + 1] < t) ++j;
    const double f = std::clamp((t - time[j]) / (time[j + 1] - time[j]), 0.0, 1.0);
    out.time.push_back(t);
    grid[k] = unwrapped[j] + f * (unwrapped[j + 1] - unwrapped[j]);
  }
  const auto filtered = filtfilt(butterworth2(cutoff_hz, 1.0 / spacing), grid);
  out.direction.resize(count);
  for (int k = 0; k < count; ++k) out.direction[k] = wrap360(filtered[k]);
  return out;
}

void PlantConfig::validate() const {
  if (sigma_u < 0.0 || sigma_phi < 0.0) throw ConfigError("plant.sigma", "must be nonnegative");
  if (!(tau_ou > 0.0)) throw ConfigError("plant.tau_ou", "must be positive");
  if (!(u_inf > 0.0)) throw ConfigError("plant.u_inf", "must be positive");
  model.weights.validate();
  model.sim.validate();
}

double OrnsteinUhlenbeck::step(double dt, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a = std::exp(-dt / tau_);
  x_ = a * x_ + sigma_ * std::sqrt(1.0 - a * a) * normal(rng);
  return x_;
}

Plant::Plant(PlantConfig cfg, std::vector<TurbineSite> sites, DirectionSeries wind,
             const std::vector<double>* orientations)
    : cfg_(std::move(cfg)), wind_(std::move(wind)), rng_(cfg_.seed) {
  cfg_.validate();
  state_ = make_farm_state(cfg_.model, std::move(sites), cfg_.u_inf, wind_.at(0.0), orientations);
  for (int i = 0; i < state_.size(); ++i) {
    ou_u_.emplace_back(cfg_.sigma_u, cfg_.tau_ou);
    ou_phi_.emplace_back(cfg_.sigma_phi, cfg_.tau_ou);
  }
  record();
}

void Plant::step(const std::vector<double>& orientations) {
  const int n = state_.size();
  const double dt = cfg_.model.sim.dt;
  const double phi = wind_.at(state_.time + dt);
  Forcing f;
  f.uniform_phi = phi;
  f.u_bg.resize(n);
  f.phi_bg.assign(n, phi);
  for (int i = 0; i < n; ++i) f.u_bg[i] = std::max(0.0, cfg_.u_inf + ou_u_[i].step(dt, rng_));
  wfc::step(state_, cfg_.model, orientations, &f, Propagation::kKernel);
  for (auto& ou : ou_phi_) ou.step(dt, rng_);
  record();
}

void Plant::record() {
  const int n = state_.size();
  const FlowModel& m = cfg_.model;
  PlantSample s;
  s.time = state_.time;
  s.power.resize(n);
  s.phi_probe.resize(n);
  s.phi_noise_free.resize(n);
  s.deficit.resize(n);
  const double offset = 0.25 * m.turbine.diameter;
  for (int i = 0; i < n; ++i) {
    const TurbineState& t = state_.turbines[i];
    s.power[i] = t.power;
    s.phi_noise_free[i] = wind_.at(state_.time);
    const double free = sheared_rotor_average(ShearProfile{m.shear_exponent, m.turbine.hub_height,
                                                           m.turbine.hub_height},
                                              m.turbine, t.u_bg);
    s.deficit[i] = free > 0.0 ? std::clamp(1.0 - t.u_eff / free, 0.0, 1.0) : 0.0;
    const double r = deg2rad(t.phi_bg);
    const Vec2 left{state_.sites[i].x - offset * std::sin(r), state_.sites[i].y + offset * std::cos(r)};
    const Vec2 right{state_.sites[i].x + offset * std::sin(r), state_.sites[i].y - offset * std::cos(r)};
    const double bias = cfg_.bias_gain * (point_deficit(state_, m, left, i) -
                                          point_deficit(state_, m, right, i));
    s.phi_probe[i] = wrap360(t.phi_bg + (1.0 + cfg_.waked_noise_gain * s.deficit[i]) *
                                            ou_phi_[i].value() + bias);
  }
  sample_ = s;
  history_.push_back(std::move(s));
  while (history_.size() > 1 && history_.front().time <= state_.time - 60.0 + 1e-9) {
    history_.pop_front();
  }
}

MeasurementFrame Plant::measure(int mode) const {
  MeasurementFrame f;
  f.time = state_.time;
  f.mode = mode;
  f.window = mode_window(mode);
  f.power = sample_.power;
  f.phi_noise_free = sample_.phi_noise_free;
  f.u_inf = (mode == 3 || mode == 4) ? cfg_.u_inf : 0.0;
  const int n = state_.size();
  if (f.window > 0.0) {
    f.phi_probe.resize(n);
    for (int i = 0; i < n; ++i) {
      CircularMean mean;
      for (const auto& h : history_) {
        if (h.time > state_.time - f.window + 1e-9) mean.add(h.phi_probe[i]);
      }
      f.phi_probe[i] = mean.mean();
    }
  } else {
    f.phi_probe = sample_.phi_probe;
  }
  return f;
}

void write_measurement_header(std::ostream& os) {
  os << "time,turbine,power,phi_probe,phi_noise_free,mode\n";
}

void write_measurement(std::ostream& os, const MeasurementFrame& frame,
                       const std::vector<TurbineSite>& sites) {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    os << frame.time << ',' << sites[i].id << ',' << frame.power[i] << ',' << frame.phi_probe[i]
       << ',' << frame.phi_noise_free[i] << ',' << frame.mode << '\n';
  }
}

}  // namespace wfc
