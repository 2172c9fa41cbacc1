#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "wfc/angles.hpp"
#include "wfc/errors.hpp"
#include "wfc/plant.hpp"

namespace {

constexpr double kD = 178.4;

wfc::DirectionSeries constant_wind(double phi, double duration = 4 * 3600.0) {
  wfc::DirectionSeries s;
  for (double t = 0.0; t <= duration; t += 20.0) {
    s.time.push_back(t);
    s.direction.push_back(phi);
  }
  return s;
}

wfc::PlantConfig quiet(int n_op = 40) {
  wfc::PlantConfig c;
  c.model.sim.n_op = n_op;
  c.sigma_u = 0.0;
  c.sigma_phi = 0.0;
  c.bias_gain = 0.0;
  return c;
}

double variance(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double v = 0.0;
  for (double a : x) v += (a - m) * (a - m);
  return v / (x.size() - 1);
}

}  // namespace

TEST(Butterworth, ConstantPassesUnchanged) {
  const auto c = wfc::butterworth2(1.0 / 600.0, 1.0 / 20.0);
  const auto y = wfc::filtfilt(c, std::vector<double>(200, 271.5));
  for (double v : y) EXPECT_NEAR(v, 271.5, 1e-9);
}

TEST(Butterworth, SinusoidAttenuatedBySquaredMagnitude) {
  // Analogue prototype after pre-warping: |H|^2 = 1 / (1 + (W / Wc)^4).
  for (double cutoff : {1.0 / 600.0, 1.0 / 300.0}) {
    const double fs = 1.0 / 20.0, period = 200.0;
    const double w = std::tan(M_PI / (period * fs)), wc = std::tan(M_PI * cutoff / fs);
    const double h2 = 1.0 / (1.0 + std::pow(w / wc, 4));
    std::vector<double> x(4000);
    for (int k = 0; k < 4000; ++k) x[k] = std::sin(2.0 * M_PI * k * 20.0 / period);
    const auto y = wfc::filtfilt(wfc::butterworth2(cutoff, fs), x);
    // Amplitude by projection on whole periods away from the ends.
    double a = 0.0, b = 0.0;
    for (int k = 1800; k < 2200; ++k) {
      const double ph = 2.0 * M_PI * k * 20.0 / period;
      a += y[k] * std::sin(ph) / 200.0;
      b += y[k] * std::cos(ph) / 200.0;
    }
    const double amp = std::hypot(a, b);
    EXPECT_NEAR(amp / h2, 1.0, 0.02) << cutoff;
  }
}

TEST(Butterworth, ZeroPhaseOnSymmetricPulse) {
  std::vector<double> x(301, 0.0);
  for (int k = 140; k <= 160; ++k) x[k] = 1.0;
  const auto y = wfc::filtfilt(wfc::butterworth2(1.0 / 600.0, 1.0 / 20.0), x);
  const auto peak = std::max_element(y.begin(), y.end()) - y.begin();
  EXPECT_LE(std::abs(peak - 150), 1);
  for (int d = 1; d < 100; ++d) EXPECT_NEAR(y[150 - d], y[150 + d], 1e-9);
}

TEST(PrepareWind, ResamplesThroughWrap) {
  std::vector<double> t, d;
  for (int k = 0; k <= 300; ++k) {
    t.push_back(k * 7.0);
    d.push_back(wfc::wrap360(350.0 + 0.01 * k * 7.0));
  }
  const auto s = wfc::prepare_direction_series(t, d, 20.0);
  for (std::size_t k = 1; k < s.time.size(); ++k) {
    EXPECT_NEAR(s.time[k] - s.time[k - 1], 20.0, 1e-12);
    EXPECT_LT(std::abs(wfc::wrap180(s.direction[k] - s.direction[k - 1])), 1.0);
  }
  EXPECT_NEAR(wfc::wrap180(s.at(1000.0) - 0.0), 0.0, 0.1);
}

TEST(PrepareWind, LongGapIsRejected) {
  EXPECT_THROW(wfc::prepare_direction_series({0, 10, 20, 500, 510}, {1, 1, 1, 1, 1}, 20.0),
               wfc::DataError);
  EXPECT_THROW(wfc::prepare_direction_series({0, 10, 10}, {1, 1, 1}), wfc::DataError);
}

TEST(DirectionSeries, TextRoundTrip) {
  wfc::DirectionSeries s = constant_wind(12.25, 200.0);
  s.metadata = "# site A\n";
  std::stringstream ss;
  wfc::write_direction_series(ss, s);
  const auto back = wfc::read_direction_series(ss);
  EXPECT_EQ(back.time, s.time);
  EXPECT_EQ(back.direction, s.direction);
  EXPECT_NE(back.metadata.find("site A"), std::string::npos);
}

TEST(DirectionSeries, InterpolatesAcrossWrap) {
  wfc::DirectionSeries s;
  s.time = {0.0, 10.0};
  s.direction = {358.0, 2.0};
  EXPECT_NEAR(wfc::wrap180(s.at(5.0)), 0.0, 1e-12);
  EXPECT_NEAR(s.at(-5.0), 358.0, 1e-12);
}

TEST(Ou, StationaryVarianceOfExactDiscretisation) {
  std::mt19937_64 rng(1);
  wfc::OrnsteinUhlenbeck ou(2.0, 60.0);
  std::vector<double> x;
  for (int k = 0; k < 200000; ++k) x.push_back(ou.step(5.0, rng));
  EXPECT_NEAR(variance(x), 4.0, 0.15 * 4.0);
}

TEST(Plant, TwinIdentityWithoutNoise) {
  const std::vector<wfc::TurbineSite> sites{{0, 0, 0}, {1, 5 * kD, 0.3 * kD}};
  auto cfg = quiet(60);
  wfc::Plant plant(cfg, sites, constant_wind(0.0));
  auto model = wfc::make_farm_state(cfg.model, sites, 8.0, 0.0);
  for (int k = 0; k < 120; ++k) {
    const std::vector<double> o{k < 60 ? -0.3 * (k % 30) : 0.0, 0.0};
    plant.step(o);
    wfc::step(model, cfg.model, o);
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(plant.sample().power[i], model.turbines[i].power,
                  1e-9 * model.turbines[i].power);
    }
  }
}

TEST(Plant, SeededReplayIsBitIdentical) {
  wfc::PlantConfig cfg;
  cfg.model.sim.n_op = 40;
  const std::vector<wfc::TurbineSite> sites{{0, 0, 0}, {1, 5 * kD, 0}};
  wfc::Plant a(cfg, sites, constant_wind(10.0)), b(cfg, sites, constant_wind(10.0));
  for (int k = 0; k < 60; ++k) {
    a.step({10.0, 10.0});
    b.step({10.0, 10.0});
    EXPECT_EQ(a.sample().power, b.sample().power);
    EXPECT_EQ(a.sample().phi_probe, b.sample().phi_probe);
  }
}

TEST(Plant, UnwakedProbeVarianceMatchesOu) {
  // Eight rotors far apart crosswind: independent unwaked probes, pooled.
  wfc::PlantConfig cfg;
  cfg.model.sim.n_op = 10;
  cfg.sigma_u = 0.0;
  cfg.sigma_phi = 2.0;
  std::vector<wfc::TurbineSite> sites;
  for (int i = 0; i < 8; ++i) sites.push_back({i, 0.0, 30.0 * kD * i});
  wfc::Plant plant(cfg, sites, constant_wind(0.0));
  const std::vector<double> o(8, 0.0);
  std::vector<std::vector<double>> probe(8);
  for (int k = 0; k < 3 * 720; ++k) {
    plant.step(o);
    if (k < 60) continue;
    for (int i = 0; i < 8; ++i) probe[i].push_back(wfc::wrap180(plant.sample().phi_probe[i]));
  }
  double v = 0.0;
  for (const auto& p : probe) v += variance(p) / 8.0;
  EXPECT_NEAR(v, 4.0, 0.15 * 4.0);
}

TEST(Plant, WakedProbeIsNoisierThanUnwaked) {
  wfc::PlantConfig cfg;
  cfg.model.sim.n_op = 60;
  cfg.sigma_u = 0.0;
  const std::vector<wfc::TurbineSite> sites{{0, 0, 0}, {1, 5 * kD, 0}};
  wfc::Plant plant(cfg, sites, constant_wind(0.0));
  std::vector<double> up, down;
  for (int k = 0; k < 360; ++k) {
    plant.step({0.0, 0.0});
    if (k < 60) continue;
    up.push_back(wfc::wrap180(plant.sample().phi_probe[0]));
    down.push_back(wfc::wrap180(plant.sample().phi_probe[1]));
  }
  EXPECT_GT(variance(down), variance(up));
}

TEST(Plant, NoiseFreeModeReturnsSeriesSample) {
  wfc::DirectionSeries w;
  for (int k = 0; k <= 100; ++k) {
    w.time.push_back(20.0 * k);
    w.direction.push_back(wfc::wrap360(350.0 + 0.3 * k));
  }
  wfc::PlantConfig cfg;
  cfg.model.sim.n_op = 20;
  wfc::Plant plant(cfg, {{0, 0, 0}}, w);
  for (int k = 0; k < 50; ++k) {
    plant.step({0.0});
    const auto f = plant.measure(1);
    EXPECT_EQ(f.phi()[0], w.at(plant.time()));
    EXPECT_TRUE(f.has_power());
  }
}

TEST(Plant, AveragedModeOnConstantWind) {
  auto cfg = quiet(20);
  wfc::Plant plant(cfg, {{0, 0, 0}}, constant_wind(42.0));
  for (int k = 0; k < 30; ++k) plant.step({42.0});
  const auto f = plant.measure(4);
  EXPECT_EQ(f.window, 60.0);
  EXPECT_NEAR(f.phi()[0], 42.0, 1e-9);
  EXPECT_FALSE(f.has_power());
  EXPECT_EQ(f.u_inf, 8.0);
}

TEST(Measurement, ModeCadence) {
  EXPECT_EQ(wfc::mode_interval(1), 15.0);
  EXPECT_EQ(wfc::mode_interval(2), 15.0);
  EXPECT_EQ(wfc::mode_interval(3), 5.0);
  EXPECT_EQ(wfc::mode_interval(4), 60.0);
  EXPECT_EQ(wfc::mode_window(2), 60.0);
  EXPECT_EQ(wfc::mode_window(3), 0.0);
  EXPECT_THROW(wfc::mode_interval(5), wfc::ConfigError);
}

TEST(Measurement, LogFormat) {
  wfc::MeasurementFrame f;
  f.time = 15.0;
  f.mode = 2;
  f.power = {1e6};
  f.phi_probe = {10.0};
  f.phi_noise_free = {11.0};
  std::ostringstream os;
  wfc::write_measurement_header(os);
  wfc::write_measurement(os, f, {{7, 0, 0}});
  EXPECT_EQ(os.str(), "time,turbine,power,phi_probe,phi_noise_free,mode\n15,7,1e+06,10,11,2\n");
}
