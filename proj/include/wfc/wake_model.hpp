#pragma once

// Steady-state Gaussian wake physics evaluated pointwise.
//
// The deficit follows the self-similar Gaussian wake with a potential-core
// near wake of length x0; beyond x0 the widths grow linearly at
// k* = k_a * I + k_b. Inside the near wake the widths and the centreline
// deficit are frozen at their x0 values. The deflection uses the companion
// closed form of the same wake family. Every function is pure and templated
// on the scalar type so it can be evaluated with plain doubles or with
// expression/AD scalars.

#include <array>
#include <cmath>
#include <numbers>

#include "wfc/angles.hpp"
#include "wfc/errors.hpp"

namespace wfc {

struct WakeParams {
  double alpha = 2.32;      // near-wake length, TI term
  double beta = 0.154;      // near-wake length, thrust term
  double k_a = 0.38371;     // expansion slope vs TI
  double k_b = 0.003678;    // expansion offset
  double k_fa = 0.73;       // added turbulence
  double k_fb = 0.8325;
  double k_fc = 0.0325;
  double k_fd = -0.32;
  double k_ti = 3.0;        // lateral footprint of added TI, in wake widths
};

struct TurbineModel {
  double diameter = 178.4;   // m
  double hub_height = 119.0; // m
  double efficiency = 1.0;
  double yaw_exponent = 2.2;
  double air_density = 1.225;
  double induction = 1.0 / 3.0;

  double radius() const { return 0.5 * diameter; }
  double rotor_area() const { return std::numbers::pi * radius() * radius(); }
};

struct ShearProfile {
  double exponent = 0.071;
  double reference_height = 119.0;
  double reference_speed = 8.0;
};

struct YawLimitConfig {
  double gamma_max = 33.0;
  double gamma_min = -33.0;
  double steepness = 50.0;  // 1/deg
};

template <typename Scalar>
Scalar thrust_coefficient(Scalar a) {
  return Scalar(4) * a * (Scalar(1) - a);
}

template <typename Scalar>
Scalar power_coefficient(Scalar a) {
  return Scalar(4) * a * (Scalar(1) - a) * (Scalar(1) - a);
}

template <typename Scalar>
Scalar expansion_rate(const WakeParams& p, Scalar ti) {
  return Scalar(p.k_a) * ti + Scalar(p.k_b);
}

/// Length of the potential core (m).
template <typename Scalar>
Scalar near_wake_length(const WakeParams& p, const TurbineModel& t, Scalar yaw_deg, Scalar ti) {
  using std::cos;
  using std::sqrt;
  const Scalar ct = thrust_coefficient(Scalar(t.induction));
  const Scalar root = sqrt(Scalar(1) - ct);
  return Scalar(t.diameter) * cos(deg2rad(yaw_deg)) * (Scalar(1) + root) /
         (std::numbers::sqrt2 * (Scalar(p.alpha) * ti + Scalar(p.beta) * (Scalar(1) - root)));
}

template <typename Scalar>
struct WakeShape {
  Scalar core_length;  // x0
  Scalar sigma_y;      // m
  Scalar sigma_z;      // m
  Scalar centerline;   // velocity-reduction fraction on the centreline
};

/// Widths and centreline deficit at downwind distance x >= 0.
template <typename Scalar>
WakeShape<Scalar> wake_shape(const WakeParams& p, const TurbineModel& t, Scalar yaw_deg, Scalar ti,
                             Scalar x) {
  using std::cos;
  using std::sqrt;
  const Scalar d = Scalar(t.diameter);
  const Scalar cos_yaw = cos(deg2rad(yaw_deg));
  const Scalar ct = thrust_coefficient(Scalar(t.induction));
  if (ct * cos_yaw > Scalar(1) + Scalar(1e-12)) {
    throw InvalidThrustError("effective thrust C_T cos(yaw) exceeds 1");
  }
  const Scalar x0 = near_wake_length(p, t, yaw_deg, ti);
  const Scalar sy0 = d * cos_yaw / (Scalar(2) * std::numbers::sqrt2);
  const Scalar sz0 = d / (Scalar(2) * std::numbers::sqrt2);
  WakeShape<Scalar> s{x0, sy0, sz0, Scalar(0)};
  if (x > x0) {
    const Scalar grow = expansion_rate(p, ti) * (x - x0);
    s.sigma_y = sy0 + grow;
    s.sigma_z = sz0 + grow;
  }
  Scalar arg = ct * cos_yaw * d * d / (Scalar(8) * s.sigma_y * s.sigma_z);
  if (arg > Scalar(1)) arg = Scalar(1);
  s.centerline = Scalar(1) - sqrt(Scalar(1) - arg);
  return s;
}

/// Velocity-reduction fraction at an offset (dy, dz) from the deflected
/// centreline, x metres downstream.
template <typename Scalar>
Scalar centerline_relative_deficit(const WakeParams& p, const TurbineModel& t, Scalar yaw_deg,
                                   Scalar ti, Scalar x, Scalar dy, Scalar dz) {
  using std::exp;
  if (!(x > Scalar(0))) return Scalar(0);
  const auto s = wake_shape(p, t, yaw_deg, ti, x);
  return s.centerline * exp(-dy * dy / (Scalar(2) * s.sigma_y * s.sigma_y)) *
         exp(-dz * dz / (Scalar(2) * s.sigma_z * s.sigma_z));
}

/// Deflection for an already evaluated wake shape at the same x.
template <typename Scalar>
Scalar deflection_with_shape(const WakeParams& p, const TurbineModel& t, Scalar yaw_deg, Scalar ti,
                             Scalar x, const WakeShape<Scalar>& s) {
  using std::cos;
  using std::log;
  using std::sqrt;
  using std::tan;
  if (!(x > Scalar(0))) return Scalar(0);
  const Scalar ct = thrust_coefficient(Scalar(t.induction));
  if (!(ct > Scalar(0))) return Scalar(0);
  const Scalar yaw = deg2rad(yaw_deg);
  const Scalar cos_yaw = cos(yaw);
  const Scalar theta0 = Scalar(0.3) * yaw / cos_yaw * (Scalar(1) - sqrt(Scalar(1) - ct * cos_yaw));
  if (x <= s.core_length) return x * tan(theta0);

  const Scalar d = Scalar(t.diameter);
  const Scalar k = expansion_rate(p, ti);
  const Scalar sqrt_ct = sqrt(ct);
  const Scalar spread = sqrt(Scalar(8) * s.sigma_y * s.sigma_z / (d * d * cos_yaw));
  const Scalar log_term = log((Scalar(1.6) + sqrt_ct) * (Scalar(1.6) * spread - sqrt_ct) /
                              ((Scalar(1.6) - sqrt_ct) * (Scalar(1.6) * spread + sqrt_ct)));
  const Scalar far = d * theta0 / Scalar(14.7) * sqrt(cos_yaw / (k * k * ct)) *
                     (Scalar(2.9) + Scalar(1.3) * sqrt(Scalar(1) - ct) - ct) * log_term;
  return s.core_length * tan(theta0) + far;
}

/// Lateral offset of the wake centreline x metres downstream (m). The sign
/// follows the sign of the misalignment.
template <typename Scalar>
Scalar deflection_at(const WakeParams& p, const TurbineModel& t, Scalar yaw_deg, Scalar ti,
                     Scalar x) {
  if (!(x > Scalar(0))) return Scalar(0);
  return deflection_with_shape(p, t, yaw_deg, ti, x, wake_shape(p, t, yaw_deg, ti, x));
}

/// Velocity-reduction fraction at world-aligned wake coordinates: x downwind
/// of the rotor, y crosswind of the undeflected axis, z absolute height.
template <typename Scalar>
Scalar deficit_at(const WakeParams& p, const TurbineModel& t, Scalar yaw_deg, Scalar ti, Scalar x,
                  Scalar y, Scalar z) {
  if (!(x > Scalar(0))) return Scalar(0);
  const Scalar dy = y - deflection_at(p, t, yaw_deg, ti, x);
  const Scalar dz = z - Scalar(t.hub_height);
  return centerline_relative_deficit(p, t, yaw_deg, ti, x, dy, dz);
}

/// Turbulence-intensity increment x metres downstream of a rotor.
template <typename Scalar>
Scalar added_turbulence(const WakeParams& p, Scalar a, Scalar ambient_ti, Scalar x, Scalar diameter) {
  using std::pow;
  if (!(a > Scalar(0)) || !(x > Scalar(0))) return Scalar(0);
  return Scalar(p.k_fa) * pow(a, Scalar(p.k_fb)) * pow(ambient_ti, Scalar(p.k_fc)) *
         pow(x / diameter, Scalar(p.k_fd));
}

/// Generator power (W).
template <typename Scalar>
Scalar power(const TurbineModel& t, Scalar u_eff, Scalar yaw_deg) {
  using std::cos;
  using std::pow;
  if (!(u_eff > Scalar(0))) return Scalar(0);
  Scalar c = cos(deg2rad(yaw_deg));
  if (c < Scalar(0)) c = Scalar(0);
  return Scalar(t.efficiency) * Scalar(0.5) * Scalar(t.air_density) * Scalar(t.rotor_area()) *
         power_coefficient(Scalar(t.induction)) * u_eff * u_eff * u_eff * pow(c, Scalar(t.yaw_exponent));
}

/// Smooth power weighting that halves the power at the yaw limits.
template <typename Scalar>
Scalar yaw_weight(const YawLimitConfig& cfg, Scalar gamma_deg) {
  using std::tanh;
  const Scalar s = Scalar(cfg.steepness);
  return (Scalar(0.5) * tanh(s * (-gamma_deg + Scalar(cfg.gamma_max))) + Scalar(0.5)) *
         (Scalar(-0.5) * tanh(s * (-gamma_deg + Scalar(cfg.gamma_min))) + Scalar(0.5));
}

template <typename Scalar>
Scalar shear_speed(const ShearProfile& profile, Scalar z) {
  using std::pow;
  return Scalar(profile.reference_speed) *
         pow(z / Scalar(profile.reference_height), Scalar(profile.exponent));
}

/// Equal-area sample points on the rotor disc: two rings of eight points.
/// Offsets are in units of the rotor radius, (lateral, vertical).
struct RotorQuadrature {
  static constexpr int kRings = 2;
  static constexpr int kPerRing = 8;
  static constexpr int kPoints = kRings * kPerRing;

  static const std::array<std::array<double, 2>, kPoints>& offsets() {
    static const auto pts = [] {
      std::array<std::array<double, 2>, kPoints> out{};
      for (int r = 0; r < kRings; ++r) {
        const double radius = std::sqrt((r + 0.5) / kRings);
        for (int k = 0; k < kPerRing; ++k) {
          const double ang = 2.0 * std::numbers::pi * (k + 0.5 * r) / kPerRing;
          out[r * kPerRing + k] = {radius * std::cos(ang), radius * std::sin(ang)};
        }
      }
      return out;
    }();
    return pts;
  }
};

/// Rotor-averaged speed of the sheared background profile with hub-height
/// speed u_hub.
inline double sheared_rotor_average(const ShearProfile& shear, const TurbineModel& t, double u_hub) {
  ShearProfile local = shear;
  local.reference_height = t.hub_height;
  local.reference_speed = u_hub;
  double sum = 0.0;
  for (const auto& o : RotorQuadrature::offsets()) {
    sum += shear_speed(local, t.hub_height + o[1] * t.radius());
  }
  return sum / RotorQuadrature::kPoints;
}

/// Adds the squared velocity-reduction of one wake to each rotor sample.
/// dy_hub is the crosswind offset of the rotor hub from the deflected wake
/// centre; lateral_scale shrinks the projected rotor width of a yawed rotor.
inline void accumulate_rotor_deficit(const WakeShape<double>& s, double dy_hub, double lateral_scale,
                                     double radius,
                                     std::array<double, RotorQuadrature::kPoints>& r2) {
  const auto& pts = RotorQuadrature::offsets();
  const double iy = 1.0 / (2.0 * s.sigma_y * s.sigma_y);
  const double iz = 1.0 / (2.0 * s.sigma_z * s.sigma_z);
  for (int k = 0; k < RotorQuadrature::kPoints; ++k) {
    const double dy = dy_hub + pts[k][0] * radius * lateral_scale;
    const double dz = pts[k][1] * radius;
    const double r = s.centerline * std::exp(-dy * dy * iy - dz * dz * iz);
    r2[k] += r * r;
  }
}

/// Shear factors (z / z_hub)^alpha at each rotor sample.
inline std::array<double, RotorQuadrature::kPoints> shear_factors(const TurbineModel& t,
                                                                  double exponent) {
  std::array<double, RotorQuadrature::kPoints> f{};
  const auto& pts = RotorQuadrature::offsets();
  for (int k = 0; k < RotorQuadrature::kPoints; ++k) {
    f[k] = std::pow((t.hub_height + pts[k][1] * t.radius()) / t.hub_height, exponent);
  }
  return f;
}

/// Rotor-averaged speed: sheared background reduced by the root-sum-square
/// of all wake deficits at each sample.
inline double rotor_effective_speed(const std::array<double, RotorQuadrature::kPoints>& r2,
                                    const std::array<double, RotorQuadrature::kPoints>& shear,
                                    double u_hub) {
  double sum = 0.0;
  for (int k = 0; k < RotorQuadrature::kPoints; ++k) {
    double keep = 1.0 - std::sqrt(r2[k]);
    if (keep < 0.0) keep = 0.0;
    sum += shear[k] * u_hub * keep;
  }
  return sum / RotorQuadrature::kPoints;
}

/// Misalignment used for wake evaluation; keeps cos(yaw) well away from zero.
inline double wake_yaw(double yaw_deg) {
  constexpr double kMax = 75.0;
  return yaw_deg > kMax ? kMax : (yaw_deg < -kMax ? -kMax : yaw_deg);
}

}  // namespace wfc
