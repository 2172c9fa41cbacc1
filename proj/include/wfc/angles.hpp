#pragma once

#include <cmath>
#include <numbers>

namespace wfc {

// Directions are flow headings in degrees, counter-clockwise from the +x
// axis: a flow with heading 0 travels towards +x. Misalignment is
// heading - orientation, so a positive misalignment deflects the wake to the
// left of the flow (+crosswind).

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * Scalar(std::numbers::pi / 180.0);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180.0 / std::numbers::pi);
}

/// Wraps an angle in degrees to [0, 360).
inline double wrap360(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w;
}

/// Wraps an angle in degrees to (-180, 180].
inline double wrap180(double deg) {
  const double w = wrap360(deg);
  return w > 180.0 ? w - 360.0 : w;
}

/// Weighted mean of angles on the circle (vector mean).
class CircularMean {
 public:
  void add(double deg, double weight = 1.0) {
    const double r = deg2rad(deg);
    c_ += weight * std::cos(r);
    s_ += weight * std::sin(r);
  }
  /// Resultant length; zero means the mean is undefined.
  double resultant() const { return std::hypot(c_, s_); }
  double mean() const { return wrap360(rad2deg(std::atan2(s_, c_))); }

 private:
  double c_ = 0.0;
  double s_ = 0.0;
};

}  // namespace wfc
