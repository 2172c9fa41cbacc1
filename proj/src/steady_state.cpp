#include "wfc/steady_state.hpp"

#include <algorithm>
#include <numeric>

#include "wfc/angles.hpp"

namespace wfc {

SteadyResult steady_state(const FlowModel& model, const std::vector<TurbineSite>& sites, double u,
                          double phi, const std::vector<double>& misalignment) {
  const int n = static_cast<int>(sites.size());
  const double r = deg2rad(phi);
  const double c = std::cos(r), s = std::sin(r);
  std::vector<double> dw(n), cw(n);
  for (int i = 0; i < n; ++i) {
    dw[i] = sites[i].x * c + sites[i].y * s;
    cw[i] = -sites[i].x * s + sites[i].y * c;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dw[a] < dw[b]; });

  const auto shear = shear_factors(model.turbine, model.shear_exponent);
  const double radius = model.turbine.radius();
  SteadyResult out;
  out.u_eff.assign(n, 0.0);
  out.ti.assign(n, model.sim.ti0);
  out.power.assign(n, 0.0);
  std::vector<char> done(n, 0);
  for (int j : order) {
    std::array<double, RotorQuadrature::kPoints> r2{};
    double ti_add = 0.0;
    const double lateral = std::abs(std::cos(deg2rad(misalignment[j])));
    for (int i = 0; i < n; ++i) {
      if (i == j || !done[i]) continue;
      const double x = dw[j] - dw[i];
      if (!(x > 0.0)) continue;
      const double yaw = wake_yaw(misalignment[i]);
      const auto shape = wake_shape(model.wake, model.turbine, yaw, out.ti[i], x);
      const double dy_hub = (cw[j] - cw[i]) -
                            deflection_with_shape(model.wake, model.turbine, yaw, out.ti[i], x, shape);
      if (std::abs(dy_hub) <= model.wake.k_ti * shape.sigma_y) {
        ti_add = std::max(ti_add, added_turbulence(model.wake, model.turbine.induction,
                                                   model.sim.ti0, x, model.turbine.diameter));
      }
      accumulate_rotor_deficit(shape, dy_hub, lateral, radius, r2);
    }
    out.ti[j] = std::sqrt(model.sim.ti0 * model.sim.ti0 + ti_add * ti_add);
    out.u_eff[j] = rotor_effective_speed(r2, shear, u);
    out.power[j] = power(model.turbine, out.u_eff[j], misalignment[j]);
    done[j] = 1;
  }
  out.total = std::accumulate(out.power.begin(), out.power.end(), 0.0);
  return out;
}

}  // namespace wfc
