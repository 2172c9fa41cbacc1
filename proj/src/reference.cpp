#include "wfc/reference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "wfc/angles.hpp"
#include "wfc/empc.hpp"
#include "wfc/errors.hpp"
#include "wfc/steady_state.hpp"

namespace wfc {

bool deadband_update(DeadBandState& s, double phi_meas, double dt, long k) {
  const double dev = wrap180(phi_meas - s.phi_hat);
  if (std::abs(dev) > s.limit) {
    s.phi_hat = wrap360(phi_meas);
    s.tau = k;
    s.integral = 0.0;
    return true;
  }
  s.integral += dev;
  if (s.k_i * dt * std::abs(s.integral) > s.limit) {
    s.phi_hat = wrap360(phi_meas);
    s.tau = k;
    s.integral = 0.0;
    return true;
  }
  return false;
}

double LookupTable::misalignment(double phi, int turbine) const {
  const int n = directions();
  if (n == 0) return 0.0;
  if (n == 1) return gamma(0, turbine);
  double pos;
  if (periodic) {
    pos = wrap360(phi - start) / step;
    const int i0 = static_cast<int>(std::floor(pos)) % n;
    const int i1 = (i0 + 1) % n;
    const double f = pos - std::floor(pos);
    return (1.0 - f) * gamma(i0, turbine) + f * gamma(i1, turbine);
  }
  pos = wrap180(phi - start) / step;
  if (pos <= 0.0) return gamma(0, turbine);
  if (pos >= n - 1) return gamma(n - 1, turbine);
  const int i0 = static_cast<int>(std::floor(pos));
  const double f = pos - i0;
  return (1.0 - f) * gamma(i0, turbine) + f * gamma(i0 + 1, turbine);
}

LookupTable LookupTable::zeros(int turbines) {
  LookupTable t;
  t.start = 0.0;
  t.step = 360.0;
  t.periodic = true;
  t.gamma = Eigen::MatrixXd::Zero(1, turbines);
  return t;
}

double lut_yaw_step(double orientation, double phi_hat, double misalignment, double rate,
                    double dt) {
  const double target = wrap360(phi_hat - misalignment);
  const double gap = wrap180(target - orientation);
  const double max_step = rate * dt;
  if (std::abs(gap) <= max_step) return target;
  return wrap360(orientation + (gap > 0.0 ? max_step : -max_step));
}

LookupTable generate_lut(const FlowModel& model, const std::vector<TurbineSite>& sites,
                         double start, double step, int count, bool periodic,
                         const LutGenerationConfig& cfg, LutGenerationReport* report) {
  const int n = static_cast<int>(sites.size());
  LookupTable lut;
  lut.start = start;
  lut.step = step;
  lut.periodic = periodic;
  lut.gamma = Eigen::MatrixXd::Zero(count, n);
  const double u = model.sim.u_inf;
  for (int r = 0; r < count; ++r) {
    const double phi = wrap360(start + r * step);
    const FarmGraph graph = decompose(sites, std::vector<double>(n, phi), std::vector<double>(n, u),
                                      cfg.crosswind_limit * model.turbine.diameter,
                                      model.weights.advection, model.sim.dt);
    for (int gi = 0; gi < static_cast<int>(graph.groups.size()); ++gi) {
      const auto& members = graph.groups[gi];
      if (members.size() < 2) continue;  // an isolated rotor is best aligned
      std::vector<TurbineSite> sub;
      for (int i : members) sub.push_back(sites[i]);
      const int m = static_cast<int>(members.size());
      auto decode = [&](const Eigen::VectorXd& th) {
        std::vector<double> g(m);
        for (int i = 0; i < m; ++i) g[i] = (2.0 * th(i) - 1.0) * cfg.gamma_limit;
        return g;
      };
      auto cost = [&](const Eigen::VectorXd& th) {
        const auto g = decode(th);
        const SteadyResult res = steady_state(model, sub, u, phi, g);
        double total = 0.0;
        for (int i = 0; i < m; ++i) total += yaw_weight(cfg.limits, g[i]) * res.power[i];
        return -total;
      };
      PsoConfig pc = cfg.pso;
      pc.seed = cfg.pso.seed + 7919ULL * static_cast<std::uint64_t>(r) + gi;
      const Eigen::VectorXd greedy = Eigen::VectorXd::Constant(m, 0.5);
      const PsoResult res = pso_minimize(cost, m, pc, {greedy});
      const double greedy_cost = cost(greedy);
      if (!(res.cost < greedy_cost)) {
        if (report) ++report->stalled;
        continue;
      }
      const auto g = decode(res.theta);
      for (int i = 0; i < m; ++i) lut.gamma(r, members[i]) = g[i];
    }
  }
  return lut;
}

void write_lut(std::ostream& os, const LookupTable& lut) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "# " << lut.start << ' ' << lut.step << ' ' << (lut.periodic ? 1 : 0) << ' '
     << lut.turbines() << '\n';
  for (int r = 0; r < lut.directions(); ++r) {
    os << lut.direction(r);
    for (int t = 0; t < lut.turbines(); ++t) os << ' ' << lut.gamma(r, t);
    os << '\n';
  }
  os.precision(old);
}

LookupTable read_lut(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.size() < 2 || line[0] != '#') {
    throw DataError("look-up table header missing");
  }
  LookupTable lut;
  int periodic = 0, turbines = 0;
  std::istringstream head(line.substr(1));
  if (!(head >> lut.start >> lut.step >> periodic >> turbines) || turbines < 1) {
    throw DataError("malformed look-up table header");
  }
  lut.periodic = periodic != 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double dir;
    ss >> dir;
    std::vector<double> row(turbines);
    for (auto& v : row) {
      if (!(ss >> v)) throw DataError("look-up table row has too few columns");
    }
    rows.push_back(row);
  }
  lut.gamma.resize(static_cast<Eigen::Index>(rows.size()), turbines);
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    for (int t = 0; t < turbines; ++t) lut.gamma(r, t) = rows[r][t];
  }
  return lut;
}

}  // namespace wfc
