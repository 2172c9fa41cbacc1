#include "wfc/empc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "wfc/angles.hpp"
#include "wfc/errors.hpp"
#include "wfc/seed.hpp"

namespace wfc {

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

double group_reach(const FarmState& state, const std::vector<int>& members, double margin) {
  if (members.size() < 2) return 0.0;
  double reach = 0.0;
  for (int a : members) {
    for (int b : members) {
      reach = std::max(reach, std::hypot(state.sites[a].x - state.sites[b].x,
                                         state.sites[a].y - state.sites[b].y));
    }
  }
  return reach + margin;
}

Eigen::MatrixXd weighted(const Prediction& pred, const YawLimitConfig& limits) {
  Eigen::MatrixXd w = pred.power;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index k = 0; k < w.cols(); ++k) w(i, k) *= yaw_weight(limits, pred.yaw(i, k));
  }
  return w;
}

std::vector<double> hold(double orientation, int steps) {
  return std::vector<double>(steps, orientation);
}

}  // namespace

double basis_psi(const YawBasisParams& p, double tn) {
  const double o1 = std::clamp(p.o1, 0.0, 1.0);
  const double o2 = std::clamp(p.o2, 0.0, 1.0);
  const double s = std::abs(o1 - 0.5);
  if (s < 1e-15) return 0.0;  // 0/0 saturation argument: steady yaw
  const double ts = o2 * (1.0 - 2.0 * s);
  const double arg = std::clamp((tn - ts) / (2.0 * s), 0.0, 1.0);
  return 2.0 * (o1 - 0.5) * arg * p.rate * p.action_horizon;
}

std::vector<double> trajectory(const YawBasisParams& p, double gamma0, int steps, double dt) {
  std::vector<double> out(std::max(steps, 0) + 1);
  for (int k = 0; k < static_cast<int>(out.size()); ++k) {
    const double tn = std::min(k * dt / p.action_horizon, 1.0);
    out[k] = gamma0 + basis_psi(p, tn);
  }
  return out;
}

bool FarmGraph::edge(int i, int j) const {
  return std::find(downstream[i].begin(), downstream[i].end(), j) != downstream[i].end();
}

std::vector<int> FarmGraph::descendants(int i) const {
  std::vector<char> seen(n, 0);
  std::vector<int> stack = downstream[i], out;
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    if (seen[j] || j == i) continue;
    seen[j] = 1;
    out.push_back(j);
    for (int k : downstream[j]) stack.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> FarmGraph::downstream_first(const std::vector<int>& group) const {
  std::vector<int> indeg(n, 0);
  std::vector<char> in_group(n, 0);
  for (int i : group) in_group[i] = 1;
  for (int i : group) {
    for (int j : downstream[i]) {
      if (in_group[j]) ++indeg[j];
    }
  }
  std::vector<int> order;
  std::vector<char> done(n, 0);
  while (order.size() < group.size()) {
    int pick = -1;
    for (int i : group) {
      if (!done[i] && indeg[i] == 0) {
        pick = i;
        break;
      }
    }
    if (pick < 0) throw CycleError("turbine interaction graph contains a cycle");
    done[pick] = 1;
    order.push_back(pick);
    for (int j : downstream[pick]) {
      if (in_group[j]) --indeg[j];
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

FarmGraph decompose(const std::vector<TurbineSite>& sites, const std::vector<double>& phi,
                    const std::vector<double>& u, double crosswind_limit, double advection,
                    double dt) {
  FarmGraph g;
  g.n = static_cast<int>(sites.size());
  g.downstream.assign(g.n, {});
  g.downwind = Eigen::MatrixXd::Zero(g.n, g.n);
  g.delay = Eigen::MatrixXi::Zero(g.n, g.n);
  std::vector<int> parent(g.n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < g.n; ++i) {
    const double r = deg2rad(phi[i]);
    const double c = std::cos(r), s = std::sin(r);
    for (int j = 0; j < g.n; ++j) {
      if (i == j) continue;
      const double dx = sites[j].x - sites[i].x;
      const double dy = sites[j].y - sites[i].y;
      const double dw = dx * c + dy * s;
      const double cw = -dx * s + dy * c;
      g.downwind(i, j) = dw;
      if (dw > 0.0) {
        const double steps = std::round(dw / (advection * u[i] * dt));
        g.delay(i, j) = std::max(1, static_cast<int>(steps));
      }
      if (dw > 0.0 && std::abs(cw) <= crosswind_limit) {
        g.downstream[i].push_back(j);
        parent[find_root(parent, i)] = find_root(parent, j);
      }
    }
  }
  std::vector<std::vector<int>> by_root(g.n);
  for (int i = 0; i < g.n; ++i) by_root[find_root(parent, i)].push_back(i);
  for (auto& members : by_root) {
    if (!members.empty()) g.groups.push_back(members);
  }
  std::sort(g.groups.begin(), g.groups.end());
  return g;
}

void MpcConfig::validate() const {
  if (tau_ah < 1) throw ConfigError("mpc.tau_ah", "must be at least 1");
  if (cost == CostKind::kEnergy && tau_ph < tau_ah) {
    throw ConfigError("mpc.tau_ph", "must not be shorter than the action horizon");
  }
  if (k_mpc < 1 || k_mpc > tau_ah) throw ConfigError("mpc.k_mpc", "must lie in [1, tau_ah]");
  if (!(rate > 0.0)) throw ConfigError("mpc.rate", "must be positive");
  if (!(limits.gamma_min < limits.gamma_max)) {
    throw ConfigError("mpc.limits", "gamma_min must be below gamma_max");
  }
  pso.validate();
}

std::vector<std::vector<double>> decode_plans(const Eigen::VectorXd& theta, const FarmState& group,
                                              const MpcConfig& cfg, double dt, int steps) {
  std::vector<std::vector<double>> plans(group.size());
  for (int i = 0; i < group.size(); ++i) {
    const YawBasisParams p{theta(2 * i), theta(2 * i + 1), cfg.tau_ah * dt, cfg.rate};
    const auto traj = trajectory(p, group.turbines[i].orientation, steps, dt);
    plans[i].assign(traj.begin() + 1, traj.end());
  }
  return plans;
}

double cost_energy(const FarmState& group, const FlowModel& model, const MpcConfig& cfg,
                   const Eigen::VectorXd& theta, int tau_ph) {
  const double dt = model.sim.dt;
  const auto plans = decode_plans(theta, group, cfg, dt, tau_ph);
  const Prediction pred = predict(group, model, tau_ph, plans);
  return -dt * weighted(pred, cfg.limits).sum();
}

double shifted_energy(const Eigen::MatrixXd& weighted_power, int actuated,
                      const std::vector<std::pair<int, int>>& downstream_delays, int tau_ah,
                      double dt) {
  double sum = weighted_power.row(actuated).head(tau_ah).sum();
  for (const auto& [j, delay] : downstream_delays) {
    sum += weighted_power.row(j).segment(delay, tau_ah).sum();
  }
  return -dt * sum;
}

double cost_shifted(const FarmState& group, const FlowModel& model, const MpcConfig& cfg,
                    const FarmGraph& graph, const std::vector<int>& members, int actuated,
                    const Eigen::VectorXd& theta, const std::vector<std::vector<double>>& fixed) {
  const double dt = model.sim.dt;
  const int a_global = members[actuated];
  std::vector<std::pair<int, int>> shifts;
  int max_delay = 0;
  for (int j : graph.descendants(a_global)) {
    const auto it = std::find(members.begin(), members.end(), j);
    if (it == members.end()) continue;
    const int delay = graph.delay(a_global, j);
    shifts.emplace_back(static_cast<int>(it - members.begin()), delay);
    max_delay = std::max(max_delay, delay);
  }
  const int horizon = cfg.tau_ah + max_delay;
  std::vector<std::vector<double>> plans(group.size());
  for (int i = 0; i < group.size(); ++i) {
    plans[i].assign(fixed[i].begin(), fixed[i].begin() + horizon);
  }
  const YawBasisParams p{theta(0), theta(1), cfg.tau_ah * dt, cfg.rate};
  const auto traj = trajectory(p, group.turbines[actuated].orientation, horizon, dt);
  plans[actuated].assign(traj.begin() + 1, traj.end());
  const Prediction pred = predict(group, model, horizon, plans);
  return shifted_energy(weighted(pred, cfg.limits), actuated, shifts, cfg.tau_ah, dt);
}

std::string OptimizationTrace::to_json() const {
  nlohmann::json j;
  j["time"] = time;
  j["group"] = group;
  j["turbine"] = turbine;
  j["iterations"] = iterations;
  j["evaluations"] = evaluations;
  j["best"] = history;
  j["theta"] = theta;
  return j.dump();
}

ControlOutput control_step(const FarmState& state, const FlowModel& model, const MpcConfig& cfg,
                           std::uint64_t seed) {
  const int n = state.size();
  const double dt = model.sim.dt;
  const double diameter = model.turbine.diameter;
  std::vector<double> phi(n), u(n);
  for (int i = 0; i < n; ++i) {
    phi[i] = state.turbines[i].phi_bg;
    u[i] = state.turbines[i].u_bg;
  }
  ControlOutput out;
  out.graph = decompose(state.sites, phi, u, cfg.crosswind_limit * diameter,
                        model.weights.advection, dt);
  out.plans.resize(n);
  for (int i = 0; i < n; ++i) out.plans[i] = hold(state.turbines[i].orientation, cfg.tau_ah);

  for (int gi = 0; gi < static_cast<int>(out.graph.groups.size()); ++gi) {
    const auto& members = out.graph.groups[gi];
    const int m = static_cast<int>(members.size());
    const FarmState sub =
        extract_group(state, members, group_reach(state, members, cfg.reach_margin * diameter));
    std::vector<int> ids;
    for (int i : members) ids.push_back(state.sites[i].id);

    if (cfg.cost == CostKind::kEnergy) {
      PsoConfig pc = cfg.pso;
      pc.seed = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(gi) + 1));
      const auto res = pso_minimize(
          [&](const Eigen::VectorXd& th) { return cost_energy(sub, model, cfg, th, cfg.tau_ph); },
          2 * m, pc, {Eigen::VectorXd::Constant(2 * m, 0.5)});
      const auto plans = decode_plans(res.theta, sub, cfg, dt, cfg.tau_ah);
      for (int i = 0; i < m; ++i) out.plans[members[i]] = plans[i];
      out.traces.push_back({state.time, ids, -1, res.iterations, res.evaluations, res.history,
                            std::vector<double>(res.theta.data(), res.theta.data() + res.theta.size())});
      continue;
    }

    int max_delay = 0;
    for (int a : members) {
      for (int b : out.graph.descendants(a)) max_delay = std::max(max_delay, out.graph.delay(a, b));
    }
    const int horizon = cfg.tau_ah + max_delay;
    std::vector<std::vector<double>> fixed(m);
    for (int i = 0; i < m; ++i) fixed[i] = hold(sub.turbines[i].orientation, horizon);
    for (int global : out.graph.downstream_first(members)) {
      const int local = static_cast<int>(std::find(members.begin(), members.end(), global) -
                                         members.begin());
      PsoConfig pc = cfg.pso;
      pc.seed = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(gi) + 1) ^
                         splitmix(static_cast<std::uint64_t>(global) + 1000));
      const auto res = pso_minimize(
          [&](const Eigen::VectorXd& th) {
            return cost_shifted(sub, model, cfg, out.graph, members, local, th, fixed);
          },
          2, pc, {Eigen::Vector2d(0.5, 0.5)});
      const YawBasisParams p{res.theta(0), res.theta(1), cfg.tau_ah * dt, cfg.rate};
      const auto traj = trajectory(p, sub.turbines[local].orientation, horizon, dt);
      fixed[local].assign(traj.begin() + 1, traj.end());
      out.traces.push_back({state.time, ids, state.sites[global].id, res.iterations,
                            res.evaluations, res.history, {res.theta(0), res.theta(1)}});
    }
    for (int i = 0; i < m; ++i) {
      out.plans[members[i]].assign(fixed[i].begin(), fixed[i].begin() + cfg.tau_ah);
    }
  }
  return out;
}

}  // namespace wfc
