#include "wfc/floridyn.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "wfc/angles.hpp"
#include "wfc/errors.hpp"

namespace wfc {

namespace {

// Kernel terms with exponent above this contribute less than 1e-5 and are
// skipped.
constexpr double kCutoff = 11.5;

struct KernelCoefficients {
  double dw_u, cw_u, t_u, dw_p, cw_p, t_p;
  double space_u, space_p;  // lower bound on the spatial coefficient
};

KernelCoefficients coefficients(const WeightingConfig& w, double diameter) {
  auto inv = [](double s) { return 1.0 / (2.0 * s * s); };
  KernelCoefficients k{};
  k.dw_u = inv(w.dw_u * diameter);
  k.cw_u = inv(w.cw_u * diameter);
  k.t_u = inv(w.t_u);
  k.dw_p = inv(w.dw_phi * diameter);
  k.cw_p = inv(w.cw_phi * diameter);
  k.t_p = inv(w.t_phi);
  k.space_u = std::min(k.dw_u, k.cw_u);
  k.space_p = std::min(k.dw_p, k.cw_p);
  return k;
}

void set_velocity(ObservationPoint& op, double advection) {
  const double r = deg2rad(op.phi_adv);
  op.vx = advection * op.u_adv * std::cos(r);
  op.vy = advection * op.u_adv * std::sin(r);
}

// Kernel-weighted flow of every OP from the OPs of its own chain, in the
// frame of the querying OP.
void update_advection(OpChain& chain, const WeightingConfig& w, double diameter) {
  const int n = static_cast<int>(chain.size());
  const KernelCoefficients k = coefficients(w, diameter);
  thread_local std::vector<double> cs, sn;
  cs.resize(n);
  sn.resize(n);
  for (int i = 0; i < n; ++i) {
    const double r = deg2rad(chain[i].phi);
    cs[i] = std::cos(r);
    sn[i] = std::sin(r);
  }
  thread_local std::vector<FlowSample> out;
  out.resize(n);
  for (int m = 0; m < n; ++m) {
    const ObservationPoint& q = chain[m];
    double wu = 0.0, su = 0.0, wc = 0.0, ws = 0.0;
    for (int dir = -1; dir <= 1; dir += 2) {
      bool open_u = true, open_p = true;
      for (int j = (dir < 0 ? m : m + 1); j >= 0 && j < n && (open_u || open_p); j += dir) {
        const ObservationPoint& o = chain[j];
        const double dx = o.bx - q.bx;
        const double dy = o.by - q.by;
        const double dw = dx * cs[m] + dy * sn[m];
        const double cw = -dx * sn[m] + dy * cs[m];
        const double dt = o.shed_time - q.shed_time;
        const double d2 = dx * dx + dy * dy;
        if (open_u) {
          if (d2 * k.space_u + dt * dt * k.t_u > kCutoff) {
            open_u = false;
          } else {
            const double e = dw * dw * k.dw_u + cw * cw * k.cw_u + dt * dt * k.t_u;
            if (e < kCutoff) {
              const double wt = std::exp(-e);
              wu += wt;
              su += wt * o.u;
            }
          }
        }
        if (open_p) {
          if (d2 * k.space_p + dt * dt * k.t_p > kCutoff) {
            open_p = false;
          } else {
            const double e = dw * dw * k.dw_p + cw * cw * k.cw_p + dt * dt * k.t_p;
            if (e < kCutoff) {
              const double wt = std::exp(-e);
              wc += wt * cs[j];
              ws += wt * sn[j];
            }
          }
        }
      }
    }
    // The querying OP itself always has weight one.
    out[m].u = su / wu;
    out[m].phi = std::hypot(wc, ws) > 1e-12 ? wrap360(rad2deg(std::atan2(ws, wc))) : q.phi;
  }
  for (int m = 0; m < n; ++m) {
    chain[m].u_adv = out[m].u;
    chain[m].phi_adv = out[m].phi;
  }
}

const std::array<double, RotorQuadrature::kPoints>& cached_shear(const TurbineModel& t,
                                                                 double exponent) {
  thread_local double h = -1.0, r = -1.0, e = -1.0;
  thread_local std::array<double, RotorQuadrature::kPoints> f{};
  if (h != t.hub_height || r != t.radius() || e != exponent) {
    f = shear_factors(t, exponent);
    h = t.hub_height;
    r = t.radius();
    e = exponent;
  }
  return f;
}

ObservationPoint shed(const FarmState& state, const FlowModel& model, int i) {
  const TurbineState& ts = state.turbines[i];
  ObservationPoint op;
  op.bx = state.sites[i].x;
  op.by = state.sites[i].y;
  op.x_w = 0.0;
  op.yaw = wake_yaw(ts.yaw);
  op.induction = ts.induction;
  op.u = ts.u_bg;
  op.phi = ts.phi_bg;
  op.ti = ts.ti;
  op.shed_time = state.time;
  op.source = i;
  op.u_adv = op.u;
  op.phi_adv = op.phi;
  set_velocity(op, model.weights.advection);
  return op;
}

void compute_backgrounds(FarmState& state, const FlowModel& model) {
  std::vector<FlowSample> bg(state.size());
  for (int i = 0; i < state.size(); ++i) {
    bg[i] = weighted_flow_at(state, model.weights, model.turbine.diameter,
                             {state.sites[i].x, state.sites[i].y}, state.turbines[i].phi_bg,
                             state.time);
  }
  for (int i = 0; i < state.size(); ++i) {
    state.turbines[i].u_bg = bg[i].u;
    state.turbines[i].phi_bg = bg[i].phi;
  }
}

}  // namespace

void WeightingConfig::validate() const {
  const double s[] = {dw_phi, cw_phi, t_phi, dw_u, cw_u, t_u};
  for (double v : s) {
    if (!(v > 0.0)) throw ConfigError("weighting", "kernel widths must be positive");
  }
  if (!(advection > 0.0 && advection <= 1.0)) {
    throw ConfigError("weighting.advection", "must lie in (0, 1]");
  }
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("sim.dt", "must be positive");
  if (n_op < 1) throw ConfigError("sim.n_op", "must be at least 1");
  if (!(u_inf > 0.0)) throw ConfigError("sim.u_inf", "must be positive");
  if (!(ti0 > 0.0)) throw ConfigError("sim.ti0", "must be positive");
}

FarmState make_farm_state(const FlowModel& model, std::vector<TurbineSite> sites, double u,
                          double phi, const std::vector<double>* orientations) {
  FarmState s;
  const int n = static_cast<int>(sites.size());
  s.sites = std::move(sites);
  s.turbines.resize(n);
  s.chains.resize(n);
  phi = wrap360(phi);
  const double r = deg2rad(phi);
  const double spacing = model.weights.advection * u * model.sim.dt;
  for (int i = 0; i < n; ++i) {
    TurbineState& t = s.turbines[i];
    t.orientation = orientations ? wrap360((*orientations)[i]) : phi;
    t.induction = model.turbine.induction;
    t.u_bg = u;
    t.phi_bg = phi;
    t.yaw = wrap180(phi - t.orientation);
    t.ti = model.sim.ti0;
  }
  refresh_power(s, model);
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < model.sim.n_op; ++m) {
      ObservationPoint op = shed(s, model, i);
      op.x_w = m * spacing;
      op.bx += op.x_w * std::cos(r);
      op.by += op.x_w * std::sin(r);
      op.shed_time = -m * model.sim.dt;
      s.chains[i].push_back(op);
    }
  }
  // Second pass so that wakes of waked rotors carry their local turbulence.
  for (int pass = 0; pass < 2; ++pass) {
    refresh_power(s, model);
    for (int i = 0; i < n; ++i) {
      for (auto& op : s.chains[i]) op.ti = s.turbines[i].ti;
    }
  }
  refresh_power(s, model);
  return s;
}

FlowSample weighted_flow_at(const FarmState& state, const WeightingConfig& weights,
                            double diameter, Vec2 position, double heading, double time) {
  const KernelCoefficients k = coefficients(weights, diameter);
  const double hr = deg2rad(heading);
  const double ch = std::cos(hr), sh = std::sin(hr);
  double wu = 0.0, su = 0.0, wc = 0.0, ws = 0.0;
  double best = std::numeric_limits<double>::infinity();
  const ObservationPoint* nearest = nullptr;
  for (const auto& chain : state.chains) {
    for (const auto& o : chain) {
      const double dx = o.bx - position.x;
      const double dy = o.by - position.y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        nearest = &o;
      }
      const double dw = dx * ch + dy * sh;
      const double cw = -dx * sh + dy * ch;
      const double dt = time - o.shed_time;
      const double eu = dw * dw * k.dw_u + cw * cw * k.cw_u + dt * dt * k.t_u;
      if (eu < kCutoff) {
        const double w = std::exp(-eu);
        wu += w;
        su += w * o.u;
      }
      const double ep = dw * dw * k.dw_p + cw * cw * k.cw_p + dt * dt * k.t_p;
      if (ep < kCutoff) {
        const double w = std::exp(-ep);
        const double r = deg2rad(o.phi);
        wc += w * std::cos(r);
        ws += w * std::sin(r);
      }
    }
  }
  if (nearest == nullptr) throw StateCorruptionError("no observation points in the farm state");
  FlowSample out;
  out.u = wu > 1e-30 ? su / wu : nearest->u;
  out.phi = std::hypot(wc, ws) > 1e-30 ? wrap360(rad2deg(std::atan2(ws, wc))) : nearest->phi;
  return out;
}

namespace {

struct WakeAtPoint {
  WakeShape<double> shape;
  double dy = 0.0;  // crosswind offset of the point from the deflected centre (m)
  double x_w = 0.0;
  double induction = 0.0;
};

// Locates the chain segment that brackets `p` (smallest crosswind distance
// among segments onto which p projects) and evaluates the wake there.
bool wake_at_point(const OpChain& chain, Vec2 p, const FlowModel& model, WakeAtPoint& out) {
  const int n = static_cast<int>(chain.size());
  int hit = -1;
  double hit_t = 0.0, hit_cross = std::numeric_limits<double>::infinity();
  for (int m = 0; m + 1 < n; ++m) {
    const ObservationPoint& a = chain[m];
    const ObservationPoint& b = chain[m + 1];
    const double sx = b.bx - a.bx, sy = b.by - a.by;
    const double l2 = sx * sx + sy * sy;
    if (l2 < 1e-12) continue;
    const double px = p.x - a.bx, py = p.y - a.by;
    const double t = (px * sx + py * sy) / l2;
    if (t < 0.0 || t > 1.0) continue;
    const double cross = std::abs(sx * py - sy * px) / std::sqrt(l2);
    if (cross < hit_cross) {
      hit_cross = cross;
      hit = m;
      hit_t = t;
    }
  }
  if (hit < 0) return false;
  const ObservationPoint& a = chain[hit];
  const ObservationPoint& b = chain[hit + 1];
  const double t = hit_t;
  const double x_w = a.x_w + t * (b.x_w - a.x_w);
  if (!(x_w > 0.0)) return false;
  const double bx = a.bx + t * (b.bx - a.bx);
  const double by = a.by + t * (b.by - a.by);
  const double phi = a.phi + t * wrap180(b.phi - a.phi);
  const double yaw = a.yaw + t * (b.yaw - a.yaw);
  const double ti = a.ti + t * (b.ti - a.ti);
  TurbineModel tm = model.turbine;
  tm.induction = a.induction + t * (b.induction - a.induction);

  const double pr = deg2rad(phi);
  const double y = -(p.x - bx) * std::sin(pr) + (p.y - by) * std::cos(pr);
  out.shape = wake_shape(model.wake, tm, yaw, ti, x_w);
  out.dy = y - deflection_with_shape(model.wake, tm, yaw, ti, x_w, out.shape);
  out.x_w = x_w;
  out.induction = tm.induction;
  return true;
}

}  // namespace

TurbineInflow turbine_inflow(const FarmState& state, const FlowModel& model, int j) {
  const TurbineState& ts = state.turbines[j];
  const Vec2 p{state.sites[j].x, state.sites[j].y};
  const double radius = model.turbine.radius();
  const double gamma = wrap180(ts.phi_bg - ts.orientation);
  const double lateral = std::abs(std::cos(deg2rad(gamma)));
  std::array<double, RotorQuadrature::kPoints> r2{};
  double ti_add = 0.0;

  for (int c = 0; c < state.size(); ++c) {
    if (c == j) continue;
    WakeAtPoint w;
    if (!wake_at_point(state.chains[c], p, model, w)) continue;
    if (std::abs(w.dy) <= model.wake.k_ti * w.shape.sigma_y) {
      ti_add = std::max(ti_add, added_turbulence(model.wake, w.induction, model.sim.ti0, w.x_w,
                                                 model.turbine.diameter));
    }
    if (std::abs(w.dy) > radius + 8.0 * w.shape.sigma_y) continue;
    accumulate_rotor_deficit(w.shape, w.dy, lateral, radius, r2);
  }

  TurbineInflow in;
  in.u_eff = rotor_effective_speed(r2, cached_shear(model.turbine, model.shear_exponent), ts.u_bg);
  in.phi = ts.phi_bg;
  in.ti = std::sqrt(model.sim.ti0 * model.sim.ti0 + ti_add * ti_add);
  return in;
}

double point_deficit(const FarmState& state, const FlowModel& model, Vec2 p, int exclude) {
  double r2 = 0.0;
  for (int c = 0; c < state.size(); ++c) {
    if (c == exclude) continue;
    WakeAtPoint w;
    if (!wake_at_point(state.chains[c], p, model, w)) continue;
    const double r = w.shape.centerline * std::exp(-w.dy * w.dy / (2.0 * w.shape.sigma_y * w.shape.sigma_y));
    r2 += r * r;
  }
  return std::min(1.0, std::sqrt(r2));
}

void refresh_power(FarmState& state, const FlowModel& model) {
  std::vector<TurbineInflow> in(state.size());
  for (int i = 0; i < state.size(); ++i) in[i] = turbine_inflow(state, model, i);
  TurbineModel tm = model.turbine;
  for (int i = 0; i < state.size(); ++i) {
    TurbineState& t = state.turbines[i];
    t.yaw = wrap180(t.phi_bg - t.orientation);
    t.u_eff = in[i].u_eff;
    t.ti = in[i].ti;
    tm.induction = t.induction;
    t.power = power(tm, t.u_eff, t.yaw);
  }
}

void refresh_turbines(FarmState& state, const FlowModel& model) {
  compute_backgrounds(state, model);
  refresh_power(state, model);
}

void step(FarmState& state, const FlowModel& model, const std::vector<double>& orientations,
          const Forcing* forcing, Propagation mode) {
  const int n = state.size();
  if (static_cast<int>(orientations.size()) != n) {
    throw DataError("orientation command count does not match the turbine count");
  }
  for (const auto& chain : state.chains) {
    if (chain.empty()) throw StateCorruptionError("observation-point chain is empty");
  }
  const double dt = model.sim.dt;

  if (forcing && forcing->uniform_phi) {
    const double phi = wrap360(*forcing->uniform_phi);
    for (auto& chain : state.chains) {
      for (auto& op : chain) op.phi = phi;
    }
  }
  if (mode == Propagation::kKernel) {
    for (auto& chain : state.chains) {
      update_advection(chain, model.weights, model.turbine.diameter);
      for (auto& op : chain) set_velocity(op, model.weights.advection);
    }
  }
  for (auto& chain : state.chains) {
    for (auto& op : chain) {
      op.bx += op.vx * dt;
      op.by += op.vy * dt;
      op.x_w += model.weights.advection * op.u_adv * dt;
    }
  }
  for (int i = 0; i < n; ++i) state.turbines[i].orientation = wrap360(orientations[i]);
  state.time += dt;
  ++state.step;

  if (mode == Propagation::kKernel) compute_backgrounds(state, model);
  if (forcing) {
    if (!forcing->u_bg.empty()) {
      for (int i = 0; i < n; ++i) state.turbines[i].u_bg = forcing->u_bg[i];
    }
    if (!forcing->phi_bg.empty()) {
      for (int i = 0; i < n; ++i) state.turbines[i].phi_bg = wrap360(forcing->phi_bg[i]);
    }
  }
  refresh_power(state, model);

  for (int i = 0; i < n; ++i) {
    OpChain& chain = state.chains[i];
    chain.push_front(shed(state, model, i));
    while (static_cast<int>(chain.size()) > model.sim.n_op) chain.pop_back();
  }
}

Prediction predict(const FarmState& state, const FlowModel& model, int horizon,
                   const std::vector<std::vector<double>>& plan) {
  const int n = state.size();
  Prediction out{Eigen::MatrixXd(n, std::max(horizon, 0)), Eigen::MatrixXd(n, std::max(horizon, 0))};
  if (horizon <= 0) return out;
  FarmState s = state;
  std::vector<double> cmd(n);
  for (int k = 0; k < horizon; ++k) {
    for (int i = 0; i < n; ++i) cmd[i] = plan[i][k];
    step(s, model, cmd, nullptr, Propagation::kFrozen);
    for (int i = 0; i < n; ++i) {
      out.power(i, k) = s.turbines[i].power;
      out.yaw(i, k) = s.turbines[i].yaw;
    }
  }
  return out;
}

FarmState extract_group(const FarmState& state, const std::vector<int>& members, double reach) {
  FarmState g;
  g.step = state.step;
  g.time = state.time;
  for (int idx = 0; idx < static_cast<int>(members.size()); ++idx) {
    const int m = members[idx];
    g.sites.push_back(state.sites[m]);
    g.turbines.push_back(state.turbines[m]);
    OpChain chain;
    for (const auto& op : state.chains[m]) {
      if (!chain.empty() && op.x_w > reach) break;
      chain.push_back(op);
      chain.back().source = idx;
    }
    g.chains.push_back(std::move(chain));
  }
  return g;
}

Vec2 op_center(const ObservationPoint& op, const FlowModel& model) {
  TurbineModel tm = model.turbine;
  tm.induction = op.induction;
  const double d = deflection_at(model.wake, tm, op.yaw, op.ti, op.x_w);
  const double r = deg2rad(op.phi);
  return {op.bx - d * std::sin(r), op.by + d * std::cos(r)};
}

void write_snapshot(std::ostream& os, const FarmState& state, const FlowModel& model) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "turbine,index,shed_time,x,y,z,base_x,base_y,x_w,y_w,u,phi,ti,yaw,induction\n";
  for (int c = 0; c < state.size(); ++c) {
    const auto& chain = state.chains[c];
    for (int m = 0; m < static_cast<int>(chain.size()); ++m) {
      const auto& op = chain[m];
      const Vec2 p = op_center(op, model);
      TurbineModel tm = model.turbine;
      tm.induction = op.induction;
      os << state.sites[c].id << ',' << m << ',' << op.shed_time << ',' << p.x << ',' << p.y << ','
         << model.turbine.hub_height << ',' << op.bx << ',' << op.by << ',' << op.x_w << ','
         << deflection_at(model.wake, tm, op.yaw, op.ti, op.x_w) << ',' << op.u << ','
         << op.phi << ',' << op.ti << ',' << op.yaw << ',' << op.induction << '\n';
    }
  }
  os.precision(old);
}

void read_snapshot(std::istream& is, FarmState& state, const FlowModel& model) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty snapshot");
  std::vector<OpChain> chains(state.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 15) throw DataError("snapshot record has " + std::to_string(v.size()) + " fields");
    int c = -1;
    for (int i = 0; i < state.size(); ++i) {
      if (state.sites[i].id == static_cast<int>(v[0])) c = i;
    }
    if (c < 0) throw DataError("snapshot references unknown turbine id");
    ObservationPoint op;
    op.shed_time = v[2];
    op.bx = v[6];
    op.by = v[7];
    op.x_w = v[8];
    op.u = v[10];
    op.phi = v[11];
    op.ti = v[12];
    op.yaw = v[13];
    op.induction = v[14];
    op.source = c;
    op.u_adv = op.u;
    op.phi_adv = op.phi;
    set_velocity(op, model.weights.advection);
    chains[c].push_back(op);
  }
  for (const auto& ch : chains) {
    if (ch.empty()) throw StateCorruptionError("snapshot leaves a chain empty");
  }
  state.chains = std::move(chains);
}

}  // namespace wfc
