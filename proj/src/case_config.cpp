#include "wfc/case_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wfc/errors.hpp"
#include "wfc/seed.hpp"

namespace wfc {

namespace {

using json = nlohmann::ordered_json;

// Reads the keys of one JSON object, remembering which were consumed so that
// typos surface as errors instead of silently falling back to defaults.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  void number(const std::string& key, double& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(at(key), "must be finite");
  }

  void integer(const std::string& key, int& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    out = v.get<int>();
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError(at(key), "expected a nonnegative integer");
    }
    out = v.get<std::uint64_t>();
  }

  void string(const std::string& key, std::string& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    out = v.get<std::string>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    out = v.get<bool>();
  }

  const json* child(const std::string& key) {
    if (!take(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

 private:
  bool take(const std::string& key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void in_range(double v, double lo, double hi, const std::string& field) {
  if (!(v >= lo && v <= hi)) {
    std::ostringstream ss;
    ss << "value " << v << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(field, ss.str());
  }
}

void positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ConfigError(field, "must be positive");
}

void read_turbine(Block b, TurbineModel& t) {
  b.number("diameter", t.diameter);
  b.number("hub_height", t.hub_height);
  b.number("efficiency", t.efficiency);
  b.number("yaw_exponent", t.yaw_exponent);
  b.number("air_density", t.air_density);
  b.number("induction", t.induction);
  b.finish();
  positive(t.diameter, b.at("diameter"));
  positive(t.hub_height, b.at("hub_height"));
  if (!(t.efficiency > 0.0 && t.efficiency <= 1.0)) {
    throw ConfigError(b.at("efficiency"), "must lie in (0, 1]");
  }
  in_range(t.yaw_exponent, 1.7, 2.7, b.at("yaw_exponent"));
  positive(t.air_density, b.at("air_density"));
  if (!(t.induction >= 0.0 && t.induction < 0.5)) {
    throw ConfigError(b.at("induction"), "must lie in [0, 0.5)");
  }
}

void read_wake(Block b, WakeParams& w) {
  b.number("alpha", w.alpha);
  b.number("beta", w.beta);
  b.number("k_a", w.k_a);
  b.number("k_b", w.k_b);
  b.number("k_fa", w.k_fa);
  b.number("k_fb", w.k_fb);
  b.number("k_fc", w.k_fc);
  b.number("k_fd", w.k_fd);
  b.number("k_ti", w.k_ti);
  b.finish();
  positive(w.alpha, b.at("alpha"));
  in_range(w.beta, 0.07, 0.39, b.at("beta"));
  in_range(w.k_a, 0.17, 0.92, b.at("k_a"));
  if (w.k_b < 0.0) throw ConfigError(b.at("k_b"), "must be nonnegative");
  in_range(w.k_fb, 0.0, 8.0, b.at("k_fb"));
  in_range(w.k_fc, 0.0, 0.5, b.at("k_fc"));
  in_range(w.k_ti, 1.0, 4.0, b.at("k_ti"));
}

void read_weighting(Block b, WeightingConfig& w) {
  b.number("dw_phi", w.dw_phi);
  b.number("cw_phi", w.cw_phi);
  b.number("t_phi", w.t_phi);
  b.number("dw_u", w.dw_u);
  b.number("cw_u", w.cw_u);
  b.number("t_u", w.t_u);
  b.number("advection", w.advection);
  b.finish();
  positive(w.dw_phi, b.at("dw_phi"));
  positive(w.cw_phi, b.at("cw_phi"));
  positive(w.t_phi, b.at("t_phi"));
  in_range(w.dw_u, 0.3, 3.5, b.at("dw_u"));
  in_range(w.cw_u, 0.3, 2.0, b.at("cw_u"));
  in_range(w.t_u, 100.0, 300.0, b.at("t_u"));
  in_range(w.advection, 0.5, 1.0, b.at("advection"));
}

void read_sim(Block b, SimConfig& s, double& shear) {
  b.number("dt", s.dt);
  b.integer("n_op", s.n_op);
  b.number("u_inf", s.u_inf);
  b.number("ti0", s.ti0);
  b.number("shear_exponent", shear);
  b.finish();
  positive(s.dt, b.at("dt"));
  if (s.n_op < 1) throw ConfigError(b.at("n_op"), "must be at least 1");
  positive(s.u_inf, b.at("u_inf"));
  positive(s.ti0, b.at("ti0"));
  if (shear < 0.0) throw ConfigError(b.at("shear_exponent"), "must be nonnegative");
}

void read_enkf(Block b, EnkfConfig& e) {
  b.integer("n_e", e.n_e);
  b.integer("k_enkf", e.k_enkf);
  b.number("l_loc_phi", e.l_loc_phi);
  b.number("l_loc_u", e.l_loc_u);
  b.number("sigma_mu_u", e.sigma_mu_u);
  b.number("sigma_mu_phi", e.sigma_mu_phi);
  b.number("sigma_nu_p", e.sigma_nu_p);
  b.number("sigma_nu_phi", e.sigma_nu_phi);
  b.number("taper_support", e.taper_support);
  b.number("projection_length", e.projection_length);
  b.finish();
  if (e.n_e < 2) throw ConfigError(b.at("n_e"), "must be at least 2");
  if (e.k_enkf < 1) throw ConfigError(b.at("k_enkf"), "must be at least 1");
  positive(e.l_loc_phi, b.at("l_loc_phi"));
  in_range(e.l_loc_u, 3.5, 8.0, b.at("l_loc_u"));
  in_range(e.sigma_mu_u, 0.1, 0.5, b.at("sigma_mu_u"));
  if (e.sigma_mu_phi < 0.0) throw ConfigError(b.at("sigma_mu_phi"), "must be nonnegative");
  in_range(e.sigma_nu_p, 0.01, 0.3, b.at("sigma_nu_p"));
  positive(e.sigma_nu_phi, b.at("sigma_nu_phi"));
  positive(e.taper_support, b.at("taper_support"));
  positive(e.projection_length, b.at("projection_length"));
}

void read_mpc(Block b, MpcConfig& m) {
  b.integer("tau_ah", m.tau_ah);
  b.integer("k_mpc", m.k_mpc);
  b.number("rate", m.rate);
  b.number("gamma_max", m.limits.gamma_max);
  b.number("gamma_min", m.limits.gamma_min);
  b.number("steepness", m.limits.steepness);
  b.integer("particles", m.pso.particles);
  b.integer("max_iter", m.pso.max_iter);
  b.integer("stall_iter", m.pso.stall_iter);
  b.number("crosswind_limit", m.crosswind_limit);
  b.number("reach_margin", m.reach_margin);
  b.finish();
  if (m.tau_ah < 1) throw ConfigError(b.at("tau_ah"), "must be at least 1");
  if (m.k_mpc < 1 || m.k_mpc > m.tau_ah) throw ConfigError(b.at("k_mpc"), "must lie in [1, tau_ah]");
  positive(m.rate, b.at("rate"));
  if (!(m.limits.gamma_min < m.limits.gamma_max)) {
    throw ConfigError(b.at("gamma_min"), "must be below gamma_max");
  }
  positive(m.limits.steepness, b.at("steepness"));
  if (m.pso.particles < 1) throw ConfigError(b.at("particles"), "must be at least 1");
  if (m.pso.max_iter < 0) throw ConfigError(b.at("max_iter"), "must be nonnegative");
  if (m.pso.stall_iter < 1) throw ConfigError(b.at("stall_iter"), "must be at least 1");
  positive(m.crosswind_limit, b.at("crosswind_limit"));
  if (m.reach_margin < 0.0) throw ConfigError(b.at("reach_margin"), "must be nonnegative");
}

void read_reference(Block b, ReferenceSettings& r, const std::string& base_dir) {
  b.number("k_i", r.k_i);
  b.number("lut_step", r.lut_step);
  b.number("gamma_limit", r.lut.gamma_limit);
  b.number("crosswind_limit", r.lut.crosswind_limit);
  b.string("lut_file", r.lut_file);
  b.finish();
  positive(r.k_i, b.at("k_i"));
  if (!(r.lut_step > 0.0 && r.lut_step <= 90.0)) {
    throw ConfigError(b.at("lut_step"), "must lie in (0, 90]");
  }
  positive(r.lut.gamma_limit, b.at("gamma_limit"));
  positive(r.lut.crosswind_limit, b.at("crosswind_limit"));
  if (!r.lut_file.empty()) {
    r.lut_file = (std::filesystem::path(base_dir) / r.lut_file).lexically_normal().string();
  }
}

void read_plant(Block b, PlantSettings& p) {
  b.number("advection_scale", p.advection_scale);
  b.number("k_a_scale", p.k_a_scale);
  b.number("sigma_u", p.sigma_u);
  b.number("sigma_phi", p.sigma_phi);
  b.number("tau_ou", p.tau_ou);
  b.number("waked_noise_gain", p.waked_noise_gain);
  b.number("bias_gain", p.bias_gain);
  b.finish();
  positive(p.advection_scale, b.at("advection_scale"));
  positive(p.k_a_scale, b.at("k_a_scale"));
  if (p.sigma_u < 0.0) throw ConfigError(b.at("sigma_u"), "must be nonnegative");
  if (p.sigma_phi < 0.0) throw ConfigError(b.at("sigma_phi"), "must be nonnegative");
  positive(p.tau_ou, b.at("tau_ou"));
  if (p.waked_noise_gain < 0.0) throw ConfigError(b.at("waked_noise_gain"), "must be nonnegative");
}

void read_wind(Block b, WindConfig& w, const std::string& base_dir) {
  b.string("file", w.file);
  b.number("start", w.start);
  b.number("drift", w.drift);
  b.number("amplitude", w.amplitude);
  b.number("period", w.period);
  b.number("walk", w.walk);
  b.number("raw_spacing", w.raw_spacing);
  b.unsigned64("seed", w.seed);
  b.finish();
  positive(w.period, b.at("period"));
  if (w.walk < 0.0) throw ConfigError(b.at("walk"), "must be nonnegative");
  if (!(w.raw_spacing > 0.0 && w.raw_spacing <= 60.0)) {
    throw ConfigError(b.at("raw_spacing"), "must lie in (0, 60]");
  }
  if (!w.file.empty()) {
    w.file = (std::filesystem::path(base_dir) / w.file).lexically_normal().string();
  }
}

std::vector<TurbineSite> read_layout(const json& j, double unit) {
  if (!j.is_array() || j.empty()) throw ConfigError("layout", "expected a nonempty array");
  std::vector<TurbineSite> sites;
  std::set<int> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Block b(j[i], "layout[" + std::to_string(i) + "]");
    TurbineSite s;
    s.id = static_cast<int>(i);
    b.integer("id", s.id);
    b.number("x", s.x);
    b.number("y", s.y);
    b.finish();
    if (!b.has("x") || !b.has("y")) throw ConfigError(b.at("x"), "x and y are required");
    if (!ids.insert(s.id).second) throw ConfigError(b.at("id"), "duplicate turbine id");
    s.x *= unit;
    s.y *= unit;
    sites.push_back(s);
  }
  return sites;
}

json echo(const CaseConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["duration"] = c.duration;
  j["spinup"] = c.spinup;
  j["measurements"] = c.disturbed ? "disturbed" : "noise-free";
  j["controllers"] = c.controllers;
  j["layout_unit"] = "m";
  json layout = json::array();
  for (const auto& s : c.layout) layout.push_back({{"id", s.id}, {"x", s.x}, {"y", s.y}});
  j["layout"] = layout;
  const auto& t = c.model.turbine;
  j["turbine"] = {{"diameter", t.diameter},       {"hub_height", t.hub_height},
                  {"efficiency", t.efficiency},   {"yaw_exponent", t.yaw_exponent},
                  {"air_density", t.air_density}, {"induction", t.induction}};
  const auto& w = c.model.wake;
  j["wake"] = {{"alpha", w.alpha}, {"beta", w.beta}, {"k_a", w.k_a},   {"k_b", w.k_b},
               {"k_fa", w.k_fa},   {"k_fb", w.k_fb}, {"k_fc", w.k_fc}, {"k_fd", w.k_fd},
               {"k_ti", w.k_ti}};
  const auto& g = c.model.weights;
  j["weighting"] = {{"dw_phi", g.dw_phi}, {"cw_phi", g.cw_phi}, {"t_phi", g.t_phi},
                    {"dw_u", g.dw_u},     {"cw_u", g.cw_u},     {"t_u", g.t_u},
                    {"advection", g.advection}};
  const auto& s = c.model.sim;
  j["sim"] = {{"dt", s.dt},
              {"n_op", s.n_op},
              {"u_inf", s.u_inf},
              {"ti0", s.ti0},
              {"shear_exponent", c.model.shear_exponent}};
  const auto& e = c.enkf;
  j["enkf"] = {{"n_e", e.n_e},
               {"k_enkf", e.k_enkf},
               {"l_loc_phi", e.l_loc_phi},
               {"l_loc_u", e.l_loc_u},
               {"sigma_mu_u", e.sigma_mu_u},
               {"sigma_mu_phi", e.sigma_mu_phi},
               {"sigma_nu_p", e.sigma_nu_p},
               {"sigma_nu_phi", e.sigma_nu_phi},
               {"taper_support", e.taper_support},
               {"projection_length", e.projection_length}};
  const auto& m = c.mpc;
  j["mpc"] = {{"tau_ah", m.tau_ah},
              {"k_mpc", m.k_mpc},
              {"rate", m.rate},
              {"gamma_max", m.limits.gamma_max},
              {"gamma_min", m.limits.gamma_min},
              {"steepness", m.limits.steepness},
              {"particles", m.pso.particles},
              {"max_iter", m.pso.max_iter},
              {"stall_iter", m.pso.stall_iter},
              {"crosswind_limit", m.crosswind_limit},
              {"reach_margin", m.reach_margin}};
  const auto& r = c.reference;
  j["reference"] = {{"k_i", r.k_i},
                    {"lut_step", r.lut_step},
                    {"gamma_limit", r.lut.gamma_limit},
                    {"crosswind_limit", r.lut.crosswind_limit},
                    {"lut_file", r.lut_file}};
  const auto& p = c.plant;
  j["plant"] = {{"advection_scale", p.advection_scale}, {"k_a_scale", p.k_a_scale},
                {"sigma_u", p.sigma_u},                 {"sigma_phi", p.sigma_phi},
                {"tau_ou", p.tau_ou},                   {"waked_noise_gain", p.waked_noise_gain},
                {"bias_gain", p.bias_gain}};
  const auto& d = c.wind;
  j["wind"] = {{"file", d.file},          {"start", d.start},   {"drift", d.drift},
               {"amplitude", d.amplitude}, {"period", d.period}, {"walk", d.walk},
               {"raw_spacing", d.raw_spacing}, {"seed", d.seed}};
  return j;
}

}  // namespace

const std::vector<std::string>& controller_roster() {
  static const std::vector<std::string> roster{"clc-energy-500", "clc-energy-1000", "clc-shifted",
                                               "lut-2",          "lut-4",           "baseline"};
  return roster;
}

PlantConfig CaseConfig::plant_config(std::uint64_t run_seed) const {
  PlantConfig p;
  p.model = model;
  p.model.weights.advection = std::min(1.0, model.weights.advection * plant.advection_scale);
  p.model.wake.k_a = model.wake.k_a * plant.k_a_scale;
  p.u_inf = model.sim.u_inf;
  p.sigma_u = plant.sigma_u;
  p.sigma_phi = plant.sigma_phi;
  p.tau_ou = plant.tau_ou;
  p.waked_noise_gain = plant.waked_noise_gain;
  p.bias_gain = plant.bias_gain;
  p.seed = run_seed;
  return p;
}

CaseConfig parse_case_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  CaseConfig c;
  Block b(j, "");
  b.string("name", c.name);
  b.unsigned64("seed", c.seed);
  b.number("duration", c.duration);
  b.number("spinup", c.spinup);
  std::string meas = "noise-free";
  b.string("measurements", meas);
  if (meas == "disturbed") {
    c.disturbed = true;
  } else if (meas != "noise-free") {
    throw ConfigError("measurements", "expected \"noise-free\" or \"disturbed\"");
  }
  std::string unit = "m";
  b.string("layout_unit", unit);
  if (unit != "m" && unit != "D") throw ConfigError("layout_unit", "expected \"m\" or \"D\"");

  if (const json* t = b.child("turbine")) read_turbine(Block(*t, "turbine"), c.model.turbine);
  const json* layout = b.child("layout");
  if (!layout) throw ConfigError("layout", "required");
  c.layout = read_layout(*layout, unit == "D" ? c.model.turbine.diameter : 1.0);
  if (const json* w = b.child("wake")) read_wake(Block(*w, "wake"), c.model.wake);
  if (const json* w = b.child("weighting")) read_weighting(Block(*w, "weighting"), c.model.weights);
  if (const json* s = b.child("sim")) read_sim(Block(*s, "sim"), c.model.sim, c.model.shear_exponent);
  if (const json* e = b.child("enkf")) read_enkf(Block(*e, "enkf"), c.enkf);
  if (const json* m = b.child("mpc")) read_mpc(Block(*m, "mpc"), c.mpc);
  if (const json* r = b.child("reference")) {
    read_reference(Block(*r, "reference"), c.reference, base_dir);
  }
  if (const json* p = b.child("plant")) read_plant(Block(*p, "plant"), c.plant);
  if (const json* w = b.child("wind")) read_wind(Block(*w, "wind"), c.wind, base_dir);
  if (const json* r = b.child("controllers")) {
    if (!r->is_array()) throw ConfigError("controllers", "expected an array of names");
    const auto& roster = controller_roster();
    for (std::size_t i = 0; i < r->size(); ++i) {
      const json& v = (*r)[i];
      const std::string field = "controllers[" + std::to_string(i) + "]";
      if (!v.is_string()) throw ConfigError(field, "expected a string");
      const auto name = v.get<std::string>();
      if (std::find(roster.begin(), roster.end(), name) == roster.end()) {
        throw ConfigError(field, "unknown controller \"" + name + "\"");
      }
      c.controllers.push_back(name);
    }
  } else {
    c.controllers = controller_roster();
  }
  b.finish();

  positive(c.duration, "duration");
  if (c.spinup < 0.0) throw ConfigError("spinup", "must be nonnegative");
  if (c.model.sim.dt * c.mpc.tau_ah > 600.0) throw ConfigError("mpc.tau_ah", "action horizon too long");
  c.reference.lut.limits = c.mpc.limits;
  c.reference.lut.pso = c.mpc.pso;
  return c;
}

CaseConfig load_case_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_case_config(ss.str(), dir.empty() ? "." : dir.string());
}

std::string case_config_echo(const CaseConfig& cfg) { return echo(cfg).dump(2) + "\n"; }

std::string case_config_hash(const CaseConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : echo(cfg).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DirectionSeries build_wind(const CaseConfig& cfg, std::uint64_t run_seed) {
  const WindConfig& w = cfg.wind;
  if (!w.file.empty()) {
    std::ifstream in(w.file);
    if (!in) throw ConfigError("wind.file", "cannot open " + w.file);
    return read_direction_series(in);
  }
  // Synthetic raw record with jittered sampling, prepared like field data.
  const double end = cfg.spinup + cfg.duration + 120.0;
  const std::uint64_t seed = mix_seed(w.seed, run_seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.6, 1.4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> t, d;
  double time = 0.0, walk = 0.0;
  while (true) {
    const double dir = w.start + w.drift * time / 3600.0 +
                       w.amplitude * std::sin(2.0 * std::numbers::pi * time / w.period) + walk;
    t.push_back(time);
    d.push_back(wrap360(dir));
    if (time >= end) break;
    const double h = w.raw_spacing * jitter(rng);
    walk += w.walk * std::sqrt(h / 3600.0) * normal(rng);
    time += h;
  }
  DirectionSeries s = prepare_direction_series(t, d);
  s.metadata = " synthetic direction record, seed " + std::to_string(seed);
  return s;
}

}  // namespace wfc
