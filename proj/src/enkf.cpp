#include "wfc/enkf.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "wfc/angles.hpp"
#include "wfc/errors.hpp"

namespace wfc {

namespace {

constexpr double kCutoff = 11.5;

double circular_mean(const Eigen::RowVectorXd& deg) {
  CircularMean m;
  for (Eigen::Index i = 0; i < deg.size(); ++i) m.add(deg(i));
  return m.mean();
}

// Anomalies around the (circular) ensemble mean.
Eigen::MatrixXd anomalies(const Eigen::MatrixXd& X, bool circular) {
  Eigen::MatrixXd A(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (circular) {
      const double m = circular_mean(X.row(i));
      for (Eigen::Index e = 0; e < X.cols(); ++e) A(i, e) = wrap180(X(i, e) - m);
    } else {
      A.row(i) = X.row(i).array() - X.row(i).mean();
    }
  }
  return A;
}

double spread(const Eigen::MatrixXd& A) {
  if (A.cols() < 2 || A.rows() == 0) return 0.0;
  return std::sqrt(A.squaredNorm() / (A.rows() * (A.cols() - 1.0)));
}

}  // namespace

double mode_interval(int mode) {
  switch (mode) {
    case 1:
    case 2:
      return 15.0;
    case 3:
      return 5.0;
    case 4:
      return 60.0;
  }
  throw ConfigError("measurement.mode", "must be 1, 2, 3 or 4");
}

double mode_window(int mode) {
  mode_interval(mode);
  return mode == 2 || mode == 4 ? 60.0 : 0.0;
}

void EnkfConfig::validate() const {
  if (n_e < 2) throw ConfigError("enkf.n_e", "must be at least 2");
  if (k_enkf < 1) throw ConfigError("enkf.k_enkf", "must be at least 1");
  if (!(l_loc_phi > 0.0)) throw ConfigError("enkf.l_loc_phi", "must be positive");
  if (!(l_loc_u > 0.0)) throw ConfigError("enkf.l_loc_u", "must be positive");
  if (sigma_mu_u < 0.0 || sigma_mu_phi < 0.0 || sigma_nu_p < 0.0 || sigma_nu_phi < 0.0) {
    throw ConfigError("enkf.sigma", "noise levels must be nonnegative");
  }
  if (!(taper_support > 0.0)) throw ConfigError("enkf.taper_support", "must be positive");
  if (!(projection_length > 0.0)) throw ConfigError("enkf.projection_length", "must be positive");
}

CommonNodes common_nodes(const FarmState& reference) {
  CommonNodes nodes;
  for (int c = 0; c < reference.size(); ++c) {
    const auto& chain = reference.chains[c];
    for (int m = 0; m < static_cast<int>(chain.size()); ++m) {
      nodes.position.push_back({chain[m].bx, chain[m].by});
      nodes.index.emplace_back(c, m);
    }
  }
  return nodes;
}

ProjectionMatrix projection_weights(const FarmState& ensemble, const CommonNodes& nodes,
                                    double length) {
  std::vector<int> offset(ensemble.size() + 1, 0);
  for (int c = 0; c < ensemble.size(); ++c) {
    offset[c + 1] = offset[c] + static_cast<int>(ensemble.chains[c].size());
  }
  const double inv = 1.0 / (2.0 * length * length);
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < nodes.size(); ++r) {
    const auto [c, m0] = nodes.index[r];
    const auto& chain = ensemble.chains[c];
    const int n = static_cast<int>(chain.size());
    const Vec2 p = nodes.position[r];
    const int start = std::min(m0, n - 1);
    std::vector<std::pair<int, double>> row;
    double total = 0.0, best = std::numeric_limits<double>::infinity();
    int nearest = start;
    for (int dir = -1; dir <= 1; dir += 2) {
      for (int j = (dir < 0 ? start : start + 1); j >= 0 && j < n; j += dir) {
        const double dx = chain[j].bx - p.x, dy = chain[j].by - p.y;
        const double e = (dx * dx + dy * dy) * inv;
        if (e < best) {
          best = e;
          nearest = j;
        }
        if (e > kCutoff) {
          // Points are ordered along the chain; stop once past the node.
          if (std::abs(j - start) > 2) break;
          continue;
        }
        const double w = std::exp(-e);
        row.emplace_back(j, w);
        total += w;
      }
    }
    if (total < 1e-30) {
      trip.emplace_back(r, offset[c] + nearest, 1.0);
      continue;
    }
    for (const auto& [j, w] : row) trip.emplace_back(r, offset[c] + j, w / total);
  }
  ProjectionMatrix W(nodes.size(), offset.back());
  W.setFromTriplets(trip.begin(), trip.end());
  return W;
}

CommonValues project(const FarmState& ensemble, const CommonNodes& nodes, double length) {
  const ProjectionMatrix W = projection_weights(ensemble, nodes, length);
  Eigen::VectorXd u(W.cols()), c(W.cols()), s(W.cols());
  int k = 0;
  for (const auto& chain : ensemble.chains) {
    for (const auto& op : chain) {
      u(k) = op.u;
      c(k) = std::cos(deg2rad(op.phi));
      s(k) = std::sin(deg2rad(op.phi));
      ++k;
    }
  }
  CommonValues out;
  out.u = W * u;
  const Eigen::VectorXd cm = W * c, sm = W * s;
  out.phi.resize(nodes.size());
  for (int r = 0; r < nodes.size(); ++r) out.phi(r) = wrap360(rad2deg(std::atan2(sm(r), cm(r))));
  return out;
}

MeasurementPrediction predict_measurements(const FarmState& ensemble) {
  MeasurementPrediction m;
  m.power.resize(ensemble.size());
  m.phi.resize(ensemble.size());
  for (int i = 0; i < ensemble.size(); ++i) {
    m.power(i) = ensemble.turbines[i].power * 1e-6;
    m.phi(i) = ensemble.turbines[i].phi_bg;
  }
  return m;
}

double localization(double distance, double l, double support) {
  if (distance > support * l) return 0.0;
  return std::exp(-distance * distance / (2.0 * l * l));
}

Analysis enkf_analysis(const Eigen::MatrixXd& X, const Eigen::MatrixXd& HX,
                       const Eigen::VectorXd& y, const Eigen::MatrixXd& R,
                       const Eigen::MatrixXd& rho_xy, const Eigen::MatrixXd& rho_yy,
                       const Eigen::MatrixXd& perturbation, bool circular) {
  const Eigen::Index ne = X.cols();
  const Eigen::Index m = HX.rows();
  const Eigen::MatrixXd Ax = anomalies(X, circular);
  const Eigen::MatrixXd Ay = anomalies(HX, circular);
  const double norm = 1.0 / static_cast<double>(ne - 1);
  const Eigen::MatrixXd Cxy = (Ax * Ay.transpose() * norm).cwiseProduct(rho_xy);
  Eigen::MatrixXd S = (Ay * Ay.transpose() * norm).cwiseProduct(rho_yy) + R;

  double loading = 1e-8 * S.trace() / static_cast<double>(m);
  if (!(loading > 0.0)) loading = 1e-12;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0; attempt < 8; ++attempt) {
    llt.compute(S + loading * Eigen::MatrixXd::Identity(m, m));
    if (llt.info() == Eigen::Success) break;
    loading *= 1e3;
  }
  if (llt.info() != Eigen::Success) throw DataError("innovation covariance is not positive definite");

  Analysis a;
  a.gain = llt.solve(Cxy.transpose()).transpose();
  Eigen::MatrixXd D(m, ne);
  for (Eigen::Index e = 0; e < ne; ++e) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = y(i) + perturbation(i, e) - HX(i, e);
      D(i, e) = circular ? wrap180(d) : d;
    }
  }
  a.innovation_norm = D.rowwise().mean().norm();
  a.increment = a.gain * D;
  return a;
}

std::string AssimilationDiagnostics::to_json() const {
  nlohmann::json j;
  j["time"] = time;
  j["nodes"] = nodes;
  j["innovation_u"] = innovation_u;
  j["innovation_phi"] = innovation_phi;
  j["spread_u"] = spread_u;
  j["spread_phi"] = spread_phi;
  j["gain_u"] = gain_u;
  j["gain_phi"] = gain_phi;
  return j.dump();
}

AssimilationDiagnostics assimilate(std::vector<FarmState>& ensembles, const MeasurementFrame& frame,
                                   const FlowModel& model, const EnkfConfig& cfg,
                                   std::mt19937_64& rng) {
  const int ne = static_cast<int>(ensembles.size());
  if (ne < 2) throw ConfigError("enkf.n_e", "assimilation needs at least two ensembles");
  const FarmState& ref = ensembles[0];
  const int nt = ref.size();
  const CommonNodes nodes = common_nodes(ref);
  const int N = nodes.size();
  std::normal_distribution<double> normal(0.0, 1.0);

  // Process noise enters the OP states, so predicted measurements carry the
  // perturbation as well.
  if (cfg.sigma_mu_u > 0.0 || cfg.sigma_mu_phi > 0.0) {
    for (auto& s : ensembles) {
      for (auto& chain : s.chains) {
        for (auto& op : chain) {
          if (cfg.sigma_mu_u > 0.0) op.u = std::max(0.0, op.u + cfg.sigma_mu_u * normal(rng));
          if (cfg.sigma_mu_phi > 0.0) op.phi = wrap360(op.phi + cfg.sigma_mu_phi * normal(rng));
        }
      }
      refresh_turbines(s, model);
    }
  }
  Eigen::MatrixXd U(N, ne), P(N, ne), HU(nt, ne), HP(nt, ne);
  for (int e = 0; e < ne; ++e) {
    const CommonValues v = project(ensembles[e], nodes, cfg.projection_length);
    U.col(e) = v.u;
    P.col(e) = v.phi;
    const MeasurementPrediction h = predict_measurements(ensembles[e]);
    HU.col(e) = h.power;
    HP.col(e) = h.phi;
  }

  const double D = model.turbine.diameter;
  Eigen::MatrixXd dist_xy(N, nt), dist_yy(nt, nt);
  for (int r = 0; r < N; ++r) {
    for (int t = 0; t < nt; ++t) {
      dist_xy(r, t) = std::hypot(nodes.position[r].x - ref.sites[t].x,
                                 nodes.position[r].y - ref.sites[t].y);
    }
  }
  for (int a = 0; a < nt; ++a) {
    for (int b = 0; b < nt; ++b) {
      dist_yy(a, b) = std::hypot(ref.sites[a].x - ref.sites[b].x, ref.sites[a].y - ref.sites[b].y);
    }
  }
  auto taper = [&](const Eigen::MatrixXd& d, double l) {
    return d.unaryExpr([&](double x) { return localization(x, l, cfg.taper_support); }).eval();
  };

  AssimilationDiagnostics diag;
  diag.time = frame.time;
  diag.nodes = N;
  Eigen::MatrixXd inc_u = Eigen::MatrixXd::Zero(N, ne);
  Eigen::MatrixXd inc_p = Eigen::MatrixXd::Zero(N, ne);

  if (frame.has_power()) {
    Eigen::VectorXd y(nt);
    for (int t = 0; t < nt; ++t) y(t) = frame.power[t] * 1e-6;
    Eigen::MatrixXd pert(nt, ne);
    for (int e = 0; e < ne; ++e)
      for (int t = 0; t < nt; ++t) pert(t, e) = cfg.sigma_nu_p * normal(rng);
    const Eigen::MatrixXd R =
        Eigen::MatrixXd::Identity(nt, nt) * (cfg.sigma_nu_p * cfg.sigma_nu_p);
    const Analysis a = enkf_analysis(U, HU, y, R, taper(dist_xy, cfg.l_loc_u * D),
                                     taper(dist_yy, cfg.l_loc_u * D), pert, false);
    inc_u += a.increment;
    diag.innovation_u = a.innovation_norm;
    diag.gain_u = a.gain.norm();
  }
  {
    const auto& phi = frame.phi();
    Eigen::VectorXd y(nt);
    for (int t = 0; t < nt; ++t) y(t) = phi[t];
    Eigen::MatrixXd pert(nt, ne);
    for (int e = 0; e < ne; ++e)
      for (int t = 0; t < nt; ++t) pert(t, e) = cfg.sigma_nu_phi * normal(rng);
    const Eigen::MatrixXd R =
        Eigen::MatrixXd::Identity(nt, nt) * (cfg.sigma_nu_phi * cfg.sigma_nu_phi);
    const Analysis a = enkf_analysis(P, HP, y, R, taper(dist_xy, cfg.l_loc_phi * D),
                                     taper(dist_yy, cfg.l_loc_phi * D), pert, true);
    inc_p += a.increment;
    diag.innovation_phi = a.innovation_norm;
    diag.gain_phi = a.gain.norm();
  }
  diag.spread_u = spread(anomalies(U, false));
  diag.spread_phi = spread(anomalies(P, true));

  for (int e = 0; e < ne; ++e) {
    FarmState& s = ensembles[e];
    for (int r = 0; r < N; ++r) {
      const auto [c, m] = nodes.index[r];
      if (m >= static_cast<int>(s.chains[c].size())) continue;
      ObservationPoint& op = s.chains[c][m];
      op.u = std::max(0.0, op.u + inc_u(r, e));
      op.phi = wrap360(op.phi + inc_p(r, e));
    }
    refresh_turbines(s, model);
  }
  return diag;
}

FarmState ensemble_mean_state(const std::vector<FarmState>& ensembles, const FlowModel& model) {
  FarmState mean = ensembles.front();
  const int ne = static_cast<int>(ensembles.size());
  if (ne == 1) return mean;
  // Means are formed as reference + mean deviation so that identical
  // ensembles reproduce the reference exactly.
  for (int c = 0; c < mean.size(); ++c) {
    auto& chain = mean.chains[c];
    for (int m = 0; m < static_cast<int>(chain.size()); ++m) {
      ObservationPoint& op = chain[m];
      double du = 0.0, dua = 0.0, dp = 0.0, dpa = 0.0;
      int count = 0;
      for (const auto& e : ensembles) {
        if (m >= static_cast<int>(e.chains[c].size())) continue;
        const auto& o = e.chains[c][m];
        du += o.u - op.u;
        dua += o.u_adv - op.u_adv;
        dp += wrap180(o.phi - op.phi);
        dpa += wrap180(o.phi_adv - op.phi_adv);
        ++count;
      }
      op.u += du / count;
      op.u_adv += dua / count;
      op.phi = wrap360(op.phi + dp / count);
      op.phi_adv = wrap360(op.phi_adv + dpa / count);
      const double r = deg2rad(op.phi_adv);
      op.vx = model.weights.advection * op.u_adv * std::cos(r);
      op.vy = model.weights.advection * op.u_adv * std::sin(r);
    }
  }
  for (int i = 0; i < mean.size(); ++i) {
    TurbineState& t = mean.turbines[i];
    double du = 0.0, dp = 0.0;
    for (const auto& e : ensembles) {
      du += e.turbines[i].u_bg - t.u_bg;
      dp += wrap180(e.turbines[i].phi_bg - t.phi_bg);
    }
    t.u_bg += du / ne;
    t.phi_bg = wrap360(t.phi_bg + dp / ne);
  }
  refresh_power(mean, model);
  return mean;
}

}  // namespace wfc
