#include "wfc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "wfc/angles.hpp"
#include "wfc/errors.hpp"

namespace wfc {

Eigen::VectorXd sliding_energy(const Eigen::VectorXd& power, double dt, int window) {
  const Eigen::Index n = power.size();
  if (window < 1 || n < window) {
    throw DataError("trace of " + std::to_string(n) + " samples is shorter than the window of " +
                    std::to_string(window));
  }
  Eigen::VectorXd out(n - window + 1);
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = dt * power.segment(k, window).sum();
  return out;
}

double yaw_travel(const std::vector<double>& yaw) {
  double sum = 0.0;
  for (std::size_t k = 1; k < yaw.size(); ++k) sum += std::abs(wrap180(yaw[k] - yaw[k - 1]));
  return sum;
}

Quartiles quartiles(std::vector<double> v) {
  Quartiles q;
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double pos = p * (v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - i;
    return i + 1 < v.size() ? (1.0 - f) * v[i] + f * v[i + 1] : v[i];
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  return q;
}

RunMetrics run_metrics(const Eigen::MatrixXd& power, const Eigen::MatrixXd& yaw, double dt,
                       const Eigen::MatrixXd* baseline_power, int window) {
  RunMetrics m;
  for (Eigen::Index i = 0; i < power.rows(); ++i) {
    m.turbine_energy.push_back(dt * power.row(i).sum());
    std::vector<double> y(yaw.cols());
    for (Eigen::Index k = 0; k < yaw.cols(); ++k) y[k] = yaw(i, k);
    m.yaw_travel.push_back(yaw_travel(y));
  }
  const Eigen::VectorXd farm = power.colwise().sum().transpose();
  m.farm_energy = dt * farm.sum();
  if (farm.size() >= window) m.windowed_energy = sliding_energy(farm, dt, window);
  if (baseline_power && m.windowed_energy.size() > 0) {
    const Eigen::VectorXd base = baseline_power->colwise().sum().transpose();
    if (base.size() != farm.size()) throw DataError("baseline trace length differs");
    const Eigen::VectorXd wb = sliding_energy(base, dt, window);
    m.efficiency = m.windowed_energy.cwiseQuotient(wb);
    m.efficiency_quartiles =
        quartiles(std::vector<double>(m.efficiency.data(), m.efficiency.data() + m.efficiency.size()));
    m.has_baseline = true;
  }
  return m;
}

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (!(den > 0.0)) return a == b ? 1.0 : 0.0;
  return da.dot(db) / den;
}

}  // namespace

TuningMetrics tuning_report(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& model,
                            const Eigen::MatrixXd* spread, int max_lag) {
  if (reference.rows() != model.rows() || reference.cols() != model.cols()) {
    throw DataError("reference and model traces differ in shape");
  }
  if (spread && (spread->rows() != model.rows() || spread->cols() != model.cols())) {
    throw DataError("spread trace differs in shape");
  }
  const Eigen::Index nt = reference.rows(), n = reference.cols();
  if (n < 2) throw DataError("traces need at least two samples");
  const Eigen::MatrixXd err = model - reference;
  const Eigen::MatrixXd sig =
      spread ? Eigen::MatrixXd(spread->cwiseMax(1e-12)) : Eigen::MatrixXd::Ones(nt, n);

  TuningMetrics t;
  t.mean_bias = err.mean();
  t.mean_abs_error = err.cwiseAbs().mean();
  t.mean_sq_turbine_error = err.squaredNorm() / static_cast<double>(err.size());
  const Eigen::RowVectorXd farm_err = err.colwise().sum();
  t.mean_sq_farm_error = farm_err.squaredNorm() / static_cast<double>(n);
  t.farm_bias = farm_err.mean();
  t.spread_weighted_sq_error = err.cwiseQuotient(sig).squaredNorm() / static_cast<double>(err.size());

  for (Eigen::Index i = 0; i < nt; ++i) {
    TurbineTuning tt;
    tt.bias = err.row(i).mean();
    tt.abs_error = err.row(i).cwiseAbs().mean();
    tt.weighted_error = err.row(i).cwiseAbs().cwiseQuotient(sig.row(i)).mean();
    tt.best_correlation = -2.0;
    const int lag_limit = static_cast<int>(std::min<Eigen::Index>(max_lag, n - 2));
    for (int lag = -lag_limit; lag <= lag_limit; ++lag) {
      // corr(reference[t], model[t + lag]) over the overlap.
      const Eigen::Index len = n - std::abs(lag);
      const Eigen::Index r0 = lag >= 0 ? 0 : -lag;
      const Eigen::Index m0 = lag >= 0 ? lag : 0;
      const double c = correlation(reference.row(i).segment(r0, len).transpose(),
                                   model.row(i).segment(m0, len).transpose());
      if (c > tt.best_correlation + 1e-12 ||
          (std::abs(c - tt.best_correlation) <= 1e-12 && std::abs(lag) < std::abs(tt.best_lag))) {
        tt.best_correlation = c;
        tt.best_lag = lag;
      }
    }
    t.turbines.push_back(tt);
  }
  return t;
}

std::string TuningMetrics::to_json() const {
  nlohmann::json j;
  j["mean_bias"] = mean_bias;
  j["mean_abs_error"] = mean_abs_error;
  j["mean_sq_turbine_error"] = mean_sq_turbine_error;
  j["mean_sq_farm_error"] = mean_sq_farm_error;
  j["farm_bias"] = farm_bias;
  j["spread_weighted_sq_error"] = spread_weighted_sq_error;
  j["turbines"] = nlohmann::json::array();
  for (const auto& tt : turbines) {
    j["turbines"].push_back({{"best_correlation", tt.best_correlation},
                             {"best_lag", tt.best_lag},
                             {"bias", tt.bias},
                             {"abs_error", tt.abs_error},
                             {"weighted_error", tt.weighted_error}});
  }
  return j.dump(2);
}

}  // namespace wfc
