#include "wfc/pso.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wfc/errors.hpp"

namespace wfc {

void PsoConfig::validate() const {
  if (particles < 1) throw ConfigError("pso.particles", "must be at least 1");
  if (max_iter < 0) throw ConfigError("pso.max_iter", "must be nonnegative");
  if (stall_iter < 1) throw ConfigError("pso.stall_iter", "must be at least 1");
}

PsoResult pso_minimize(const CostFunction& cost, int dim, const PsoConfig& cfg,
                       const std::vector<Eigen::VectorXd>& initial) {
  if (dim < 1) throw ConfigError("pso.dim", "dimension must be at least 1");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = cfg.particles;

  Eigen::MatrixXd x(dim, n), v(dim, n), best_x(dim, n);
  Eigen::VectorXd best_f(n);
  for (int p = 0; p < n; ++p) {
    for (int d = 0; d < dim; ++d) x(d, p) = unit(rng);
    if (p < static_cast<int>(initial.size())) x.col(p) = initial[p].cwiseMax(0.0).cwiseMin(1.0);
    for (int d = 0; d < dim; ++d) v(d, p) = 0.5 * (unit(rng) - x(d, p));
  }

  PsoResult res;
  int g = 0;
  for (int p = 0; p < n; ++p) {
    best_f(p) = cost(x.col(p));
    ++res.evaluations;
    if (best_f(p) < best_f(g)) g = p;
  }
  best_x = x;
  res.history.push_back(best_f(g));

  int stall = 0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double before = best_f(g);
    for (int p = 0; p < n; ++p) {
      for (int d = 0; d < dim; ++d) {
        const double r1 = unit(rng), r2 = unit(rng);
        v(d, p) = cfg.inertia * v(d, p) + cfg.cognitive * r1 * (best_x(d, p) - x(d, p)) +
                  cfg.social * r2 * (best_x(d, g) - x(d, p));
        x(d, p) += v(d, p);
        if (x(d, p) < 0.0) {
          x(d, p) = 0.0;
          v(d, p) = 0.0;
        } else if (x(d, p) > 1.0) {
          x(d, p) = 1.0;
          v(d, p) = 0.0;
        }
      }
    }
    for (int p = 0; p < n; ++p) {
      const double f = cost(x.col(p));
      ++res.evaluations;
      if (f < best_f(p)) {
        best_f(p) = f;
        best_x.col(p) = x.col(p);
      }
    }
    for (int p = 0; p < n; ++p) {
      if (best_f(p) < best_f(g)) g = p;
    }
    ++res.iterations;
    res.history.push_back(best_f(g));
    const double gain = before - best_f(g);
    if (gain <= cfg.stall_tol * std::max(1.0, std::abs(before))) {
      if (++stall >= cfg.stall_iter) break;
    } else {
      stall = 0;
    }
  }
  res.theta = best_x.col(g);
  res.cost = best_f(g);
  return res;
}

}  // namespace wfc
