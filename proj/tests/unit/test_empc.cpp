#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "wfc/angles.hpp"
#include "wfc/empc.hpp"
#include "wfc/errors.hpp"
#include "wfc/pso.hpp"

namespace {

constexpr double kD = 178.4;

wfc::PsoConfig swarm(std::uint64_t seed = 3) {
  wfc::PsoConfig c;
  c.seed = seed;
  return c;
}

// Weakly connected components by repeated transitive closure of the
// pairwise test, without union-find.
std::vector<std::vector<int>> closure_groups(const std::vector<wfc::TurbineSite>& s, double phi,
                                             double limit) {
  const int n = static_cast<int>(s.size());
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  const double c = std::cos(phi * M_PI / 180.0), sn = std::sin(phi * M_PI / 180.0);
  for (int i = 0; i < n; ++i) {
    reach[i][i] = 1;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = s[j].x - s[i].x, dy = s[j].y - s[i].y;
      if (dx * c + dy * sn > 0.0 && std::abs(-dx * sn + dy * c) <= limit) reach[i][j] = reach[j][i] = 1;
    }
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = 1;
  std::set<std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    std::vector<int> g;
    for (int j = 0; j < n; ++j)
      if (reach[i][j]) g.push_back(j);
    out.insert(g);
  }
  return {out.begin(), out.end()};
}

}  // namespace

TEST(Pso, SphereMinimum) {
  const auto r = wfc::pso_minimize(
      [](const Eigen::VectorXd& x) { return (x.array() - 0.3).square().sum(); }, 2, swarm());
  EXPECT_LT(r.cost, 1e-3);
  EXPECT_NEAR(r.theta(0), 0.3, 0.05);
  EXPECT_NEAR(r.theta(1), 0.3, 0.05);
}

TEST(Pso, OneDimensionalQuadratic) {
  const auto r = wfc::pso_minimize(
      [](const Eigen::VectorXd& x) { return 3.0 * (x(0) - 0.72) * (x(0) - 0.72) + 1.0; }, 1,
      swarm());
  EXPECT_LT(std::abs(r.theta(0) - 0.72), 1e-2);
}

TEST(Pso, BoundaryOptimumStaysInBox) {
  const auto r = wfc::pso_minimize([](const Eigen::VectorXd& x) { return -x.sum(); }, 3, swarm());
  for (int d = 0; d < 3; ++d) {
    EXPECT_GE(r.theta(d), 0.0);
    EXPECT_LE(r.theta(d), 1.0);
  }
  EXPECT_NEAR(r.cost, -3.0, 1e-6);
}

TEST(Pso, NeverEvaluatesOutsideBox) {
  bool outside = false;
  wfc::pso_minimize(
      [&](const Eigen::VectorXd& x) {
        if ((x.array() < 0.0).any() || (x.array() > 1.0).any()) outside = true;
        return std::sin(20.0 * x(0)) + x(1);
      },
      2, swarm());
  EXPECT_FALSE(outside);
}

TEST(Pso, SeededRunsAreIdentical) {
  auto f = [](const Eigen::VectorXd& x) { return std::cos(9 * x(0)) * std::sin(7 * x(1)); };
  const auto a = wfc::pso_minimize(f, 2, swarm(11));
  const auto b = wfc::pso_minimize(f, 2, swarm(11));
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_EQ(a.history, b.history);
}

TEST(Pso, StallsOnFlatCost) {
  const auto r = wfc::pso_minimize([](const Eigen::VectorXd&) { return 1.0; }, 2, swarm());
  EXPECT_EQ(r.iterations, 4);
  EXPECT_EQ(r.evaluations, 5 * 100);
}

TEST(Pso, IterationCap) {
  auto c = swarm();
  c.stall_iter = 100;
  int calls = 0;
  wfc::pso_minimize([&](const Eigen::VectorXd& x) { ++calls; return x.norm(); }, 2, c);
  EXPECT_EQ(calls, 21 * 100);
}

TEST(Pso, InitialParticleIsUsed) {
  // A needle only the seeded particle can find.
  const auto r = wfc::pso_minimize(
      [](const Eigen::VectorXd& x) { return (x - Eigen::Vector2d(0.5, 0.5)).norm() < 1e-12 ? -1.0 : 0.0; },
      2, swarm(), {Eigen::Vector2d(0.5, 0.5)});
  EXPECT_EQ(r.cost, -1.0);
}

TEST(Basis, SteadyAtCentre) {
  for (double o2 : {0.0, 0.3, 1.0}) {
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      EXPECT_EQ(wfc::basis_psi({0.5, o2, 100.0, 0.3}, t), 0.0);
    }
  }
}

TEST(Basis, FullRateReachesThirtyDegrees) {
  for (double o2 : {0.0, 0.5, 1.0}) EXPECT_NEAR(wfc::basis_psi({1.0, o2, 100.0, 0.3}, 1.0), 30.0, 1e-9);
  EXPECT_NEAR(wfc::basis_psi({0.0, 0.2, 100.0, 0.3}, 1.0), -30.0, 1e-9);
}

TEST(Basis, HandEvaluatedPoint) {
  // t_s = 0.25, saturation argument 0.5, amplitude 0.5 * 30 deg.
  EXPECT_NEAR(wfc::basis_psi({0.75, 0.5, 100.0, 0.3}, 0.5), 7.5, 1e-9);
}

TEST(Basis, ParametersAreClamped) {
  EXPECT_EQ(wfc::basis_psi({1.4, 0.5, 100.0, 0.3}, 1.0), wfc::basis_psi({1.0, 0.5, 100.0, 0.3}, 1.0));
}

TEST(Trajectory, RateFeasibleEverywhere) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const wfc::YawBasisParams p{u(rng), u(rng), 100.0, 0.3};
    const auto t = wfc::trajectory(p, 10.0, 40, 5.0);
    ASSERT_EQ(t.size(), 41u);
    EXPECT_EQ(t[0], 10.0);
    for (std::size_t k = 1; k < t.size(); ++k) EXPECT_LE(std::abs(t[k] - t[k - 1]), 1.5 + 1e-9);
    for (std::size_t k = 21; k < t.size(); ++k) EXPECT_EQ(t[k], t[20]);
  }
}

TEST(Trajectory, ConstantAtCentreAndRampAtFullRate) {
  const auto flat = wfc::trajectory({0.5, 0.9, 100.0, 0.3}, 3.0, 20, 5.0);
  for (double v : flat) EXPECT_EQ(v, 3.0);
  const auto ramp = wfc::trajectory({1.0, 0.4, 100.0, 0.3}, 0.0, 20, 5.0);
  for (int k = 0; k <= 20; ++k) EXPECT_NEAR(ramp[k], 1.5 * k, 1e-9);
}

TEST(Trajectory, DelayedRampMatchesBasisPointwise) {
  const wfc::YawBasisParams p{0.6, 1.0, 100.0, 0.3};
  const auto t = wfc::trajectory(p, 0.0, 20, 5.0);
  for (int k = 0; k <= 20; ++k) {
    EXPECT_NEAR(t[k], wfc::basis_psi(p, k / 20.0), 1e-12);
    if (k <= 16) EXPECT_NEAR(t[k], 0.0, 1e-12);  // flat until t_s = 0.8
  }
  EXPECT_GT(t[20], t[17]);
}

TEST(Decompose, PerpendicularWindSplits) {
  const auto g = wfc::decompose({{0, 0, 0}, {1, 5 * kD, 0}}, {90.0, 90.0}, {8, 8}, 2 * kD, 0.7396, 5.0);
  ASSERT_EQ(g.groups.size(), 2u);
  EXPECT_FALSE(g.edge(0, 1));
  EXPECT_FALSE(g.edge(1, 0));
}

TEST(Decompose, AlignedPairFormsOneGroup) {
  const auto g = wfc::decompose({{0, 0, 0}, {1, 5 * kD, 0}}, {0.0, 0.0}, {8, 8}, 2 * kD, 0.7396, 5.0);
  ASSERT_EQ(g.groups.size(), 1u);
  EXPECT_TRUE(g.edge(0, 1));
  EXPECT_FALSE(g.edge(1, 0));
  EXPECT_EQ(g.delay(0, 1), static_cast<int>(std::lround(5 * kD / (0.7396 * 8 * 5))));
}

TEST(Decompose, PaperPairDelayIsTwentySteps) {
  const auto g = wfc::decompose({{0, 0, 0}, {1, 800, 0}}, {0.0, 0.0}, {8, 8}, 2 * kD, 1.0, 5.0);
  EXPECT_EQ(g.delay(0, 1), 20);
}

TEST(Decompose, MatchesClosureOracleOnRandomLayouts) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0.0, 20 * kD);
  for (int t = 0; t < 40; ++t) {
    std::vector<wfc::TurbineSite> s;
    for (int i = 0; i < 8; ++i) s.push_back({i, pos(rng), pos(rng)});
    for (double phi = 0.0; phi < 360.0; phi += 30.0) {
      const auto g = wfc::decompose(s, std::vector<double>(8, phi), std::vector<double>(8, 8.0),
                                    2 * kD, 0.7396, 5.0);
      EXPECT_EQ(g.groups, closure_groups(s, phi, 2 * kD));
    }
  }
}

TEST(Decompose, RotationDissolvesGroup) {
  const std::vector<wfc::TurbineSite> s{{0, 0, 0}, {1, 5 * kD, 0}};
  EXPECT_EQ(wfc::decompose(s, {0, 0}, {8, 8}, 2 * kD, 0.74, 5).groups.size(), 1u);
  EXPECT_EQ(wfc::decompose(s, {90, 90}, {8, 8}, 2 * kD, 0.74, 5).groups.size(), 2u);
}

TEST(Decompose, DownstreamFirstOrder) {
  const auto g = wfc::decompose({{0, 0, 0}, {1, 5 * kD, 0}, {2, 10 * kD, 0}}, {0, 0, 0}, {8, 8, 8},
                                2 * kD, 0.74, 5);
  EXPECT_EQ(g.downstream_first({0, 1, 2}), (std::vector<int>{2, 1, 0}));
  EXPECT_EQ(g.descendants(0), (std::vector<int>{1, 2}));
}

TEST(Decompose, OpposingLocalDirectionsFormCycle) {
  const auto g = wfc::decompose({{0, 0, 0}, {1, 5 * kD, 0}}, {0.0, 180.0}, {8, 8}, 2 * kD, 0.74, 5);
  EXPECT_TRUE(g.edge(0, 1));
  EXPECT_TRUE(g.edge(1, 0));
  EXPECT_THROW(g.downstream_first({0, 1}), wfc::CycleError);
}

TEST(ShiftedEnergy, WindowBookkeeping) {
  Eigen::MatrixXd p(2, 30);
  for (int k = 0; k < 30; ++k) {
    p(0, k) = 1.0 + k;
    p(1, k) = 100.0 * (k + 1);
  }
  // Upstream window k = 1..10, downstream window k = 1 + 20 .. 10 + 20.
  double expect = 0.0;
  for (int k = 0; k < 10; ++k) expect += p(0, k) + p(1, k + 20);
  EXPECT_DOUBLE_EQ(wfc::shifted_energy(p, 0, {{1, 20}}, 10, 5.0), -5.0 * expect);
  // One more step of delay moves the downstream window by exactly one step.
  const double a = wfc::shifted_energy(p, 0, {{1, 19}}, 10, 5.0);
  const double b = wfc::shifted_energy(p, 0, {{1, 18}}, 10, 5.0);
  EXPECT_DOUBLE_EQ(a - b, -5.0 * (p(1, 28) - p(1, 18)));
}

TEST(CostEnergy, IsolatedTurbineHoldingGivesGreedyEnergy) {
  wfc::FlowModel m;
  m.sim.n_op = 30;
  const auto s = wfc::make_farm_state(m, {{0, 0, 0}}, 8.0, 0.0);
  wfc::MpcConfig cfg;
  const double j = wfc::cost_energy(s, m, cfg, Eigen::Vector2d(0.5, 0.3), 20);
  EXPECT_NEAR(j, -5.0 * 20 * s.turbines[0].power * wfc::yaw_weight(cfg.limits, 0.0),
              1e-9 * s.turbines[0].power * 100);
}

TEST(CostShifted, IsolatedTurbineReducesToEnergyOverActionHorizon) {
  wfc::FlowModel m;
  m.sim.n_op = 30;
  const auto s = wfc::make_farm_state(m, {{0, 0, 0}}, 8.0, 0.0);
  wfc::MpcConfig cfg;
  const auto g = wfc::decompose(s.sites, {0.0}, {8.0}, 2 * kD, 0.74, 5.0);
  const std::vector<std::vector<double>> fixed{std::vector<double>(cfg.tau_ah, 0.0)};
  const Eigen::Vector2d th(0.8, 0.2);
  EXPECT_NEAR(wfc::cost_shifted(s, m, cfg, g, {0}, 0, th, fixed),
              wfc::cost_energy(s, m, cfg, th, cfg.tau_ah), 1e-6);
}

TEST(ControlStep, UnwakedAlignedTurbinesStayPut) {
  wfc::FlowModel m;
  m.sim.n_op = 40;
  const auto s = wfc::make_farm_state(m, {{0, 0, 0}, {1, 0, 6 * kD}}, 8.0, 0.0);
  wfc::MpcConfig cfg;
  const auto out = wfc::control_step(s, m, cfg, 9);
  EXPECT_EQ(out.graph.groups.size(), 2u);
  for (const auto& plan : out.plans) {
    ASSERT_EQ(static_cast<int>(plan.size()), cfg.tau_ah);
    for (double o : plan) EXPECT_LE(std::abs(wfc::wrap180(o)), 1.0);
  }
}

TEST(ControlStep, PlansAreRateFeasible) {
  wfc::FlowModel m;
  m.sim.n_op = 60;
  const std::vector<double> orient{350.0, 12.0};
  const auto s = wfc::make_farm_state(m, {{0, 0, 0}, {1, 5 * kD, -0.5 * kD}}, 8.0, 0.0, &orient);
  wfc::MpcConfig cfg;
  cfg.pso.particles = 30;
  const auto out = wfc::control_step(s, m, cfg, 4);
  for (int i = 0; i < 2; ++i) {
    double prev = orient[i];
    for (double o : out.plans[i]) {
      EXPECT_LE(std::abs(wfc::wrap180(o - prev)), cfg.rate * 5.0 + 1e-9);
      prev = o;
    }
  }
  EXPECT_FALSE(out.traces.empty());
}

TEST(ControlStep, ShiftedCostSteersUpstreamTurbineTowardsPositiveMisalignment) {
  wfc::FlowModel m;
  m.sim.n_op = 60;
  auto s = wfc::make_farm_state(m, {{0, 0, 0}, {1, 5 * kD, -0.5 * kD}}, 8.0, 0.0);
  wfc::MpcConfig cfg;
  const auto out = wfc::control_step(s, m, cfg, 21);
  // Misalignment is heading minus orientation.
  EXPECT_GT(wfc::wrap180(0.0 - out.plans[0].back()), 3.0);
}

TEST(OptimizationTrace, JsonLine) {
  wfc::OptimizationTrace t{60.0, {3, 4}, 4, 5, 500, {-1.0, -2.0}, {0.5, 0.25}};
  const auto s = t.to_json();
  EXPECT_NE(s.find("\"iterations\":5"), std::string::npos);
  EXPECT_EQ(s.find('\n'), std::string::npos);
}
