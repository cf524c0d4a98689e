#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "schloegl/rhc.hpp"
#include "test_support.hpp"

using namespace schloegl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Fixture {
  test_util::SmallSystem sys;
  std::shared_ptr<const TargetTrajectory> target;
  Vector y0;
};

Fixture make_fixture(int n, int m, double dt, double horizon, ForcingSpec forcing = PeriodicIndicatorForcing{}) {
  Fixture f;
  f.sys = test_util::make_system(n, m, dt, std::move(forcing));
  const Vector yhat0 = Vector::Constant(f.sys.model->mesh.n_nodes(), 2.0);
  f.target = std::make_shared<const TargetTrajectory>(
      simulate_free(yhat0, horizon, f.sys.system.op, f.sys.system.forcing, {dt, 1, 0.0}));
  f.y0 = interpolate(f.sys.model->mesh, [](const Point& x) { return -1.0 + 0.5 * x.x * x.y; });
  return f;
}

OcpProblem make_problem(const Fixture& f, long start, long n_steps, double beta, SaturationConfig sat = {}) {
  OcpProblem p;
  p.system = f.sys.system;
  p.start_step = start;
  p.n_steps = n_steps;
  p.y0 = f.y0;
  p.target = f.target;
  p.beta = beta;
  p.sat = sat;
  return p;
}

}  // namespace

TEST(Cost, FeedbackControlsReproduceClosedLoopCost) {
  const auto f = make_fixture(8, 2, 1e-2, 0.5);
  const auto prob = make_problem(f, 0, 50, 1e-3);
  const FeedbackLaw law{20.0, {2.0, NormKind::Euclidean}};
  const DiscreteControl u = feedback_window_controls(prob, law);
  const auto closed = closed_loop_simulate(f.y0, *f.target, law, f.sys.system, {1e-2, 1, 1e-3});
  const auto ev = evaluate_cost(u, prob);
  EXPECT_NEAR(ev.cost, closed.running_cost.back(), 1e-12 * ev.cost);
  EXPECT_EQ((ev.states.back() - closed.states.back()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Cost, WindowWithHistoryContinuesThePlantBitwise) {
  const auto f = make_fixture(7, 2, 1e-2, 1.0);
  std::mt19937_64 rng(3);
  DiscreteControl u(4, 60);
  for (Eigen::Index j = 0; j < u.cols(); ++j) u.col(j) = test_util::random_field(4, rng);
  const auto plant = open_loop_simulate(f.y0, *f.target, u, f.sys.system, {1e-2, 1, 0.0});

  OcpProblem prob = make_problem(f, 20, 40, 0.0);
  prob.y0 = plant.states[20];
  prob.y_prev = plant.states[19];
  const auto ev = evaluate_cost(u.rightCols(40), prob);
  for (int n = 0; n <= 40; ++n) {
    EXPECT_EQ((ev.states[static_cast<std::size_t>(n)] - plant.states[static_cast<std::size_t>(20 + n)])
                  .cwiseAbs()
                  .maxCoeff(),
              0.0);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(12);
  for (double beta : {1e-3, 1e-5}) {
    for (bool history : {false, true}) {
      const auto f = make_fixture(6, 2, 1e-2, 0.6);
      OcpProblem prob = make_problem(f, history ? 10 : 0, 30, beta);
      if (history) prob.y_prev = f.y0 * 0.98;
      DiscreteControl u(4, 30);
      for (Eigen::Index j = 0; j < u.cols(); ++j) u.col(j) = test_util::random_field(4, rng, 3.0);
      const DiscreteControl g = cost_gradient(u, prob);
      for (int trial = 0; trial < 5; ++trial) {
        DiscreteControl d(4, 30);
        for (Eigen::Index j = 0; j < d.cols(); ++j) d.col(j) = test_util::random_field(4, rng);
        const double eps = 1e-4;
        const double fd = (evaluate_cost(u + eps * d, prob).cost - evaluate_cost(u - eps * d, prob).cost) / (2 * eps);
        const double exact = (g.array() * d.array()).sum();
        EXPECT_LT(std::abs(fd - exact), 1e-6 * std::abs(exact)) << "beta " << beta << " history " << history;
      }
    }
  }
}

TEST(Projection, AdmissibleSet) {
  DiscreteControl u(2, 3);
  u << 3.0, 0.1, -10.0, 4.0, 0.2, 1.0;
  const DiscreteControl e = project_admissible(u, {2.5, NormKind::Euclidean});
  EXPECT_NEAR(e.col(0).norm(), 2.5, 1e-15);
  EXPECT_EQ(e.col(1), u.col(1));
  EXPECT_NEAR(e(0, 0) / e(1, 0), 0.75, 1e-15);
  const DiscreteControl m = project_admissible(u, {2.5, NormKind::Max});
  EXPECT_EQ(m(0, 0), 2.5);
  EXPECT_EQ(m(1, 0), 2.5);
  EXPECT_EQ(m(0, 2), -2.5);
  EXPECT_EQ(m(1, 2), 1.0);
  EXPECT_EQ(project_admissible(m, {2.5, NormKind::Max}), m);
  EXPECT_EQ(project_admissible(u, {kInf, NormKind::Max}), u);
  EXPECT_DOUBLE_EQ(time_inner(u, u, 0.5), 0.5 * u.squaredNorm());
}

TEST(Optimizer, DecreasesCostAndStaysAdmissible) {
  const auto f = make_fixture(8, 2, 1e-2, 0.5);
  const SaturationConfig sat{3.0, NormKind::Max};
  const auto prob = make_problem(f, 0, 50, 1e-3, sat);
  const DiscreteControl u0 = feedback_window_controls(prob, {175.0, sat});
  const OptimizerResult res = bb_projected_gradient(prob, u0);
  EXPECT_TRUE(res.converged);
  EXPECT_LT(res.cost, res.initial_cost);
  EXPECT_LE(res.u.cwiseAbs().maxCoeff(), 3.0);
  EXPECT_NEAR(evaluate_cost(res.u, prob).cost, res.cost, 1e-12 * res.cost);
}

TEST(Optimizer, UnconstrainedStationarity) {
  const auto f = make_fixture(6, 1, 1e-2, 0.3, ZeroForcing{});
  const auto prob = make_problem(f, 0, 30, 1e-2);
  OptimizerSettings s;
  s.tol = 1e-9;
  s.max_iterations = 2000;
  const OptimizerResult res = bb_projected_gradient(prob, DiscreteControl::Zero(1, 30), s);
  const DiscreteControl g = cost_gradient(res.u, prob);
  const DiscreteControl g0 = cost_gradient(DiscreteControl::Zero(1, 30), prob);
  EXPECT_LT(g.norm(), 1e-4 * g0.norm());
}

TEST(Rhc, TotalCostAndWindowCount) {
  const auto sys = test_util::make_system(6, 2, 1e-2, PeriodicIndicatorForcing{});
  RhcConfig cfg;
  cfg.delta = 0.1;
  cfg.horizon = 0.25;
  cfg.t_inf = 0.5;
  cfg.beta = 1e-3;
  cfg.sat = {2.0, NormKind::Max};
  const auto target = std::make_shared<const TargetTrajectory>(
      simulate_free(Vector::Constant(sys.model->mesh.n_nodes(), 2.0), rhc_target_horizon(cfg), sys.system.op,
                    sys.system.forcing, {1e-2, 1, 0.0}));
  const Vector y0 = Vector::Constant(sys.model->mesh.n_nodes(), -1.0);
  const RhcResult res = run_rhc(cfg, y0, target, sys.system, 1);
  ASSERT_EQ(res.windows.size(), 5u);
  EXPECT_EQ(res.plant.n_steps(), 50);
  EXPECT_LE(res.plant.controls.cwiseAbs().maxCoeff(), 2.0);
  const auto replay = open_loop_simulate(y0, *target, res.plant.controls, sys.system, {1e-2, 1, 1e-3}, NormKind::Max);
  EXPECT_EQ((replay.states.back() - res.plant.states.back()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(replay.running_cost.back(), res.total_cost);

  const auto sat = closed_loop_simulate(y0, *target, {175.0, cfg.sat}, sys.system, {1e-2, 1, 1e-3}, 0.5);
  EXPECT_LE(res.total_cost, sat.running_cost.back());
}

TEST(Rhc, ConfigValidation) {
  RhcConfig cfg;
  cfg.delta = 0.3;
  cfg.t_inf = 1.0;
  EXPECT_THROW(cfg.validate(1e-2), std::invalid_argument);
  cfg.delta = 0.5;
  cfg.horizon = 0.25;
  EXPECT_THROW(cfg.validate(1e-2), std::invalid_argument);
  cfg.horizon = 1.25;
  EXPECT_NO_THROW(cfg.validate(1e-2));
  EXPECT_DOUBLE_EQ(rhc_target_horizon(cfg), 1.75);
}

namespace {

// One-step window: y^1 = y^0 + A^{-1}(r + B u) is affine in u, so the cost
// k/2 ||y^1 - yhat^1||^2 + beta k |u|^2 (+ const) is quadratic. Solved densely.
struct OneStep {
  Fixture f;
  OcpProblem prob;
  Eigen::VectorXd u_star;
};

OneStep one_step_problem() {
  OneStep o{make_fixture(5, 2, 1e-2, 0.01, ZeroForcing{}), {}, {}};
  o.prob = make_problem(o.f, 0, 1, 1e-2);
  const Model& model = *o.f.sys.model;
  const double k = 1e-2;
  const Eigen::MatrixXd mass(model.mass);
  const Eigen::MatrixXd a = mass / k + 0.5 * Eigen::MatrixXd(model.stiffness);
  const Eigen::MatrixXd b(o.f.sys.system.coupling->b);
  const Vector rest = -(Eigen::MatrixXd(model.stiffness) * o.f.y0) - mass * cubic_reaction(o.f.y0, model.params);
  const Eigen::LDLT<Eigen::MatrixXd> fact(a);
  const Eigen::MatrixXd s = fact.solve(b);
  const Vector offset = o.f.y0 + fact.solve(rest) - o.f.target->states[1];
  const Eigen::MatrixXd h = 0.5 * k * 2.0 * s.transpose() * mass * s + 2.0 * o.prob.beta * k * Eigen::MatrixXd::Identity(4, 4);
  o.u_star = h.ldlt().solve(-(k * s.transpose() * mass * offset));
  return o;
}

}  // namespace

TEST(Optimizer, MatchesDenseOptimumOfOneStepProblem) {
  const auto o = one_step_problem();
  OptimizerSettings s;
  s.tol = 1e-12;
  const OptimizerResult res = bb_projected_gradient(o.prob, DiscreteControl::Zero(4, 1), s);
  // Cost values resolve u only to about sqrt(eps J / H) near the optimum.
  EXPECT_LT((res.u.col(0) - o.u_star).norm(), 1e-5 * o.u_star.norm());
  const double g0 = cost_gradient(DiscreteControl::Zero(4, 1), o.prob).norm();
  EXPECT_LT(cost_gradient(res.u, o.prob).norm(), 1e-5 * g0);
  EXPECT_LT(cost_gradient(DiscreteControl(o.u_star), o.prob).norm(), 1e-12 * g0);
}

TEST(Optimizer, StopsAtOnceWhenStartedAtTheOptimum) {
  const auto o = one_step_problem();
  const OptimizerResult res = bb_projected_gradient(o.prob, DiscreteControl(o.u_star));
  EXPECT_LE(res.iterations, 2);
  EXPECT_TRUE(res.converged);
  EXPECT_LT((res.u.col(0) - o.u_star).norm(), 1e-10 * o.u_star.norm());
}

TEST(Optimizer, FirstTableWindowImprovesOnSaturatedFeedback) {
  const auto sys = test_util::make_system(16, 3, 1e-3, PeriodicIndicatorForcing{}, 0.31622776601683794);
  const auto target = std::make_shared<const TargetTrajectory>(simulate_free(
      Vector::Constant(sys.model->mesh.n_nodes(), 2.0), 1.25, sys.system.op, sys.system.forcing, {1e-3, 1, 0.0}));
  OcpProblem prob;
  prob.system = sys.system;
  prob.n_steps = 1250;
  prob.y0 = Vector::Constant(sys.model->mesh.n_nodes(), -1.0);
  prob.target = target;
  prob.beta = 1e-3;
  prob.sat = {std::exp(1.0), NormKind::Max};
  const DiscreteControl u0 = feedback_window_controls(prob, {175.0, prob.sat});
  const OptimizerResult res = bb_projected_gradient(prob, u0);
  EXPECT_LT(res.cost, evaluate_cost(u0, prob).cost);
  EXPECT_FALSE(res.warning);
}
