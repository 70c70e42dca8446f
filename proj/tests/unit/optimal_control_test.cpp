#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rbmwave/errors.hpp"
#include "rbmwave/expressions.hpp"
#include "rbmwave/optimal_control.hpp"
#include "rbmwave/simulation.hpp"
#include "test_support.hpp"

using namespace rbmwave;
using rbmwave::testing::diamond_graph;
using rbmwave::testing::diamond_scheme;

namespace {

OcpProblem make_problem(double horizon, double h, double alpha, const Expression& target) {
  const MetricGraph g = diamond_graph();
  auto grids = build_grids(g, 0.1);
  const TimeGrid t = TimeGrid::with_step(horizon, h);
  const StateLayout layout(g, grids);
  TargetField yd = TargetField::from_expression(target, layout, t, false);
  return {g, std::move(grids), t, InitialData::zero(layout), std::move(yd), alpha};
}

ControlVector random_control(const TimeGrid& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  ControlVector u(1, t);
  // smooth random control: a few random Fourier modes
  const double a = g(rng), b = g(rng), c = g(rng), d = g(rng);
  for (std::size_t n = 0; n <= t.steps(); ++n) {
    const double s = t.t(n);
    u.values()(static_cast<Eigen::Index>(n), 0) = a + b * std::sin(2.0 * s) + c * std::cos(3.0 * s) + 0.2 * d * s * s;
  }
  return u;
}

ControlVector axpy(double a, const ControlVector& x, const ControlVector& y) {
  return ControlVector(a * x.values() + y.values(), y.tgrid());
}

double dot(const ControlVector& a, const ControlVector& b) { return a.values().cwiseProduct(b.values()).sum(); }

}  // namespace

TEST(H2Norm, ConstantsAndSmoothFunctions) {
  const TimeGrid t = TimeGrid::with_step(1.0, 0.001);
  const H2Norm norm(t);
  ControlVector one(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(t.steps() + 1), 1), t);
  EXPECT_NEAR(norm.squared(one), 1.0, 1e-12);
  EXPECT_NEAR(norm.l2_squared(one), 1.0, 1e-12);

  // sin(2 pi s) on [0, 1]: (1 + (2 pi)^2 + (2 pi)^4) / 2
  const ControlVector s = sample_control(1, t, Expression::sine(1.0, 2.0 * std::numbers::pi));
  const double w = 2.0 * std::numbers::pi;
  EXPECT_NEAR(norm.squared(s) / (0.5 * (1.0 + w * w + w * w * w * w)), 1.0, 1e-3);

  // assembled Gram matrix, factored application and solve agree
  const Eigen::MatrixXd u = random_control(t, 3).values();
  const Eigen::MatrixXd ru = norm.apply(u);
  EXPECT_LE((norm.gram() * u - ru).norm(), 1e-6 * ru.norm());
  // R has condition number of order h^-4; check the residual rather than the forward error
  EXPECT_LE((norm.apply(norm.solve(ru)) - ru).norm(), 1e-9 * ru.norm());
  EXPECT_NEAR(u.cwiseProduct(ru).sum(), norm.squared(ControlVector(u, t)), 1e-9 * norm.squared(ControlVector(u, t)));
}

TEST(Cost, ZeroTrackingAndRegularization) {
  const OcpProblem p = make_problem(1.0, 0.02, 2.0, Expression::zero());
  const CostBreakdown zero = cost(p, ControlVector(1, p.tgrid));
  EXPECT_EQ(zero.tracking, 0.0);
  EXPECT_EQ(zero.regularization, 0.0);
  EXPECT_EQ(zero.total, 0.0);

  const ControlVector one(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(p.tgrid.steps() + 1), 1), p.tgrid);
  EXPECT_NEAR(cost(p, one).regularization, 1.0, 1e-12);
}

TEST(Gradient, MatchesCentralDifferences) {
  const OcpProblem p = make_problem(2.0, 0.02, 1.0, Expression::constant(1.0));
  const SubsetScheme scheme = diamond_scheme();
  const RealizationVector r = sample_realization(scheme, p.tgrid.steps(), 31);
  const double eps = 1e-5;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const ControlVector u = random_control(p.tgrid, 100 + k);
    const ControlVector v = random_control(p.tgrid, 200 + k);
    const double d_det = dot(gradient(p, u), v);
    const double fd_det = (cost(p, axpy(eps, v, u)).total - cost(p, axpy(-eps, v, u)).total) / (2.0 * eps);
    EXPECT_NEAR(d_det, fd_det, 1e-5 * std::max(1.0, std::abs(fd_det)));
    const double d_rnd = dot(gradient(p, u, scheme, r), v);
    const double fd_rnd =
        (cost(p, axpy(eps, v, u), scheme, r).total - cost(p, axpy(-eps, v, u), scheme, r).total) / (2.0 * eps);
    EXPECT_NEAR(d_rnd, fd_rnd, 1e-5 * std::max(1.0, std::abs(fd_rnd)));
  }
}

TEST(Gradient, PureRegularizationWhenTargetIsReached) {
  OcpProblem p = make_problem(1.0, 0.02, 0.7, Expression::zero());
  const ControlVector u = random_control(p.tgrid, 9);
  const Trajectory traj = simulate_deterministic(p.graph, p.initial, u, p.grids, p.tgrid);
  p.target = TargetField::sampled(traj.y());
  const CostBreakdown c = cost(p, u);
  EXPECT_LE(c.tracking, 1e-28);
  const ControlVector g = gradient(p, u);
  const Eigen::MatrixXd expected = p.alpha * H2Norm(p.tgrid).apply(u.values());
  EXPECT_LE((g.values() - expected).cwiseAbs().maxCoeff(), 1e-10 * expected.cwiseAbs().maxCoeff());
}

TEST(Cost, MidpointConvexity) {
  const OcpProblem p = make_problem(1.0, 0.02, 1.0, Expression::constant(1.0));
  for (std::uint64_t k = 0; k < 10; ++k) {
    const ControlVector a = random_control(p.tgrid, 300 + k);
    const ControlVector b = random_control(p.tgrid, 400 + k);
    const ControlVector mid(0.5 * (a.values() + b.values()), p.tgrid);
    EXPECT_LE(cost(p, mid).total, 0.5 * (cost(p, a).total + cost(p, b).total) + 1e-12);
  }
}

TEST(ReducedCost, HessianIsSymmetric) {
  const OcpProblem p = make_problem(1.0, 0.02, 1.0, Expression::constant(1.0));
  auto layout = std::make_shared<const StateLayout>(p.graph, p.grids);
  OperatorCache cache(p.graph, layout, p.tgrid.h());
  const ReducedCost j(p, PatternSchedule::randomized(cache, diamond_scheme(),
                                                     sample_realization(diamond_scheme(), p.tgrid.steps(), 2)));
  const ControlVector a = random_control(p.tgrid, 1);
  const ControlVector b = random_control(p.tgrid, 2);
  const double ab = dot(a, j.hessian_times(b));
  const double ba = dot(b, j.hessian_times(a));
  EXPECT_NEAR(ab, ba, 1e-10 * std::abs(ab));
}

TEST(SolveOcp, ReachableTargetGivesZeroControl) {
  const OcpProblem p = make_problem(1.0, 0.02, 1.0, Expression::zero());
  const OcpSolution s = solve_ocp(p, {});
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.control.values().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.cost.total, 0.0);
}

TEST(SolveOcp, OptimumSatisfiesFirstOrderConditionAndBeatsPerturbations) {
  const OcpProblem p = make_problem(2.0, 0.02, 1.0, Expression::constant(1.0));
  const OcpSolution s = solve_ocp(p, {});
  ASSERT_TRUE(s.converged);
  EXPECT_LE(s.gradient_norm, s.grad_tol);
  const H2Norm norm(p.tgrid);
  EXPECT_LE(std::sqrt(norm.dual_squared(gradient(p, s.control).values())), s.grad_tol);
  for (std::uint64_t k = 0; k < 5; ++k) {
    const ControlVector v = random_control(p.tgrid, 500 + k);
    EXPECT_GE(cost(p, axpy(1e-3, v, s.control)).total, s.cost.total);
  }
  // cost history of CG is non-increasing
  for (std::size_t i = 1; i < s.cost_history.size(); ++i)
    EXPECT_LE(s.cost_history[i], s.cost_history[i - 1] + 1e-12 * std::abs(s.cost_history[i - 1]));
}

TEST(SolveOcp, GradientDescentReachesTheSameOptimum) {
  const OcpProblem p = make_problem(1.0, 0.05, 1.0, Expression::constant(1.0));
  const OcpSolution cg = solve_ocp(p, {});
  OptimizerConfig gd_config;
  gd_config.method = OptimizerMethod::gradient_descent;
  gd_config.max_iters = 5000;
  gd_config.grad_tol = 1e-6;
  const OcpSolution gd = solve_ocp(p, gd_config);
  EXPECT_TRUE(gd.converged) << gd.iterations << " iterations, gradient norm " << gd.gradient_norm;
  EXPECT_LE(compare_controls(gd.control, cg.control).rel_h2, 1e-4);
  EXPECT_NEAR(gd.cost.total, cg.cost.total, 1e-8 * cg.cost.total);
}

TEST(SolveRocp, DegenerateSchemeIsBitwiseDeterministic) {
  const OcpProblem p = make_problem(2.0, 0.02, 1.0, Expression::constant(1.0));
  const SubsetScheme all = SubsetScheme::all_edges(p.graph);
  const OcpSolution d = solve_ocp(p, {});
  const OcpSolution r = solve_rocp(p, all, sample_realization(all, p.tgrid.steps(), 8), {});
  EXPECT_EQ(d.control.values(), r.control.values());
  EXPECT_EQ(d.cost.total, r.cost.total);
}

TEST(CompareControls, Examples) {
  const TimeGrid t = TimeGrid::with_step(1.0, 0.01);
  const ControlVector a = random_control(t, 1);
  const ControlDifference same = compare_controls(a, a);
  EXPECT_EQ(same.rel_l2, 0.0);
  EXPECT_EQ(same.rel_h2, 0.0);
  const ControlDifference doubled = compare_controls(a, ControlVector(2.0 * a.values(), t));
  EXPECT_NEAR(doubled.rel_l2, 0.5, 1e-14);
  EXPECT_NEAR(doubled.rel_h2, 0.5, 1e-14);
  EXPECT_THROW(compare_controls(a, ControlVector(1, t)), UndefinedRelativeError);
}

TEST(Optimizer, RejectsBadSettings) {
  OcpProblem p = make_problem(1.0, 0.05, 1.0, Expression::constant(1.0));
  OptimizerConfig c;
  c.grad_tol = 0.0;
  EXPECT_THROW(solve_ocp(p, c), ArgumentError);
  p.alpha = 0.0;
  EXPECT_THROW(solve_ocp(p, {}), ArgumentError);
}
