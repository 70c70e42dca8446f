#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rbmwave/characteristics.hpp"
#include "rbmwave/errors.hpp"
#include "rbmwave/expressions.hpp"
#include "rbmwave/grid.hpp"
#include "rbmwave/simulation.hpp"
#include "rbmwave/step_operator.hpp"
#include "test_support.hpp"

using namespace rbmwave;
using rbmwave::testing::diamond_graph;
using rbmwave::testing::diamond_scheme;

namespace {

Eigen::VectorXd random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (double& x : v) x = g(rng);
  return v;
}

std::map<EdgeId, double> speeds_of(const MetricGraph& g, double scale = 1.0) {
  std::map<EdgeId, double> s;
  for (const auto& e : g.edges()) s[e.id] = scale * e.speed;
  return s;
}

}  // namespace

TEST(BuildGrids, PointCounts) {
  const auto grids = build_grids(diamond_graph(), 0.05);
  ASSERT_EQ(grids.size(), 7u);
  for (EdgeId e : {1, 4, 7}) EXPECT_EQ(grids[static_cast<std::size_t>(e - 1)].points, 30u);
  for (EdgeId e : {2, 3, 5, 6}) EXPECT_EQ(grids[static_cast<std::size_t>(e - 1)].points, 21u);
  for (const auto& g : grids) EXPECT_LE(g.dx, 0.05);

  EXPECT_EQ(build_grids(rbmwave::testing::single_edge(1.0, 1.0), 1.0).front().points, 2u);
  EXPECT_EQ(build_grids(rbmwave::testing::single_edge(2.5, 1.0), 0.5).front().points, 6u);
  EXPECT_THROW(build_grids(diamond_graph(), 0.0), ArgumentError);
}

TEST(TimeGrid, WithStep) {
  const TimeGrid t = TimeGrid::with_step(5.0, 0.0005);
  EXPECT_EQ(t.steps(), 10000u);
  EXPECT_DOUBLE_EQ(t.h() * static_cast<double>(t.steps()), 5.0);
  EXPECT_THROW(TimeGrid::with_step(1.0, 0.3), ArgumentError);
  EXPECT_THROW(TimeGrid::with_step(1.0, -0.1), ArgumentError);
  EXPECT_THROW(TimeGrid(1.0, 0), ArgumentError);
}

TEST(StepOperator, AllFrozenHoldsCouplingConsistentStates) {
  const MetricGraph g = diamond_graph();
  const auto grids = build_grids(g, 0.25);
  const auto op = assemble_operator(g, grids, 0.01, speeds_of(g, 0.0));
  EXPECT_EQ(op->active_unknowns(), 0u);
  const StateLayout& layout = op->layout();
  StepWorkspace work;
  std::vector<double> ubar{0.0};

  // one step projects an arbitrary state onto the coupling conditions; after that it is a fixed point
  Eigen::VectorXd w0 = random_vector(layout.state_size(), 1);
  Eigen::VectorXd w1, w2;
  op->advance(w0, ubar, w1, work);
  op->advance(w1, ubar, w2, work);
  EXPECT_EQ(w1, w2);

  std::vector<bool> inflow(layout.state_size(), false);
  for (VertexId v = 1; v <= g.vertex_count(); ++v)
    for (const Incidence& inc : g.edges_at(v)) inflow[endpoint_indices(layout, inc).inflow] = true;
  for (std::size_t i = 0; i < layout.state_size(); ++i)
    if (!inflow[i]) EXPECT_EQ(w1[static_cast<Eigen::Index>(i)], w0[static_cast<Eigen::Index>(i)]);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.state_size()));
  op->advance(zero, ubar, w1, work);
  EXPECT_EQ(w1, zero);
}

TEST(StepOperator, SingleEdgeSteadyStateByHand) {
  // both ends controlled with u(v1) = 1 and u(v2) = -1: constant invariants with w_plus - w_minus = 2 / c
  const double c = 2.0;
  const MetricGraph g(2, {{1, 1, 2, 1.0, c}}, {1, 2});
  const auto grids = build_grids(g, 0.5);
  ASSERT_EQ(grids.front().points, 3u);
  const auto op = assemble_operator(g, grids, 0.05, speeds_of(g));
  const StateLayout& layout = op->layout();
  StepWorkspace work;
  const std::vector<double> ubar{-1.0, 1.0};
  Eigen::VectorXd w = Eigen::VectorXd::Zero(6), next;
  for (int k = 0; k < 4000; ++k) {
    op->advance(w, ubar, next, work);
    w.swap(next);
  }
  op->advance(w, ubar, next, work);
  EXPECT_LE((next - w).cwiseAbs().maxCoeff(), 1e-12);

  const auto p = static_cast<Eigen::Index>(layout.plus_offset(1));
  const auto m = static_cast<Eigen::Index>(layout.minus_offset(1));
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(w[p + i], w[p], 1e-12);
    EXPECT_NEAR(w[m + i], w[m], 1e-12);
  }
  EXPECT_NEAR(w[p] - w[m], 2.0 / c, 1e-12);
  // y_t is symmetric in the two forcings, so the mean displacement velocity stays zero
  EXPECT_NEAR(w[p] + w[m], 0.0, 1e-12);
}

TEST(StepOperator, AdjointIsTransposeOfAdvance) {
  const MetricGraph g = diamond_graph();
  auto layout = std::make_shared<const StateLayout>(g, build_grids(g, 0.1));
  OperatorCache cache(g, layout, 0.01);
  StepWorkspace work;
  std::vector<std::shared_ptr<const StepOperator>> ops{cache.deterministic()};
  for (SubsetIndex w = 1; w <= 4; ++w) ops.push_back(cache.for_subset(diamond_scheme(), w));
  for (const auto& op : ops) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Eigen::VectorXd x = random_vector(layout->state_size(), 10 + seed);
      const Eigen::VectorXd lambda = random_vector(layout->state_size(), 20 + seed);
      const double ubar = 0.37 * static_cast<double>(seed) - 0.5;
      Eigen::VectorXd ax, at_lambda;
      op->advance(x, std::vector<double>{ubar}, ax, work);
      std::vector<double> grad_ubar{0.0};
      op->adjoint(lambda, at_lambda, grad_ubar, work);
      const double lhs = lambda.dot(ax);
      const double rhs = at_lambda.dot(x) + grad_ubar[0] * ubar;
      EXPECT_NEAR(lhs, rhs, 1e-11 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST(OperatorCache, OneFactorizationPerPattern) {
  const MetricGraph g = diamond_graph();
  auto layout = std::make_shared<const StateLayout>(g, build_grids(g, 0.05));
  OperatorCache cache(g, layout, 0.008);
  const auto sched = PatternSchedule::deterministic(cache, 625);
  EXPECT_EQ(sched.distinct(), 1u);
  EXPECT_EQ(&sched.at(1), &sched.at(625));
  EXPECT_EQ(cache.factorizations(), 1u);

  const RealizationVector r = sample_realization(diamond_scheme(), 625, 9);
  const auto rs = PatternSchedule::randomized(cache, diamond_scheme(), r);
  EXPECT_EQ(rs.distinct(), 4u);
  EXPECT_EQ(cache.factorizations(), 5u);
  const auto again = PatternSchedule::randomized(cache, diamond_scheme(), sample_realization(diamond_scheme(), 625, 10));
  EXPECT_EQ(cache.factorizations(), 5u);
  // the pi = 1 scheme has the deterministic speeds and reuses that operator
  PatternSchedule::randomized(cache, SubsetScheme::all_edges(g), sample_realization(SubsetScheme::all_edges(g), 625, 1));
  EXPECT_EQ(cache.factorizations(), 5u);
}

TEST(Simulate, ZeroDataZeroControl) {
  const MetricGraph g = diamond_graph();
  const auto grids = build_grids(g, 0.1);
  const StateLayout layout(g, grids);
  const TimeGrid t = TimeGrid::with_step(1.0, 0.01);
  const Trajectory traj = simulate_deterministic(g, InitialData::zero(layout), ControlVector(1, t), grids, t);
  ASSERT_EQ(traj.states().size(), 101u);
  for (const auto& s : traj.states()) EXPECT_EQ(s.values.cwiseAbs().maxCoeff(), 0.0);
  for (const auto& y : traj.y()) EXPECT_EQ(y.cwiseAbs().maxCoeff(), 0.0);
}

// Randomized patterns transport at c / pi but couple with c, so only the deterministic energy is monotone.
TEST(Simulate, EnergyNonIncreasingWithoutControl) {
  const MetricGraph g = diamond_graph();
  const auto grids = build_grids(g, 0.05);
  auto layout = std::make_shared<const StateLayout>(g, grids);
  const TimeGrid t = TimeGrid::with_step(3.0, 0.01);
  const InitialData data = sample_initial_data(*layout, Expression::sine(0.5, 3.0), Expression::sine(1.0, 2.0));
  OperatorCache cache(g, layout, t.h());
  const ControlVector none(1, t);

  const auto check = [&](const Trajectory& traj) {
    for (std::size_t n = 1; n < traj.states().size(); ++n)
      EXPECT_LE(discrete_energy(*layout, traj.states()[n].values),
                discrete_energy(*layout, traj.states()[n - 1].values) * (1.0 + 1e-12))
          << "step " << n;
  };
  check(simulate_deterministic(g, data, none, grids, t, &cache));
}

TEST(Simulate, DegenerateSchemeIsBitwiseDeterministic) {
  const MetricGraph g = diamond_graph();
  const auto grids = build_grids(g, 0.05);
  const StateLayout layout(g, grids);
  const TimeGrid t = TimeGrid::with_step(2.0, 0.004);
  const ControlVector u = sample_control(1, t, Expression::sine(1.0, std::numbers::pi));
  const SubsetScheme all = SubsetScheme::all_edges(g);
  const Trajectory d = simulate_deterministic(g, InitialData::zero(layout), u, grids, t);
  const Trajectory r =
      simulate_randomized(g, all, sample_realization(all, t.steps(), 3), InitialData::zero(layout), u, grids, t);
  for (std::size_t n = 0; n < d.states().size(); ++n) EXPECT_EQ(d.states()[n].values, r.states()[n].values);
  EXPECT_EQ(d.y().back(), r.y().back());
}

TEST(Simulate, SolverStepsMatchBatchRun) {
  const MetricGraph g = diamond_graph();
  const auto grids = build_grids(g, 0.1);
  auto layout = std::make_shared<const StateLayout>(g, grids);
  const TimeGrid t = TimeGrid::with_step(1.0, 0.02);
  const ControlVector u = sample_control(1, t, Expression::constant(0.5));
  OperatorCache cache(g, layout, t.h());
  const RealizationVector r = sample_realization(diamond_scheme(), t.steps(), 12);
  const PatternSchedule sched = PatternSchedule::randomized(cache, diamond_scheme(), r);
  TransportSolver solver(sched, u, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout->state_size())));
  const Trajectory batch =
      simulate_randomized(g, diamond_scheme(), r, InitialData::zero(*layout), u, grids, t, &cache);
  while (!solver.finished()) {
    solver.advance();
    EXPECT_EQ(solver.state(), batch.states()[solver.step()].values);
  }
  EXPECT_THROW(solver.advance(), ArgumentError);
  EXPECT_THROW(simulate_randomized(g, diamond_scheme(), sample_realization(diamond_scheme(), 3, 1),
                                   InitialData::zero(*layout), u, grids, t),
               ArgumentError);
}

TEST(ErrorNorms, IdentityAndHomogeneity) {
  const MetricGraph g = diamond_graph();
  const auto grids = build_grids(g, 0.1);
  const StateLayout layout(g, grids);
  const TimeGrid t = TimeGrid::with_step(1.0, 0.05);
  const ControlVector u = sample_control(1, t, Expression::sine(1.0, 2.0));
  const Trajectory a = simulate_deterministic(g, InitialData::zero(layout), u, grids, t);

  const RelativeErrors same = error_norms(a, a);
  EXPECT_EQ(same.rel_w, 0.0);
  EXPECT_EQ(same.rel_y, 0.0);

  std::vector<RiemannState> doubled = a.states();
  for (auto& s : doubled) s.values *= 2.0;
  const Trajectory b(doubled, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.field_size())), t.h(), 0.0);
  const RelativeErrors half = error_norms(a, b);
  EXPECT_NEAR(half.rel_w, 0.5, 1e-15);
  EXPECT_NEAR(half.rel_y, 0.5, 1e-15);

  const Trajectory zero = simulate_deterministic(g, InitialData::zero(layout), ControlVector(1, t), grids, t);
  EXPECT_THROW(error_norms(a, zero), UndefinedRelativeError);
}

TEST(Simulate, FirstOrderAgainstTravellingPulse) {
  // pulse well inside the edge, stopped before it reaches either end
  const double c = 1.0;
  const MetricGraph g = rbmwave::testing::single_edge(4.0, c);
  const auto pulse = [](double x) { return std::exp(-4.0 * (x - 2.0) * (x - 2.0)); };
  SingleEdgeProblem p{4.0, c, pulse, [&](double x) { return 0.5 * pulse(x); }, {}, {}};
  std::vector<double> errors;
  for (double dx : {0.01, 0.005}) {
    const auto grids = build_grids(g, dx);
    auto layout = std::make_shared<const StateLayout>(g, grids);
    const TimeGrid t = TimeGrid::with_step(1.0, grids.front().dx / c);
    RiemannState w0(layout);
    for (std::size_t i = 0; i < layout->points(1); ++i) {
      const double x = layout->grid(1).x(i);
      w0.w_minus(1)[i] = p.w_minus0(x);
      w0.w_plus(1)[i] = p.w_plus0(x);
    }
    OperatorCache cache(g, layout, t.h());
    const PatternSchedule sched = PatternSchedule::deterministic(cache, t.steps());
    TransportSolver solver(sched, ControlVector(0, t), w0.values);
    while (!solver.finished()) solver.advance();
    double err = 0.0;
    for (std::size_t i = 0; i < layout->points(1); ++i) {
      const InvariantValues exact = dalembert_single_edge(p, 1.0, layout->grid(1).x(i));
      err = std::max(err, std::abs(solver.state()[static_cast<Eigen::Index>(layout->minus_offset(1) + i)] - exact.w_minus));
      err = std::max(err, std::abs(solver.state()[static_cast<Eigen::Index>(layout->plus_offset(1) + i)] - exact.w_plus));
    }
    errors.push_back(err);
  }
  EXPECT_GT(errors[0] / errors[1], 1.6);
  EXPECT_LT(errors[0] / errors[1], 2.4);
}
