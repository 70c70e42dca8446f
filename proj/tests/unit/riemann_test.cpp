#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "rbmwave/errors.hpp"
#include "rbmwave/expressions.hpp"
#include "rbmwave/grid.hpp"
#include "rbmwave/riemann.hpp"
#include "test_support.hpp"

using namespace rbmwave;

namespace {

// Continuity of y_t = (in + out) / 2 across the edges plus the flux balance
// sum c (out - in) / 2 = control, solved as a dense linear system for the inflows.
std::vector<double> coupling_oracle(const std::vector<double>& out, const std::vector<double>& c, double control) {
  const auto d = static_cast<Eigen::Index>(out.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b(d);
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    a(i, i) = 1.0;
    a(i, i + 1) = -1.0;
    b(i) = out[static_cast<std::size_t>(i + 1)] - out[static_cast<std::size_t>(i)];
  }
  double rhs = -2.0 * control;
  for (Eigen::Index k = 0; k < d; ++k) {
    a(d - 1, k) = c[static_cast<std::size_t>(k)];
    rhs += c[static_cast<std::size_t>(k)] * out[static_cast<std::size_t>(k)];
  }
  b(d - 1) = rhs;
  const Eigen::VectorXd x = a.fullPivLu().solve(b);
  return {x.data(), x.data() + d};
}

}  // namespace

TEST(ToRiemann, Examples) {
  const RiemannPair zero = to_riemann(0.0, 0.0, 1.0);
  EXPECT_EQ(zero.w_minus, 0.0);
  EXPECT_EQ(zero.w_plus, 0.0);
  const RiemannPair p = to_riemann(1.0, 2.0, 3.0);
  EXPECT_EQ(p.w_minus, 7.0);
  EXPECT_EQ(p.w_plus, -5.0);
}

TEST(ToRiemann, RoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double yt = u(rng);
    const double yx = u(rng);
    const double c = 0.1 + std::abs(u(rng));
    const RiemannPair w = to_riemann(yt, yx, c);
    const VelocitySlope back = from_riemann(w.w_minus, w.w_plus, c);
    EXPECT_NEAR(back.yt, yt, 1e-13 * (1.0 + std::abs(yt) + c * std::abs(yx)));
    EXPECT_NEAR(back.yx, yx, 1e-13 * (1.0 + std::abs(yt) / c + std::abs(yx)));
  }
}

TEST(InitialRiemann, Examples) {
  const MetricGraph g = rbmwave::testing::single_edge(1.0, 1.0);
  auto layout = std::make_shared<const StateLayout>(g, build_grids(g, 0.05));

  const RiemannState zero = initial_riemann(InitialData::zero(*layout), g, layout);
  EXPECT_EQ(zero.values.cwiseAbs().maxCoeff(), 0.0);

  const InitialData ones = sample_initial_data(*layout, Expression::zero(), Expression::constant(1.0));
  const RiemannState w1 = initial_riemann(ones, g, layout);
  for (double v : w1.values) EXPECT_EQ(v, 1.0);

  const double pi = std::numbers::pi;
  const InitialData sine = sample_initial_data(*layout, Expression::sine(1.0, pi), Expression::zero());
  const RiemannState ws = initial_riemann(sine, g, layout);
  for (std::size_t i = 0; i < layout->points(1); ++i) {
    const double x = layout->grid(1).x(i);
    EXPECT_NEAR(ws.w_minus(1)[i], pi * std::cos(pi * x), 1e-13);
    EXPECT_NEAR(ws.w_plus(1)[i], -pi * std::cos(pi * x), 1e-13);
  }
}

TEST(NodeCoupling, Examples) {
  std::vector<double> in(1);
  node_coupling(std::vector<double>{3.0}, std::vector<double>{1.7}, 1.7, 0.0, in);
  EXPECT_DOUBLE_EQ(in[0], 3.0);

  const auto tx = node_coupling(2, {{1, 0.3}, {2, -1.9}}, {{1, 2.0}, {2, 2.0}}, 4.0, 0.0);
  EXPECT_DOUBLE_EQ(tx.at(1), -1.9);
  EXPECT_DOUBLE_EQ(tx.at(2), 0.3);

  // u = 1 at a controlled vertex enters as ubar = -1
  const auto driven = node_coupling(1, {{1, 0.0}}, {{1, 1.0}}, 1.0, -1.0);
  EXPECT_DOUBLE_EQ(driven.at(1), 2.0);
}

TEST(NodeCoupling, Errors) {
  EXPECT_THROW(node_coupling(1, {}, {}, 1.0, 0.0), StructuralError);
  EXPECT_THROW(node_coupling(1, {{1, 1.0}}, {{2, 1.0}}, 1.0, 0.0), ArgumentError);
}

TEST(NodeCoupling, DegreeOneReflectionIsExact) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double out = u(rng);
    const double c = 0.01 + std::abs(u(rng));
    const auto in = node_coupling(1, {{1, out}}, {{1, c}}, c, 0.0);
    EXPECT_EQ(in.at(1), out);
    const NodeResiduals r = verify_node_conditions({1, {{1, out}}, in}, {{1, c}}, 0.0);
    EXPECT_EQ(r.continuity, 0.0);
  }
}

TEST(NodeCoupling, AgreesWithLinearSystemOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + rng() % 6;
    std::vector<double> out(d), c(d), in(d);
    double ctot = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      out[k] = u(rng);
      c[k] = 0.2 + std::abs(u(rng));
      ctot += c[k];
    }
    const double control = u(rng);
    node_coupling(out, c, ctot, control, in);
    const std::vector<double> oracle = coupling_oracle(out, c, control);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(in[k], oracle[k], 1e-11);
  }
}

TEST(VerifyNodeConditions, DiamondVertexResidualsAndSensitivity) {
  const MetricGraph g = rbmwave::testing::diamond_graph();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    NodeFlows flows{2, {}, {}};
    std::map<EdgeId, double> speeds;
    for (const Incidence& inc : g.edges_at(2)) {
      flows.outflows[inc.edge] = u(rng);
      speeds[inc.edge] = g.edge(inc.edge).speed;
    }
    const double control = u(rng);
    flows.inflows = node_coupling(2, flows.outflows, speeds, g.c_tot(2), control);
    const NodeResiduals r = verify_node_conditions(flows, speeds, control);
    EXPECT_LE(r.kirchhoff, 1e-12);
    EXPECT_LE(r.continuity, 1e-12);

    flows.inflows[3] += 1e-3;
    EXPECT_GT(verify_node_conditions(flows, speeds, control).kirchhoff, 1e-4);
  }
}

TEST(ReconstructY, ZeroAndConstantInvariants) {
  const MetricGraph g = rbmwave::testing::path_graph();
  auto layout = std::make_shared<const StateLayout>(g, build_grids(g, 0.25));
  const double h = 0.1;
  Eigen::VectorXd y0(static_cast<Eigen::Index>(layout->field_size()));
  for (Eigen::Index i = 0; i < y0.size(); ++i) y0(i) = std::sin(0.3 * static_cast<double>(i));

  std::vector<RiemannState> zeros(6, RiemannState(layout));
  for (const auto& y : reconstruct_y(zeros, y0, h)) EXPECT_EQ(y, y0);

  std::vector<RiemannState> ones(6, RiemannState(layout));
  for (auto& s : ones) s.values.setOnes();
  const auto ys = reconstruct_y(ones, y0, h);
  for (std::size_t n = 0; n < ys.size(); ++n)
    EXPECT_LE((ys[n] - y0 - Eigen::VectorXd::Constant(y0.size(), h * static_cast<double>(n))).cwiseAbs().maxCoeff(),
              1e-14);

  DisplacementIntegrator integ(*layout, y0, h);
  for (std::size_t n = 1; n < ones.size(); ++n) integ.add(ones[n].values);
  EXPECT_EQ(integ.current(), ys.back());
}

TEST(EndpointIndices, OutflowLeavesTheEdge) {
  const MetricGraph g = rbmwave::testing::path_graph();
  const StateLayout layout(g, build_grids(g, 0.5));
  // v2 is the end of edge 1 and the start of edge 2
  const EndpointIndices end1 = endpoint_indices(layout, {1, 1});
  EXPECT_EQ(end1.outflow, layout.plus_offset(1) + 2);
  EXPECT_EQ(end1.inflow, layout.minus_offset(1) + 2);
  const EndpointIndices start2 = endpoint_indices(layout, {2, -1});
  EXPECT_EQ(start2.outflow, layout.minus_offset(2));
  EXPECT_EQ(start2.inflow, layout.plus_offset(2));
}
