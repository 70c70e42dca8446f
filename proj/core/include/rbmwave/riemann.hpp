#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rbmwave/grid.hpp"
#include "rbmwave/metric_graph.hpp"

namespace rbmwave {

struct RiemannPair {
  double w_minus = 0.0;  // y_t + c y_x, travels towards x = 0
  double w_plus = 0.0;   // y_t - c y_x, travels towards x = length
};

struct VelocitySlope {
  double yt = 0.0;
  double yx = 0.0;
};

RiemannPair to_riemann(double yt, double yx, double speed);
VelocitySlope from_riemann(double w_minus, double w_plus, double speed);

/// Initial displacement y0, its derivative y0x and velocity y1, sampled on the
/// edge grids (field layout of StateLayout).
struct InitialData {
  Eigen::VectorXd y0;
  Eigen::VectorXd y0x;
  Eigen::VectorXd y1;

  static InitialData zero(const StateLayout& layout);
};

/// Sampled w_plus / w_minus fields on every edge at one time level.
class RiemannState {
 public:
  explicit RiemannState(std::shared_ptr<const StateLayout> layout, double time = 0.0);

  const StateLayout& layout() const { return *layout_; }
  const std::shared_ptr<const StateLayout>& layout_ptr() const { return layout_; }

  std::span<const double> w_plus(EdgeId e) const;
  std::span<const double> w_minus(EdgeId e) const;
  std::span<double> w_plus(EdgeId e);
  std::span<double> w_minus(EdgeId e);

  Eigen::VectorXd values;
  double time = 0.0;

 private:
  std::shared_ptr<const StateLayout> layout_;
};

/// w_minus = y1 + c y0x, w_plus = y1 - c y0x at every grid node.
RiemannState initial_riemann(const InitialData& data, const MetricGraph& graph,
                             std::shared_ptr<const StateLayout> layout);

/// Flat state indices of the invariant leaving and entering an edge at one of its ends.
/// At the start vertex (x = 0) the outflow is w_minus and the inflow w_plus; at the
/// end vertex (x = length) the outflow is w_plus and the inflow w_minus.
struct EndpointIndices {
  std::size_t outflow = 0;
  std::size_t inflow = 0;
};

EndpointIndices endpoint_indices(const StateLayout& layout, const Incidence& incidence);

/// Linear node map in_e = -out_e + (2 / c_tot) (sum_k c_k out_k - control).
///
/// `speeds` are always the original edge speeds, also for randomized dynamics.
/// `control` is the signed forcing ubar (= -u at controlled vertices).
struct CouplingWeights {
  /// Weight of out_k in in_e.
  static double outflow(double speed_k, double c_tot, bool same_edge) {
    return (same_edge ? -1.0 : 0.0) + 2.0 * speed_k / c_tot;
  }
  /// Weight of the forcing ubar in every in_e.
  static double control(double c_tot) { return -2.0 / c_tot; }
};

/// Span form: inflows[i] for incident edge i, given outflows[i] and speeds[i].
void node_coupling(std::span<const double> outflows, std::span<const double> speeds, double c_tot,
                   double control, std::span<double> inflows);

/// Map form. Throws StructuralError for an empty (degree-0) vertex and
/// ArgumentError when the key sets of outflows and speeds differ.
std::map<EdgeId, double> node_coupling(VertexId vertex, const std::map<EdgeId, double>& outflows,
                                       const std::map<EdgeId, double>& speeds, double c_tot, double control);

struct NodeFlows {
  VertexId vertex = 0;
  std::map<EdgeId, double> outflows;
  std::map<EdgeId, double> inflows;
};

struct NodeResiduals {
  double kirchhoff = 0.0;   // |sum_e c_e (out_e - in_e) / 2 - control|
  double continuity = 0.0;  // max pairwise |(in_e + out_e) - (in_k + out_k)|
};

NodeResiduals verify_node_conditions(const NodeFlows& flows, const std::map<EdgeId, double>& speeds,
                                     double control);

/// Accumulates y(t_n) = y0 + sum_{m=1..n} h (w_plus(t_m) + w_minus(t_m)) / 2.
class DisplacementIntegrator {
 public:
  DisplacementIntegrator(const StateLayout& layout, Eigen::VectorXd y0, double h);

  /// Adds the contribution of the state at the next time level.
  void add(const Eigen::VectorXd& state_values);
  const Eigen::VectorXd& current() const { return y_; }

 private:
  const StateLayout* layout_;
  Eigen::VectorXd y_;
  double h_;
};

/// Right-endpoint rectangle rule over a trajectory on a uniform grid of step h.
/// Returns one displacement field per state (index 0 is y0).
std::vector<Eigen::VectorXd> reconstruct_y(std::span<const RiemannState> states, const Eigen::VectorXd& y0,
                                           double h);

}  // namespace rbmwave
