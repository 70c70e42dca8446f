#include "rbmwave/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rbmwave/errors.hpp"

namespace rbmwave {

RiemannPair to_riemann(double yt, double yx, double speed) {
  return {yt + speed * yx, yt - speed * yx};
}

VelocitySlope from_riemann(double w_minus, double w_plus, double speed) {
  return {0.5 * (w_minus + w_plus), (w_minus - w_plus) / (2.0 * speed)};
}

InitialData InitialData::zero(const StateLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.field_size());
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

RiemannState::RiemannState(std::shared_ptr<const StateLayout> layout, double t)
    : values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout->state_size()))),
      time(t),
      layout_(std::move(layout)) {}

std::span<const double> RiemannState::w_plus(EdgeId e) const {
  return {values.data() + layout_->plus_offset(e), layout_->points(e)};
}
std::span<const double> RiemannState::w_minus(EdgeId e) const {
  return {values.data() + layout_->minus_offset(e), layout_->points(e)};
}
std::span<double> RiemannState::w_plus(EdgeId e) {
  return {values.data() + layout_->plus_offset(e), layout_->points(e)};
}
std::span<double> RiemannState::w_minus(EdgeId e) {
  return {values.data() + layout_->minus_offset(e), layout_->points(e)};
}

RiemannState initial_riemann(const InitialData& data, const MetricGraph& graph,
                             std::shared_ptr<const StateLayout> layout) {
  const auto n = static_cast<Eigen::Index>(layout->field_size());
  if (data.y0.size() != n || data.y0x.size() != n || data.y1.size() != n) {
    throw ArgumentError("initial data is not sampled on the edge grids (expected " + std::to_string(n) +
                        " samples)");
  }
  RiemannState state(layout, 0.0);
  for (const EdgeSpec& e : graph.edges()) {
    const std::size_t off = layout->field_offset(e.id);
    auto plus = state.w_plus(e.id);
    auto minus = state.w_minus(e.id);
    for (std::size_t i = 0; i < plus.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(off + i);
      const RiemannPair w = to_riemann(data.y1(k), data.y0x(k), e.speed);
      minus[i] = w.w_minus;
      plus[i] = w.w_plus;
    }
  }
  return state;
}

EndpointIndices endpoint_indices(const StateLayout& layout, const Incidence& incidence) {
  const std::size_t last = layout.points(incidence.edge) - 1;
  if (incidence.sign < 0) {
    return {layout.minus_offset(incidence.edge), layout.plus_offset(incidence.edge)};
  }
  return {layout.plus_offset(incidence.edge) + last, layout.minus_offset(incidence.edge) + last};
}

void node_coupling(std::span<const double> outflows, std::span<const double> speeds, double c_tot,
                   double control, std::span<double> inflows) {
  if (outflows.empty()) throw StructuralError("node coupling at a vertex without edges");
  double weighted = 0.0;
  for (std::size_t k = 0; k < outflows.size(); ++k) weighted += (speeds[k] / c_tot) * outflows[k];
  const double shared = 2.0 * weighted + CouplingWeights::control(c_tot) * control;
  for (std::size_t i = 0; i < outflows.size(); ++i) inflows[i] = -outflows[i] + shared;
}

std::map<EdgeId, double> node_coupling(VertexId vertex, const std::map<EdgeId, double>& outflows,
                                       const std::map<EdgeId, double>& speeds, double c_tot, double control) {
  if (outflows.empty()) {
    throw StructuralError("vertex " + std::to_string(vertex) + " has no incident edges");
  }
  if (outflows.size() != speeds.size() ||
      !std::equal(outflows.begin(), outflows.end(), speeds.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw ArgumentError("outflow and speed maps at vertex " + std::to_string(vertex) + " have different edges");
  }
  std::vector<double> out, c, in(outflows.size());
  for (const auto& [e, w] : outflows) out.push_back(w);
  for (const auto& [e, s] : speeds) c.push_back(s);
  node_coupling(out, c, c_tot, control, in);
  std::map<EdgeId, double> result;
  std::size_t i = 0;
  for (const auto& [e, w] : outflows) result.emplace(e, in[i++]);
  return result;
}

NodeResiduals verify_node_conditions(const NodeFlows& flows, const std::map<EdgeId, double>& speeds,
                                     double control) {
  NodeResiduals r;
  double flux = 0.0;
  std::vector<double> traces;
  for (const auto& [e, out] : flows.outflows) {
    const double in = flows.inflows.at(e);
    flux += speeds.at(e) * (out - in) / 2.0;
    traces.push_back(in + out);
  }
  r.kirchhoff = std::abs(flux - control);
  if (!traces.empty()) {
    const auto [lo, hi] = std::minmax_element(traces.begin(), traces.end());
    r.continuity = *hi - *lo;
  }
  return r;
}

DisplacementIntegrator::DisplacementIntegrator(const StateLayout& layout, Eigen::VectorXd y0, double h)
    : layout_(&layout), y_(std::move(y0)), h_(h) {
  if (y_.size() != static_cast<Eigen::Index>(layout.field_size())) {
    throw ArgumentError("y0 is not sampled on the edge grids");
  }
}

void DisplacementIntegrator::add(const Eigen::VectorXd& state_values) {
  const double half_h = 0.5 * h_;
  for (EdgeId e = 1; e <= static_cast<EdgeId>(layout_->edge_count()); ++e) {
    const auto n = static_cast<Eigen::Index>(layout_->points(e));
    const auto f = static_cast<Eigen::Index>(layout_->field_offset(e));
    const auto p = static_cast<Eigen::Index>(layout_->plus_offset(e));
    const auto m = static_cast<Eigen::Index>(layout_->minus_offset(e));
    y_.segment(f, n) += half_h * (state_values.segment(p, n) + state_values.segment(m, n));
  }
}

std::vector<Eigen::VectorXd> reconstruct_y(std::span<const RiemannState> states, const Eigen::VectorXd& y0,
                                           double h) {
  std::vector<Eigen::VectorXd> out;
  if (states.empty()) return out;
  out.reserve(states.size());
  DisplacementIntegrator integrator(states.front().layout(), y0, h);
  out.push_back(integrator.current());
  for (std::size_t n = 1; n < states.size(); ++n) {
    integrator.add(states[n].values);
    out.push_back(integrator.current());
  }
  return out;
}

}  // namespace rbmwave
