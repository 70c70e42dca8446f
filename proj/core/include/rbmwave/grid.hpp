#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rbmwave/metric_graph.hpp"

namespace rbmwave {

/// Uniform grid on one edge, x_i = i * dx for i = 0..points-1.
struct EdgeGrid {
  std::size_t points = 0;
  double dx = 0.0;

  double x(std::size_t i) const { return static_cast<double>(i) * dx; }
};

/// Uniform time grid t_n = n h, n = 0..steps, with steps * h = horizon.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);
  /// Grid with step as close as possible to `h` that divides `horizon` evenly.
  /// Throws ArgumentError when horizon / h is not within 1e-9 of an integer.
  static TimeGrid with_step(double horizon, double h);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  double h() const { return h_; }
  double t(std::size_t n) const { return static_cast<double>(n) * h_; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_;
  std::size_t steps_;
  double h_;
};

/// points = ceil(length / max_dx) + 1 on every edge, uniform spacing.
std::vector<EdgeGrid> build_grids(const MetricGraph& graph, double max_dx);

/// Flat storage layout of the Riemann state: for each edge (in id order) a block
/// of w_plus samples followed by a block of w_minus samples. Displacement-like
/// fields use one block per edge with the same per-edge sample count.
class StateLayout {
 public:
  StateLayout(const MetricGraph& graph, std::vector<EdgeGrid> grids);

  std::size_t edge_count() const { return grids_.size(); }
  const std::vector<EdgeGrid>& grids() const { return grids_; }
  const EdgeGrid& grid(EdgeId e) const { return grids_[index(e)]; }
  std::size_t points(EdgeId e) const { return grids_[index(e)].points; }

  /// Flat offsets into a state vector.
  std::size_t plus_offset(EdgeId e) const { return 2 * field_offsets_[index(e)]; }
  std::size_t minus_offset(EdgeId e) const { return 2 * field_offsets_[index(e)] + points(e); }
  /// Offset into a per-point field vector (displacement, quadrature weights).
  std::size_t field_offset(EdgeId e) const { return field_offsets_[index(e)]; }

  std::size_t state_size() const { return 2 * field_size_; }
  std::size_t field_size() const { return field_size_; }

  /// Trapezoid weights dx * (1/2, 1, ..., 1, 1/2) for every edge, field layout.
  const Eigen::VectorXd& quadrature_weights() const { return weights_; }

  bool operator==(const StateLayout& other) const;

 private:
  static std::size_t index(EdgeId e) { return static_cast<std::size_t>(e - 1); }

  std::vector<EdgeGrid> grids_;
  std::vector<std::size_t> field_offsets_;
  std::size_t field_size_ = 0;
  Eigen::VectorXd weights_;
};

/// Time-sampled boundary controls u at the controlled vertices (not the signed
/// forcing; the solver applies ubar = -u internally).
class ControlVector {
 public:
  ControlVector(std::size_t controlled_count, TimeGrid tgrid);
  ControlVector(Eigen::MatrixXd values, TimeGrid tgrid);

  const TimeGrid& tgrid() const { return tgrid_; }
  std::size_t controlled_count() const { return static_cast<std::size_t>(values_.cols()); }
  /// values()(n, j): control of controlled vertex j at time t_n.
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  double operator()(std::size_t n, std::size_t slot) const { return values_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(slot)); }

 private:
  Eigen::MatrixXd values_;
  TimeGrid tgrid_;
};

}  // namespace rbmwave
