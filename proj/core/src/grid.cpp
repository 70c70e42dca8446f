#include "rbmwave/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rbmwave/errors.hpp"

namespace rbmwave {

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps), h_(0.0) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ArgumentError("time horizon must be positive");
  if (steps == 0) throw ArgumentError("time grid needs at least one step");
  h_ = horizon_ / static_cast<double>(steps_);
}

TimeGrid TimeGrid::with_step(double horizon, double h) {
  if (!(h > 0.0)) throw ArgumentError("time step must be positive");
  const double ratio = horizon / h;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw ArgumentError("time step " + std::to_string(h) + " does not divide horizon " + std::to_string(horizon));
  }
  return TimeGrid(horizon, static_cast<std::size_t>(steps));
}

std::vector<EdgeGrid> build_grids(const MetricGraph& graph, double max_dx) {
  if (!(max_dx > 0.0)) throw ArgumentError("max_dx must be positive");
  std::vector<EdgeGrid> grids;
  grids.reserve(static_cast<std::size_t>(graph.edge_count()));
  for (const EdgeSpec& e : graph.edges()) {
    const double ratio = e.length / max_dx;
    // Guard against ratios like 20.000000000000004 that are integers up to rounding.
    const double cells = std::max(1.0, std::ceil(ratio - 1e-9 * ratio));
    EdgeGrid g;
    g.points = static_cast<std::size_t>(cells) + 1;
    g.dx = e.length / cells;
    grids.push_back(g);
  }
  return grids;
}

StateLayout::StateLayout(const MetricGraph& graph, std::vector<EdgeGrid> grids) : grids_(std::move(grids)) {
  if (grids_.size() != static_cast<std::size_t>(graph.edge_count())) {
    throw ArgumentError("expected one grid per edge");
  }
  field_offsets_.reserve(grids_.size());
  for (const EdgeGrid& g : grids_) {
    if (g.points < 2 || !(g.dx > 0.0)) throw ArgumentError("edge grids need >= 2 points and dx > 0");
    field_offsets_.push_back(field_size_);
    field_size_ += g.points;
  }
  weights_.resize(static_cast<Eigen::Index>(field_size_));
  for (std::size_t e = 0; e < grids_.size(); ++e) {
    const auto off = static_cast<Eigen::Index>(field_offsets_[e]);
    const auto n = static_cast<Eigen::Index>(grids_[e].points);
    weights_.segment(off, n).setConstant(grids_[e].dx);
    weights_(off) *= 0.5;
    weights_(off + n - 1) *= 0.5;
  }
}

bool StateLayout::operator==(const StateLayout& other) const {
  if (grids_.size() != other.grids_.size()) return false;
  for (std::size_t i = 0; i < grids_.size(); ++i) {
    if (grids_[i].points != other.grids_[i].points || grids_[i].dx != other.grids_[i].dx) return false;
  }
  return true;
}

ControlVector::ControlVector(std::size_t controlled_count, TimeGrid tgrid)
    : values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tgrid.steps() + 1),
                                    static_cast<Eigen::Index>(controlled_count))),
      tgrid_(tgrid) {}

ControlVector::ControlVector(Eigen::MatrixXd values, TimeGrid tgrid) : values_(std::move(values)), tgrid_(tgrid) {
  if (values_.rows() != static_cast<Eigen::Index>(tgrid_.steps() + 1)) {
    throw ArgumentError("control has " + std::to_string(values_.rows()) + " samples, time grid needs " +
                        std::to_string(tgrid_.steps() + 1));
  }
  if (!values_.allFinite()) throw ArgumentError("control values must be finite");
}

}  // namespace rbmwave
