#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rbmwave/grid.hpp"
#include "rbmwave/metric_graph.hpp"
#include "rbmwave/randomization.hpp"
#include "rbmwave/riemann.hpp"
#include "rbmwave/step_operator.hpp"

namespace rbmwave {

/// Step operators for k = 1..K, resolved once from an OperatorCache so the
/// time loop never touches the cache.
class PatternSchedule {
 public:
  static PatternSchedule deterministic(OperatorCache& cache, std::size_t steps);
  static PatternSchedule randomized(OperatorCache& cache, const SubsetScheme& scheme,
                                    const RealizationVector& realization);

  std::size_t steps() const { return index_.size(); }
  /// Operator taking t_{k-1} to t_k.
  const StepOperator& at(std::size_t k) const { return *operators_[index_[k - 1]]; }
  std::size_t distinct() const { return operators_.size(); }
  double h() const { return h_; }
  const std::shared_ptr<const StateLayout>& layout() const { return layout_; }

 private:
  PatternSchedule() = default;

  std::vector<std::shared_ptr<const StepOperator>> operators_;
  std::vector<std::size_t> index_;
  std::shared_ptr<const StateLayout> layout_;
  double h_ = 0.0;
};

/// Advances one Riemann state through a schedule, one step per call.
class TransportSolver {
 public:
  TransportSolver(const PatternSchedule& schedule, const ControlVector& control, Eigen::VectorXd initial_state);

  void advance();
  std::size_t step() const { return step_; }
  bool finished() const { return step_ == schedule_->steps(); }
  const Eigen::VectorXd& state() const { return current_; }

 private:
  const PatternSchedule* schedule_;
  const ControlVector* control_;
  Eigen::VectorXd current_;
  Eigen::VectorXd next_;
  std::vector<double> ubar_;
  StepWorkspace work_;
  std::size_t step_ = 0;
};

/// Riemann states at t_0..t_K with the displacement reconstructed on demand.
class Trajectory {
 public:
  Trajectory(std::vector<RiemannState> states, Eigen::VectorXd y0, double h, double wall_time);

  const std::vector<RiemannState>& states() const { return states_; }
  /// y(t_n) for n = 0..K; computed on first use (not safe to call concurrently the first time).
  const std::vector<Eigen::VectorXd>& y() const;
  double h() const { return h_; }
  double wall_time() const { return wall_time_; }

 private:
  std::vector<RiemannState> states_;
  Eigen::VectorXd y0_;
  double h_;
  double wall_time_;
  mutable std::optional<std::vector<Eigen::VectorXd>> y_;
};

Trajectory simulate(const PatternSchedule& schedule, const InitialData& initial, const MetricGraph& graph,
                    const ControlVector& control);

/// Deterministic system. When `cache` is given its layout and step must match the grids.
Trajectory simulate_deterministic(const MetricGraph& graph, const InitialData& initial, const ControlVector& control,
                                  const std::vector<EdgeGrid>& grids, const TimeGrid& tgrid,
                                  OperatorCache* cache = nullptr);

/// Randomized system; step k uses the pattern of subset realization.at(k).
Trajectory simulate_randomized(const MetricGraph& graph, const SubsetScheme& scheme,
                               const RealizationVector& realization, const InitialData& initial,
                               const ControlVector& control, const std::vector<EdgeGrid>& grids,
                               const TimeGrid& tgrid, OperatorCache* cache = nullptr);

struct RelativeErrors {
  double rel_w = 0.0;
  double rel_y = 0.0;
};

/// Streaming form of error_norms: feed matching time levels one at a time.
class ErrorAccumulator {
 public:
  explicit ErrorAccumulator(const StateLayout& layout);

  void add(const Eigen::VectorXd& w_a, const Eigen::VectorXd& w_b, const Eigen::VectorXd& y_a,
           const Eigen::VectorXd& y_b);
  /// Throws UndefinedRelativeError when the reference norm vanishes.
  RelativeErrors result() const;
  /// True when every difference fed so far was exactly zero.
  bool identical() const { return max_diff_w_ == 0.0 && max_diff_y_ == 0.0; }

 private:
  Eigen::VectorXd state_weights_;
  Eigen::VectorXd field_weights_;
  double max_diff_w_ = 0.0;
  double max_ref_w_ = 0.0;
  double max_diff_y_ = 0.0;
  double max_ref_y_ = 0.0;
};

/// max_n ||a_n - b_n|| / max_n ||b_n|| in the edgewise trapezoid L2 norm, for w and y.
RelativeErrors error_norms(const Trajectory& a, const Trajectory& b);

/// Discrete energy sum_e sum_x dx (w_plus^2 + w_minus^2) / 4 with trapezoid weights.
double discrete_energy(const StateLayout& layout, const Eigen::VectorXd& state);

}  // namespace rbmwave
