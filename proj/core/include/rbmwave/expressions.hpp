#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "rbmwave/grid.hpp"
#include "rbmwave/metric_graph.hpp"
#include "rbmwave/riemann.hpp"

namespace rbmwave {

/// Named scalar expressions used for initial data, controls and targets.
///
///   zero            0
///   constant        value
///   sin             amplitude * sin(rate * s)   (s is t or x depending on use)
///   sampled         samples[i], one per grid node / time level
struct Expression {
  enum class Kind { zero, constant, sine, sampled };

  Kind kind = Kind::zero;
  double value = 0.0;      // constant value or sine amplitude
  double rate = 0.0;       // sine angular rate
  std::vector<double> samples;

  static Expression zero() { return {}; }
  static Expression constant(double v) { return {Kind::constant, v, 0.0, {}}; }
  static Expression sine(double amplitude, double rate) { return {Kind::sine, amplitude, rate, {}}; }
  static Expression sampled(std::vector<double> v) { return {Kind::sampled, 0.0, 0.0, std::move(v)}; }

  bool analytic() const { return kind != Kind::sampled; }
  /// Value at s; not defined for sampled expressions.
  double operator()(double s) const;
  /// Exact derivative at s; not defined for sampled expressions.
  double derivative(double s) const;
};

/// Samples y0 and y1 (functions of x) on the edge grids. y0x is taken from the
/// analytic derivative when y0 is analytic, otherwise from central differences
/// (second-order one-sided at the edge ends). Sampled inputs use field layout.
InitialData sample_initial_data(const StateLayout& layout, const Expression& y0, const Expression& y1);

/// Samples u(t) on the time grid for every controlled vertex.
ControlVector sample_control(std::size_t controlled_count, const TimeGrid& tgrid, const Expression& u);

/// Target displacement y_d on (time grid) x (edge grids).
class TargetField {
 public:
  /// Same field at every time level.
  static TargetField stationary(Eigen::VectorXd field);
  /// One field per time level n = 0..K.
  static TargetField sampled(std::vector<Eigen::VectorXd> fields);
  /// y_d(t, x) = expr(t) when `depends_on_time`, expr(x) otherwise.
  static TargetField from_expression(const Expression& expr, const StateLayout& layout, const TimeGrid& tgrid,
                                     bool depends_on_time);

  const Eigen::VectorXd& at(std::size_t n) const { return fields_.size() == 1 ? fields_.front() : fields_[n]; }
  /// Throws ArgumentError when the sampling does not match.
  void check(const StateLayout& layout, const TimeGrid& tgrid) const;

 private:
  std::vector<Eigen::VectorXd> fields_;
};

}  // namespace rbmwave
