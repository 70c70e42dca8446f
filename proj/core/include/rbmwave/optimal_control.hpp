#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "rbmwave/expressions.hpp"
#include "rbmwave/grid.hpp"
#include "rbmwave/metric_graph.hpp"
#include "rbmwave/randomization.hpp"
#include "rbmwave/riemann.hpp"
#include "rbmwave/simulation.hpp"
#include "rbmwave/step_operator.hpp"

namespace rbmwave {

/// Discrete H^2(0, T) inner product: trapezoid quadrature of u^2 + u'^2 + u''^2,
/// derivatives by second-order central differences (second-order one-sided at
/// the ends). Needs at least 3 time steps.
class H2Norm {
 public:
  explicit H2Norm(const TimeGrid& tgrid);

  /// Gram matrix R with |u|^2 = u^T R u for one controlled vertex.
  const Eigen::SparseMatrix<double>& gram() const { return gram_; }
  const TimeGrid& tgrid() const { return tgrid_; }

  double squared(const ControlVector& u) const;
  double l2_squared(const ControlVector& u) const;
  /// R u, column by column.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& u) const;
  /// R^{-1} g, column by column (Riesz representer of a sample gradient).
  Eigen::MatrixXd solve(const Eigen::MatrixXd& g) const;
  /// g^T R^{-1} g summed over columns.
  double dual_squared(const Eigen::MatrixXd& g) const;

 private:
  double weighted_squares(const Eigen::VectorXd& u) const;

  TimeGrid tgrid_;
  Eigen::VectorXd l2_weights_;
  // Applied in factored form W + D1^T W D1 + D2^T W D2; the assembled Gram
  // matrix has entries of order 1/h^3 and loses digits to cancellation.
  Eigen::SparseMatrix<double> d1_;
  Eigen::SparseMatrix<double> d2_;
  Eigen::SparseMatrix<double> gram_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
};

struct CostBreakdown {
  double tracking = 0.0;        // 1/2 ||y - y_d||^2, trapezoid in space, right rectangles in time
  double regularization = 0.0;  // alpha/2 |u|^2_{H^2}
  double total = 0.0;
};

struct OcpProblem {
  MetricGraph graph;
  std::vector<EdgeGrid> grids;
  TimeGrid tgrid;
  InitialData initial;
  TargetField target;
  double alpha = 1.0;
};

/// Cost and exact discrete gradient for fixed dynamics (one pattern schedule).
/// Holds scratch buffers; use one instance per thread.
class ReducedCost {
 public:
  ReducedCost(const OcpProblem& problem, PatternSchedule schedule);

  CostBreakdown cost(const ControlVector& u) const;
  /// Gradient with respect to the samples u(t_n, j), n = 0..K.
  CostBreakdown cost_and_gradient(const ControlVector& u, ControlVector& gradient) const;
  /// Hessian of J applied to v (J is quadratic in u).
  ControlVector hessian_times(const ControlVector& v) const;

  const H2Norm& norm() const { return norm_; }
  const OcpProblem& problem() const { return *problem_; }

 private:
  double forward(const Eigen::MatrixXd& u, bool homogeneous, bool keep_residuals) const;
  void backward(Eigen::MatrixXd& gradient) const;

  const OcpProblem* problem_;
  PatternSchedule schedule_;
  H2Norm norm_;
  Eigen::VectorXd initial_state_;
  mutable Eigen::MatrixXd residuals_;  // weighted residuals W (y_n - y_d), column n - 1
  mutable StepWorkspace work_;
};

enum class StepRule { fixed, backtracking };
enum class OptimizerMethod { gradient_descent, conjugate_gradient };

struct OptimizerConfig {
  std::size_t max_iters = 500;
  /// Stop when the H^2-dual norm of the gradient falls below this; default 1e-8 (1 + |J(0)|).
  std::optional<double> grad_tol;
  /// Preconditioned CG exploits that J is quadratic; gradient descent is kept for comparison.
  OptimizerMethod method = OptimizerMethod::conjugate_gradient;
  StepRule step_rule = StepRule::backtracking;
  /// Step length for StepRule::fixed; the backtracking rule starts at 1 / alpha.
  double fixed_step = 1.0;
  /// Starting iterate; zero when empty.
  std::optional<Eigen::MatrixXd> initial_control;
};

struct OcpSolution {
  ControlVector control;
  CostBreakdown cost;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double grad_tol = 0.0;
  bool converged = false;
  double wall_time = 0.0;
  std::vector<double> cost_history;
};

CostBreakdown cost(const OcpProblem& problem, const ControlVector& u, OperatorCache* cache = nullptr);
CostBreakdown cost(const OcpProblem& problem, const ControlVector& u, const SubsetScheme& scheme,
                   const RealizationVector& realization, OperatorCache* cache = nullptr);
ControlVector gradient(const OcpProblem& problem, const ControlVector& u, OperatorCache* cache = nullptr);
ControlVector gradient(const OcpProblem& problem, const ControlVector& u, const SubsetScheme& scheme,
                       const RealizationVector& realization, OperatorCache* cache = nullptr);

/// Minimizes J over the control samples for the given dynamics.
OcpSolution minimize(const ReducedCost& objective, const OptimizerConfig& config);

OcpSolution solve_ocp(const OcpProblem& problem, const OptimizerConfig& config, OperatorCache* cache = nullptr);
OcpSolution solve_rocp(const OcpProblem& problem, const SubsetScheme& scheme, const RealizationVector& realization,
                       const OptimizerConfig& config, OperatorCache* cache = nullptr);

struct ControlDifference {
  double rel_l2 = 0.0;
  double rel_h2 = 0.0;
};

/// Relative discrete L2 and H2 distances |a - b| / |b|.
ControlDifference compare_controls(const ControlVector& a, const ControlVector& b);

}  // namespace rbmwave
