#include "rbmwave/optimal_control.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "rbmwave/errors.hpp"

namespace rbmwave {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::SparseMatrix<double> from_triplets(Eigen::Index n, const Triplets& t) {
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

H2Norm::H2Norm(const TimeGrid& tgrid) : tgrid_(tgrid) {
  const auto k = static_cast<Eigen::Index>(tgrid.steps());
  if (k < 3) throw ArgumentError("the discrete H2 norm needs at least 3 time steps");
  const Eigen::Index n = k + 1;
  const double h = tgrid.h();

  l2_weights_ = Eigen::VectorXd::Constant(n, h);
  l2_weights_[0] = l2_weights_[n - 1] = h / 2.0;

  Triplets d1;
  Triplets d2;
  const double a = 1.0 / (2.0 * h);
  const double b = 1.0 / (h * h);
  d1.emplace_back(0, 0, -3.0 * a);
  d1.emplace_back(0, 1, 4.0 * a);
  d1.emplace_back(0, 2, -1.0 * a);
  d1.emplace_back(n - 1, n - 3, 1.0 * a);
  d1.emplace_back(n - 1, n - 2, -4.0 * a);
  d1.emplace_back(n - 1, n - 1, 3.0 * a);
  d2.emplace_back(0, 0, 2.0 * b);
  d2.emplace_back(0, 1, -5.0 * b);
  d2.emplace_back(0, 2, 4.0 * b);
  d2.emplace_back(0, 3, -1.0 * b);
  d2.emplace_back(n - 1, n - 4, -1.0 * b);
  d2.emplace_back(n - 1, n - 3, 4.0 * b);
  d2.emplace_back(n - 1, n - 2, -5.0 * b);
  d2.emplace_back(n - 1, n - 1, 2.0 * b);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    d1.emplace_back(i, i - 1, -a);
    d1.emplace_back(i, i + 1, a);
    d2.emplace_back(i, i - 1, b);
    d2.emplace_back(i, i, -2.0 * b);
    d2.emplace_back(i, i + 1, b);
  }
  d1_ = from_triplets(n, d1);
  d2_ = from_triplets(n, d2);
  Eigen::SparseMatrix<double> W(n, n);
  W.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i) W.insert(i, i) = l2_weights_[i];

  gram_ = W;
  gram_ += Eigen::SparseMatrix<double>(d1_.transpose() * W * d1_);
  gram_ += Eigen::SparseMatrix<double>(d2_.transpose() * W * d2_);
  gram_.makeCompressed();
  factor_.compute(gram_);
  if (factor_.info() != Eigen::Success) throw SolverError("factorization of the H2 Gram matrix failed");
}

double H2Norm::weighted_squares(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd du = d1_ * u;
  const Eigen::VectorXd ddu = d2_ * u;
  return l2_weights_.dot(u.cwiseAbs2() + du.cwiseAbs2() + ddu.cwiseAbs2());
}

double H2Norm::squared(const ControlVector& u) const {
  double total = 0.0;
  for (Eigen::Index j = 0; j < u.values().cols(); ++j) total += weighted_squares(u.values().col(j));
  return total;
}

double H2Norm::l2_squared(const ControlVector& u) const {
  double total = 0.0;
  for (Eigen::Index j = 0; j < u.values().cols(); ++j) total += l2_weights_.dot(u.values().col(j).cwiseAbs2());
  return total;
}

Eigen::MatrixXd H2Norm::apply(const Eigen::MatrixXd& u) const {
  Eigen::MatrixXd out(u.rows(), u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const Eigen::VectorXd col = u.col(j);
    out.col(j) = l2_weights_.cwiseProduct(col) + d1_.transpose() * l2_weights_.cwiseProduct(d1_ * col) +
                 d2_.transpose() * l2_weights_.cwiseProduct(d2_ * col);
  }
  return out;
}

Eigen::MatrixXd H2Norm::solve(const Eigen::MatrixXd& g) const {
  Eigen::MatrixXd out(g.rows(), g.cols());
  for (Eigen::Index j = 0; j < g.cols(); ++j) out.col(j) = factor_.solve(Eigen::VectorXd(g.col(j)));
  return out;
}

double H2Norm::dual_squared(const Eigen::MatrixXd& g) const {
  double total = 0.0;
  const Eigen::MatrixXd r = solve(g);
  for (Eigen::Index j = 0; j < g.cols(); ++j) total += g.col(j).dot(r.col(j));
  return total;
}

ReducedCost::ReducedCost(const OcpProblem& problem, PatternSchedule schedule)
    : problem_(&problem), schedule_(std::move(schedule)), norm_(problem.tgrid) {
  if (!(problem.alpha > 0.0)) throw ArgumentError("alpha must be positive");
  if (schedule_.steps() != problem.tgrid.steps() || std::abs(schedule_.h() - problem.tgrid.h()) > 1e-14)
    throw ArgumentError("dynamics and problem use different time grids");
  const StateLayout& layout = *schedule_.layout();
  problem.target.check(layout, problem.tgrid);
  initial_state_ = initial_riemann(problem.initial, problem.graph, schedule_.layout()).values;
}

double ReducedCost::forward(const Eigen::MatrixXd& u, bool homogeneous, bool keep_residuals) const {
  const StateLayout& layout = *schedule_.layout();
  const std::size_t steps = schedule_.steps();
  const double h = schedule_.h();
  if (u.rows() != static_cast<Eigen::Index>(steps + 1) ||
      u.cols() != static_cast<Eigen::Index>(problem_->graph.controlled_vertices().size()))
    throw ArgumentError("control does not match the problem");
  const Eigen::VectorXd& wt = layout.quadrature_weights();
  const auto fields = static_cast<Eigen::Index>(layout.field_size());

  Eigen::VectorXd state = homogeneous ? Eigen::VectorXd::Zero(initial_state_.size()) : initial_state_;
  Eigen::VectorXd next(state.size());
  DisplacementIntegrator y(layout, homogeneous ? Eigen::VectorXd::Zero(fields) : problem_->initial.y0, h);
  if (keep_residuals) residuals_.resize(fields, static_cast<Eigen::Index>(steps));
  std::vector<double> ubar(static_cast<std::size_t>(u.cols()));
  Eigen::VectorXd r(fields);

  double tracking = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    for (std::size_t j = 0; j < ubar.size(); ++j) ubar[j] = -u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j));
    try {
      schedule_.at(n).advance(state, ubar, next, work_);
    } catch (const SolverError& e) {
      throw SolverError(e.what(), n);
    }
    state.swap(next);
    y.add(state);
    if (homogeneous)
      r = y.current();
    else
      r = y.current() - problem_->target.at(n);
    tracking += 0.5 * h * wt.dot(r.cwiseAbs2());
    if (keep_residuals) residuals_.col(static_cast<Eigen::Index>(n - 1)) = wt.cwiseProduct(r);
  }
  return tracking;
}

void ReducedCost::backward(Eigen::MatrixXd& grad) const {
  const StateLayout& layout = *schedule_.layout();
  const std::size_t steps = schedule_.steps();
  const double h = schedule_.h();
  const auto fields = static_cast<Eigen::Index>(layout.field_size());
  const auto n_state = static_cast<Eigen::Index>(layout.state_size());

  Eigen::VectorXd suffix = Eigen::VectorXd::Zero(fields);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n_state);
  Eigen::VectorXd previous(n_state);
  std::vector<double> ubar_grad(static_cast<std::size_t>(grad.cols()));

  for (std::size_t n = steps; n >= 1; --n) {
    suffix += h * residuals_.col(static_cast<Eigen::Index>(n - 1));
    for (std::size_t e = 0; e < layout.edge_count(); ++e) {
      const auto id = static_cast<EdgeId>(e + 1);
      const auto pts = static_cast<Eigen::Index>(layout.points(id));
      const auto s = suffix.segment(static_cast<Eigen::Index>(layout.field_offset(id)), pts);
      lambda.segment(static_cast<Eigen::Index>(layout.plus_offset(id)), pts) += 0.5 * h * s;
      lambda.segment(static_cast<Eigen::Index>(layout.minus_offset(id)), pts) += 0.5 * h * s;
    }
    std::fill(ubar_grad.begin(), ubar_grad.end(), 0.0);
    schedule_.at(n).adjoint(lambda, previous, ubar_grad, work_);
    for (std::size_t j = 0; j < ubar_grad.size(); ++j)
      grad(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) -= ubar_grad[j];
    lambda.swap(previous);
  }
}

CostBreakdown ReducedCost::cost(const ControlVector& u) const {
  CostBreakdown c;
  c.tracking = forward(u.values(), false, false);
  c.regularization = 0.5 * problem_->alpha * norm_.squared(u);
  c.total = c.tracking + c.regularization;
  return c;
}

CostBreakdown ReducedCost::cost_and_gradient(const ControlVector& u, ControlVector& gradient) const {
  CostBreakdown c;
  c.tracking = forward(u.values(), false, true);
  c.regularization = 0.5 * problem_->alpha * norm_.squared(u);
  c.total = c.tracking + c.regularization;
  gradient.values() = problem_->alpha * norm_.apply(u.values());
  backward(gradient.values());
  return c;
}

ControlVector ReducedCost::hessian_times(const ControlVector& v) const {
  forward(v.values(), true, true);
  ControlVector out(problem_->alpha * norm_.apply(v.values()), v.tgrid());
  backward(out.values());
  return out;
}

namespace {

std::shared_ptr<OperatorCache> own_cache(const OcpProblem& problem, OperatorCache* cache) {
  if (cache) return {std::shared_ptr<OperatorCache>{}, cache};
  return std::make_shared<OperatorCache>(problem.graph, std::make_shared<const StateLayout>(problem.graph, problem.grids),
                                         problem.tgrid.h());
}

void check_cache(const OcpProblem& problem, const OperatorCache& cache) {
  if (std::abs(cache.h() - problem.tgrid.h()) > 1e-14) throw ArgumentError("operator cache built for another step");
  const auto& have = cache.layout()->grids();
  bool same = have.size() == problem.grids.size();
  for (std::size_t i = 0; same && i < have.size(); ++i)
    same = have[i].points == problem.grids[i].points && have[i].dx == problem.grids[i].dx;
  if (!same) throw ArgumentError("operator cache built for other grids");
}

PatternSchedule deterministic_schedule(const OcpProblem& problem, OperatorCache& cache) {
  check_cache(problem, cache);
  return PatternSchedule::deterministic(cache, problem.tgrid.steps());
}

PatternSchedule randomized_schedule(const OcpProblem& problem, const SubsetScheme& scheme,
                                    const RealizationVector& realization, OperatorCache& cache) {
  check_cache(problem, cache);
  scheme.validate_against(problem.graph);
  if (realization.size() != problem.tgrid.steps())
    throw ArgumentError("realization length must equal the number of steps");
  return PatternSchedule::randomized(cache, scheme, realization);
}

double dual_norm(const H2Norm& norm, const ControlVector& g) { return std::sqrt(std::max(0.0, norm.dual_squared(g.values()))); }

OcpSolution gradient_descent(const ReducedCost& objective, const OptimizerConfig& config, ControlVector u) {
  const double alpha = objective.problem().alpha;
  const H2Norm& norm = objective.norm();
  OcpSolution sol{u, {}, 0, 0.0, 0.0, false, 0.0, {}};

  ControlVector g(u.controlled_count(), u.tgrid());
  CostBreakdown current = objective.cost_and_gradient(u, g);
  double tol = config.grad_tol.value_or(0.0);
  if (!config.grad_tol) {
    ControlVector zero(u.controlled_count(), u.tgrid());
    const double j0 = config.initial_control ? objective.cost(zero).total : current.total;
    tol = 1e-8 * (1.0 + std::abs(j0));
  }
  if (!(tol > 0.0)) throw ArgumentError("grad_tol must be positive");
  sol.grad_tol = tol;
  sol.cost_history.push_back(current.total);

  ControlVector trial = u;
  ControlVector trial_grad = g;
  std::size_t it = 0;
  double gnorm = dual_norm(norm, g);
  for (; it < config.max_iters && gnorm > tol; ++it) {
    const Eigen::MatrixXd direction = -norm.solve(g.values());
    const double slope = g.values().cwiseProduct(direction).sum();
    double step = config.step_rule == StepRule::fixed ? config.fixed_step : 1.0 / alpha;
    bool accepted = false;
    CostBreakdown next;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      trial.values() = u.values() + step * direction;
      next = objective.cost_and_gradient(trial, trial_grad);
      if (!std::isfinite(next.total)) {
        if (config.step_rule == StepRule::fixed) break;
        continue;
      }
      if (config.step_rule == StepRule::fixed || next.total <= current.total + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw SolverError("line search found no acceptable step at iteration " + std::to_string(it) +
                        " (cost " + std::to_string(current.total) + ", gradient norm " + std::to_string(gnorm) + ")");
    std::swap(u, trial);
    std::swap(g, trial_grad);
    current = next;
    gnorm = dual_norm(norm, g);
    sol.cost_history.push_back(current.total);
  }
  sol.control = u;
  sol.cost = current;
  sol.iterations = it;
  sol.gradient_norm = gnorm;
  sol.converged = gnorm <= tol;
  return sol;
}

OcpSolution conjugate_gradient(const ReducedCost& objective, const OptimizerConfig& config, ControlVector u) {
  const double alpha = objective.problem().alpha;
  const H2Norm& norm = objective.norm();
  OcpSolution sol{u, {}, 0, 0.0, 0.0, false, 0.0, {}};

  ControlVector g(u.controlled_count(), u.tgrid());
  CostBreakdown current = objective.cost_and_gradient(u, g);
  double tol = config.grad_tol.value_or(0.0);
  if (!config.grad_tol) {
    ControlVector zero(u.controlled_count(), u.tgrid());
    const double j0 = config.initial_control ? objective.cost(zero).total : current.total;
    tol = 1e-8 * (1.0 + std::abs(j0));
  }
  if (!(tol > 0.0)) throw ArgumentError("grad_tol must be positive");
  sol.grad_tol = tol;
  sol.cost_history.push_back(current.total);

  std::size_t it = 0;
  double gnorm = dual_norm(norm, g);
  // Restart from the true gradient whenever the recursive residual claims convergence.
  while (gnorm > tol && it < config.max_iters) {
    Eigen::MatrixXd r = -g.values();
    Eigen::MatrixXd z = norm.solve(r) / alpha;
    Eigen::MatrixXd p = z;
    double rz = r.cwiseProduct(z).sum();
    double value = current.total;
    while (it < config.max_iters) {
      const ControlVector hp = objective.hessian_times(ControlVector(p, u.tgrid()));
      const double curvature = p.cwiseProduct(hp.values()).sum();
      if (!(curvature > 0.0) || !std::isfinite(curvature))
        throw SolverError("non-positive curvature at iteration " + std::to_string(it));
      const double a = rz / curvature;
      u.values() += a * p;
      value -= 0.5 * a * rz;
      r -= a * hp.values();
      ++it;
      sol.cost_history.push_back(value);
      z = norm.solve(r) / alpha;
      const double rz_next = r.cwiseProduct(z).sum();
      if (std::sqrt(std::max(0.0, alpha * rz_next)) <= tol) break;
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    current = objective.cost_and_gradient(u, g);
    gnorm = dual_norm(norm, g);
  }
  sol.control = u;
  sol.cost = current;
  sol.iterations = it;
  sol.gradient_norm = gnorm;
  sol.converged = gnorm <= tol;
  return sol;
}

}  // namespace

CostBreakdown cost(const OcpProblem& problem, const ControlVector& u, OperatorCache* cache) {
  auto owner = own_cache(problem, cache);
  return ReducedCost(problem, deterministic_schedule(problem, *owner)).cost(u);
}

CostBreakdown cost(const OcpProblem& problem, const ControlVector& u, const SubsetScheme& scheme,
                   const RealizationVector& realization, OperatorCache* cache) {
  auto owner = own_cache(problem, cache);
  return ReducedCost(problem, randomized_schedule(problem, scheme, realization, *owner)).cost(u);
}

ControlVector gradient(const OcpProblem& problem, const ControlVector& u, OperatorCache* cache) {
  auto owner = own_cache(problem, cache);
  ControlVector g(u.controlled_count(), u.tgrid());
  ReducedCost(problem, deterministic_schedule(problem, *owner)).cost_and_gradient(u, g);
  return g;
}

ControlVector gradient(const OcpProblem& problem, const ControlVector& u, const SubsetScheme& scheme,
                       const RealizationVector& realization, OperatorCache* cache) {
  auto owner = own_cache(problem, cache);
  ControlVector g(u.controlled_count(), u.tgrid());
  ReducedCost(problem, randomized_schedule(problem, scheme, realization, *owner)).cost_and_gradient(u, g);
  return g;
}

OcpSolution minimize(const ReducedCost& objective, const OptimizerConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const OcpProblem& problem = objective.problem();
  ControlVector u(problem.graph.controlled_vertices().size(), problem.tgrid);
  if (config.initial_control) {
    if (config.initial_control->rows() != u.values().rows() || config.initial_control->cols() != u.values().cols())
      throw ArgumentError("initial control does not match the problem");
    u.values() = *config.initial_control;
  }
  OcpSolution sol = config.method == OptimizerMethod::conjugate_gradient ? conjugate_gradient(objective, config, u)
                                                                          : gradient_descent(objective, config, u);
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

OcpSolution solve_ocp(const OcpProblem& problem, const OptimizerConfig& config, OperatorCache* cache) {
  auto owner = own_cache(problem, cache);
  return minimize(ReducedCost(problem, deterministic_schedule(problem, *owner)), config);
}

OcpSolution solve_rocp(const OcpProblem& problem, const SubsetScheme& scheme, const RealizationVector& realization,
                       const OptimizerConfig& config, OperatorCache* cache) {
  auto owner = own_cache(problem, cache);
  return minimize(ReducedCost(problem, randomized_schedule(problem, scheme, realization, *owner)), config);
}

ControlDifference compare_controls(const ControlVector& a, const ControlVector& b) {
  if (!(a.tgrid() == b.tgrid()) || a.controlled_count() != b.controlled_count())
    throw ArgumentError("controls are sampled on different grids");
  const H2Norm norm(b.tgrid());
  ControlVector diff(a.values() - b.values(), a.tgrid());
  const double l2_ref = norm.l2_squared(b);
  const double h2_ref = norm.squared(b);
  if (l2_ref == 0.0 || h2_ref == 0.0) throw UndefinedRelativeError("reference control has zero norm");
  return {std::sqrt(norm.l2_squared(diff) / l2_ref), std::sqrt(norm.squared(diff) / h2_ref)};
}

}  // namespace rbmwave
