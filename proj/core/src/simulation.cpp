#include "rbmwave/simulation.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "rbmwave/errors.hpp"

namespace rbmwave {

PatternSchedule PatternSchedule::deterministic(OperatorCache& cache, std::size_t steps) {
  PatternSchedule s;
  s.operators_.push_back(cache.deterministic());
  s.index_.assign(steps, 0);
  s.layout_ = cache.layout();
  s.h_ = cache.h();
  return s;
}

PatternSchedule PatternSchedule::randomized(OperatorCache& cache, const SubsetScheme& scheme,
                                            const RealizationVector& realization) {
  PatternSchedule s;
  s.layout_ = cache.layout();
  s.h_ = cache.h();
  std::map<SubsetIndex, std::size_t> slot;
  std::map<const StepOperator*, std::size_t> by_operator;
  s.index_.reserve(realization.size());
  for (SubsetIndex omega : realization.indices) {
    auto it = slot.find(omega);
    if (it == slot.end()) {
      auto op = cache.for_subset(scheme, omega);
      auto [pos, fresh] = by_operator.emplace(op.get(), s.operators_.size());
      if (fresh) s.operators_.push_back(std::move(op));
      it = slot.emplace(omega, pos->second).first;
    }
    s.index_.push_back(it->second);
  }
  return s;
}

TransportSolver::TransportSolver(const PatternSchedule& schedule, const ControlVector& control,
                                 Eigen::VectorXd initial_state)
    : schedule_(&schedule), control_(&control), current_(std::move(initial_state)) {
  if (current_.size() != static_cast<Eigen::Index>(schedule.layout()->state_size()))
    throw ArgumentError("initial state does not match the layout");
  if (control.tgrid().steps() != schedule.steps() || std::abs(control.tgrid().h() - schedule.h()) > 1e-14)
    throw ArgumentError("control is not sampled on the simulation time grid");
  next_.resize(current_.size());
  ubar_.assign(control.controlled_count(), 0.0);
}

void TransportSolver::advance() {
  if (finished()) throw ArgumentError("simulation already reached the horizon");
  const std::size_t k = step_ + 1;
  for (std::size_t j = 0; j < ubar_.size(); ++j) ubar_[j] = -(*control_)(k, j);
  try {
    schedule_->at(k).advance(current_, ubar_, next_, work_);
  } catch (const SolverError& e) {
    throw SolverError(e.what(), k);
  }
  current_.swap(next_);
  step_ = k;
}

Trajectory::Trajectory(std::vector<RiemannState> states, Eigen::VectorXd y0, double h, double wall_time)
    : states_(std::move(states)), y0_(std::move(y0)), h_(h), wall_time_(wall_time) {}

const std::vector<Eigen::VectorXd>& Trajectory::y() const {
  if (!y_) y_ = reconstruct_y(states_, y0_, h_);
  return *y_;
}

Trajectory simulate(const PatternSchedule& schedule, const InitialData& initial, const MetricGraph& graph,
                    const ControlVector& control) {
  const auto start = std::chrono::steady_clock::now();
  const auto& layout = schedule.layout();
  if (static_cast<int>(control.controlled_count()) != static_cast<int>(graph.controlled_vertices().size()))
    throw ArgumentError("control has the wrong number of controlled vertices");
  RiemannState first = initial_riemann(initial, graph, layout);
  std::vector<RiemannState> states;
  states.reserve(schedule.steps() + 1);
  states.push_back(first);
  TransportSolver solver(schedule, control, first.values);
  while (!solver.finished()) {
    solver.advance();
    RiemannState s(layout, control.tgrid().t(solver.step()));
    s.values = solver.state();
    states.push_back(std::move(s));
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return Trajectory(std::move(states), initial.y0, schedule.h(), elapsed);
}

namespace {

std::shared_ptr<OperatorCache> resolve_cache(const MetricGraph& graph, const std::vector<EdgeGrid>& grids,
                                             const TimeGrid& tgrid, OperatorCache* cache) {
  if (cache) {
    if (std::abs(cache->h() - tgrid.h()) > 1e-14) throw ArgumentError("operator cache built for another step");
    const auto& have = cache->layout()->grids();
    bool same = have.size() == grids.size();
    for (std::size_t i = 0; same && i < grids.size(); ++i)
      same = have[i].points == grids[i].points && have[i].dx == grids[i].dx;
    if (!same) throw ArgumentError("operator cache built for other grids");
    return {std::shared_ptr<OperatorCache>{}, cache};
  }
  return std::make_shared<OperatorCache>(graph, std::make_shared<const StateLayout>(graph, grids), tgrid.h());
}

}  // namespace

Trajectory simulate_deterministic(const MetricGraph& graph, const InitialData& initial, const ControlVector& control,
                                  const std::vector<EdgeGrid>& grids, const TimeGrid& tgrid, OperatorCache* cache) {
  if (!(control.tgrid() == tgrid)) throw ArgumentError("control is not sampled on the time grid");
  auto owner = resolve_cache(graph, grids, tgrid, cache);
  const auto start = std::chrono::steady_clock::now();
  auto schedule = PatternSchedule::deterministic(*owner, tgrid.steps());
  Trajectory run = simulate(schedule, initial, graph, control);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return Trajectory(run.states(), initial.y0, tgrid.h(), elapsed);
}

Trajectory simulate_randomized(const MetricGraph& graph, const SubsetScheme& scheme,
                               const RealizationVector& realization, const InitialData& initial,
                               const ControlVector& control, const std::vector<EdgeGrid>& grids,
                               const TimeGrid& tgrid, OperatorCache* cache) {
  if (!(control.tgrid() == tgrid)) throw ArgumentError("control is not sampled on the time grid");
  if (realization.size() != tgrid.steps()) throw ArgumentError("realization length must equal the number of steps");
  scheme.validate_against(graph);
  auto owner = resolve_cache(graph, grids, tgrid, cache);
  const auto start = std::chrono::steady_clock::now();
  auto schedule = PatternSchedule::randomized(*owner, scheme, realization);
  Trajectory run = simulate(schedule, initial, graph, control);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return Trajectory(run.states(), initial.y0, tgrid.h(), elapsed);
}

ErrorAccumulator::ErrorAccumulator(const StateLayout& layout)
    : state_weights_(static_cast<Eigen::Index>(layout.state_size())), field_weights_(layout.quadrature_weights()) {
  for (std::size_t e = 0; e < layout.edge_count(); ++e) {
    const auto id = static_cast<EdgeId>(e + 1);
    const auto n = static_cast<Eigen::Index>(layout.points(id));
    const auto f = static_cast<Eigen::Index>(layout.field_offset(id));
    state_weights_.segment(static_cast<Eigen::Index>(layout.plus_offset(id)), n) = field_weights_.segment(f, n);
    state_weights_.segment(static_cast<Eigen::Index>(layout.minus_offset(id)), n) = field_weights_.segment(f, n);
  }
}

void ErrorAccumulator::add(const Eigen::VectorXd& w_a, const Eigen::VectorXd& w_b, const Eigen::VectorXd& y_a,
                           const Eigen::VectorXd& y_b) {
  if (w_a.size() != state_weights_.size() || w_b.size() != state_weights_.size() ||
      y_a.size() != field_weights_.size() || y_b.size() != field_weights_.size())
    throw ArgumentError("trajectories are sampled on different grids");
  const auto norm = [](const Eigen::VectorXd& wt, const auto& v) { return std::sqrt(wt.dot(v.cwiseAbs2())); };
  max_diff_w_ = std::max(max_diff_w_, norm(state_weights_, w_a - w_b));
  max_ref_w_ = std::max(max_ref_w_, norm(state_weights_, w_b));
  max_diff_y_ = std::max(max_diff_y_, norm(field_weights_, y_a - y_b));
  max_ref_y_ = std::max(max_ref_y_, norm(field_weights_, y_b));
}

RelativeErrors ErrorAccumulator::result() const {
  if (max_ref_w_ == 0.0 || max_ref_y_ == 0.0)
    throw UndefinedRelativeError("reference trajectory has zero norm");
  return {max_diff_w_ / max_ref_w_, max_diff_y_ / max_ref_y_};
}

RelativeErrors error_norms(const Trajectory& a, const Trajectory& b) {
  if (a.states().size() != b.states().size() || a.states().empty())
    throw ArgumentError("trajectories have different time grids");
  ErrorAccumulator acc(a.states().front().layout());
  const auto& ya = a.y();
  const auto& yb = b.y();
  for (std::size_t n = 0; n < a.states().size(); ++n) acc.add(a.states()[n].values, b.states()[n].values, ya[n], yb[n]);
  return acc.result();
}

double discrete_energy(const StateLayout& layout, const Eigen::VectorXd& state) {
  const Eigen::VectorXd& wt = layout.quadrature_weights();
  double energy = 0.0;
  for (std::size_t e = 0; e < layout.edge_count(); ++e) {
    const auto id = static_cast<EdgeId>(e + 1);
    const auto n = static_cast<Eigen::Index>(layout.points(id));
    const auto f = static_cast<Eigen::Index>(layout.field_offset(id));
    const auto w = wt.segment(f, n);
    energy += w.dot(state.segment(static_cast<Eigen::Index>(layout.plus_offset(id)), n).cwiseAbs2());
    energy += w.dot(state.segment(static_cast<Eigen::Index>(layout.minus_offset(id)), n).cwiseAbs2());
  }
  return energy / 4.0;
}

}  // namespace rbmwave
