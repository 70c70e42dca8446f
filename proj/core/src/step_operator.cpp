#include "rbmwave/step_operator.hpp"

#include <cstring>
#include <string>

#include "rbmwave/errors.hpp"
#include "rbmwave/riemann.hpp"

namespace rbmwave {

StepOperator::StepOperator(const MetricGraph& graph, std::shared_ptr<const StateLayout> layout, double h,
                           std::vector<double> pattern_speeds)
    : layout_(std::move(layout)), h_(h), speeds_(std::move(pattern_speeds)) {
  if (!layout_) throw ArgumentError("step operator needs a layout");
  if (!(h_ > 0.0)) throw ArgumentError("time step must be positive");
  if (speeds_.size() != static_cast<std::size_t>(graph.edge_count()) || layout_->edge_count() != speeds_.size())
    throw ArgumentError("pattern speeds do not match the graph");

  const std::size_t n_state = layout_->state_size();
  std::vector<long> local(n_state, -1);
  for (const auto& spec : graph.edges()) {
    const double s = speeds_[static_cast<std::size_t>(spec.id - 1)];
    if (s < 0.0) throw ArgumentError("pattern speeds must be non-negative");
    const std::size_t base = layout_->plus_offset(spec.id);
    const std::size_t len = 2 * layout_->points(spec.id);
    if (s == 0.0) {
      frozen_ranges_.push_back({base, len});
      continue;
    }
    for (std::size_t k = 0; k < len; ++k) {
      local[base + k] = static_cast<long>(active_global_.size());
      active_global_.push_back(base + k);
    }
  }

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> a_entries;
  std::vector<Triplet> r_entries;
  const auto n_active = static_cast<Eigen::Index>(active_global_.size());

  for (const auto& spec : graph.edges()) {
    const double s = speeds_[static_cast<std::size_t>(spec.id - 1)];
    if (s == 0.0) continue;
    const EdgeGrid& grid = layout_->grid(spec.id);
    const double r = h_ * s / grid.dx;
    const std::size_t n = grid.points;
    const std::size_t p = layout_->plus_offset(spec.id);
    const std::size_t m = layout_->minus_offset(spec.id);
    for (std::size_t i = 1; i < n; ++i) {
      const auto row = local[p + i];
      a_entries.emplace_back(row, row, 1.0 + r);
      a_entries.emplace_back(row, local[p + i - 1], -r);
      r_entries.emplace_back(row, static_cast<Eigen::Index>(p + i), 1.0);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto row = local[m + i];
      a_entries.emplace_back(row, row, 1.0 + r);
      a_entries.emplace_back(row, local[m + i + 1], -r);
      r_entries.emplace_back(row, static_cast<Eigen::Index>(m + i), 1.0);
    }
  }

  for (VertexId v = 1; v <= graph.vertex_count(); ++v) {
    const auto incident = graph.edges_at(v);
    const double ctot = graph.c_tot(v);
    const int slot = graph.control_slot(v);
    std::vector<EndpointIndices> ends;
    ends.reserve(incident.size());
    for (const auto& inc : incident) ends.push_back(endpoint_indices(*layout_, inc));

    for (std::size_t i = 0; i < incident.size(); ++i) {
      const std::size_t target = ends[i].inflow;
      const bool active = speeds_[static_cast<std::size_t>(incident[i].edge - 1)] > 0.0;
      if (active) {
        const auto row = local[target];
        a_entries.emplace_back(row, row, 1.0);
        for (std::size_t k = 0; k < incident.size(); ++k) {
          const double beta = CouplingWeights::outflow(graph.edge(incident[k].edge).speed, ctot, k == i);
          if (beta == 0.0) continue;
          const std::size_t src = ends[k].outflow;
          if (local[src] >= 0)
            a_entries.emplace_back(row, local[src], -beta);
          else
            r_entries.emplace_back(row, static_cast<Eigen::Index>(src), beta);
        }
        if (slot >= 0) rhs_from_control_.push_back({row, slot, CouplingWeights::control(ctot)});
      } else {
        ExplicitRow er;
        er.target = target;
        er.first = explicit_sources_.size();
        for (std::size_t k = 0; k < incident.size(); ++k) {
          const double beta = CouplingWeights::outflow(graph.edge(incident[k].edge).speed, ctot, k == i);
          if (beta != 0.0) explicit_sources_.emplace_back(ends[k].outflow, beta);
        }
        er.count = explicit_sources_.size() - er.first;
        if (slot >= 0) {
          er.control_slot = slot;
          er.control_weight = CouplingWeights::control(ctot);
        }
        explicit_rows_.push_back(er);
      }
    }
  }

  rhs_from_state_.resize(n_active, static_cast<Eigen::Index>(n_state));
  rhs_from_state_.setFromTriplets(r_entries.begin(), r_entries.end());
  if (n_active > 0) {
    system_.resize(n_active, n_active);
    system_.setFromTriplets(a_entries.begin(), a_entries.end());
    system_.makeCompressed();
    lu_.analyzePattern(system_);
    lu_.factorize(system_);
    if (lu_.info() != Eigen::Success)
      throw SolverError("factorization of the implicit step failed: " + lu_.lastErrorMessage());
  }
}

void StepOperator::advance(const Eigen::VectorXd& w_old, std::span<const double> ubar, Eigen::VectorXd& w_new,
                           StepWorkspace& work) const {
  const auto n_state = static_cast<Eigen::Index>(layout_->state_size());
  if (w_old.size() != n_state) throw ArgumentError("state size mismatch");
  if (w_new.size() != n_state) w_new.resize(n_state);

  for (const auto& range : frozen_ranges_)
    std::memcpy(w_new.data() + range.begin, w_old.data() + range.begin, range.size * sizeof(double));

  if (!active_global_.empty()) {
    work.rhs.noalias() = rhs_from_state_ * w_old;
    for (const auto& c : rhs_from_control_) work.rhs[c.row] += c.weight * ubar[static_cast<std::size_t>(c.slot)];
    work.solution = lu_.solve(work.rhs);
    if (lu_.info() != Eigen::Success) throw SolverError("implicit step solve failed");
    for (std::size_t k = 0; k < active_global_.size(); ++k)
      w_new[static_cast<Eigen::Index>(active_global_[k])] = work.solution[static_cast<Eigen::Index>(k)];
  }

  for (const auto& er : explicit_rows_) {
    double value = 0.0;
    for (std::size_t k = er.first; k < er.first + er.count; ++k)
      value += explicit_sources_[k].second * w_new[static_cast<Eigen::Index>(explicit_sources_[k].first)];
    if (er.control_slot >= 0) value += er.control_weight * ubar[static_cast<std::size_t>(er.control_slot)];
    w_new[static_cast<Eigen::Index>(er.target)] = value;
  }
}

void StepOperator::adjoint(const Eigen::VectorXd& grad_new, Eigen::VectorXd& grad_old, std::span<double> grad_ubar,
                           StepWorkspace& work) const {
  const auto n_state = static_cast<Eigen::Index>(layout_->state_size());
  if (grad_new.size() != n_state) throw ArgumentError("state size mismatch");
  work.scratch = grad_new;
  Eigen::VectorXd& g = work.scratch;

  for (auto it = explicit_rows_.rbegin(); it != explicit_rows_.rend(); ++it) {
    const double gq = g[static_cast<Eigen::Index>(it->target)];
    if (gq == 0.0) continue;
    for (std::size_t k = it->first; k < it->first + it->count; ++k)
      g[static_cast<Eigen::Index>(explicit_sources_[k].first)] += explicit_sources_[k].second * gq;
    if (it->control_slot >= 0) grad_ubar[static_cast<std::size_t>(it->control_slot)] += it->control_weight * gq;
    g[static_cast<Eigen::Index>(it->target)] = 0.0;
  }

  if (!active_global_.empty()) {
    work.rhs.resize(static_cast<Eigen::Index>(active_global_.size()));
    for (std::size_t k = 0; k < active_global_.size(); ++k)
      work.rhs[static_cast<Eigen::Index>(k)] = g[static_cast<Eigen::Index>(active_global_[k])];
    work.solution = lu_.transpose().solve(work.rhs);
    grad_old.noalias() = rhs_from_state_.transpose() * work.solution;
    for (const auto& c : rhs_from_control_)
      grad_ubar[static_cast<std::size_t>(c.slot)] += c.weight * work.solution[c.row];
  } else {
    grad_old.setZero(n_state);
  }

  for (const auto& range : frozen_ranges_)
    for (std::size_t k = range.begin; k < range.begin + range.size; ++k)
      grad_old[static_cast<Eigen::Index>(k)] += g[static_cast<Eigen::Index>(k)];
}

std::unique_ptr<StepOperator> assemble_operator(const MetricGraph& graph, const std::vector<EdgeGrid>& grids,
                                                double h, const std::map<EdgeId, double>& speeds) {
  std::vector<double> pattern(static_cast<std::size_t>(graph.edge_count()), 0.0);
  if (speeds.size() != pattern.size()) throw ArgumentError("one speed per edge is required");
  for (const auto& [e, s] : speeds) {
    if (e < 1 || e > graph.edge_count()) throw ArgumentError("unknown edge id " + std::to_string(e));
    pattern[static_cast<std::size_t>(e - 1)] = s;
  }
  auto layout = std::make_shared<const StateLayout>(graph, grids);
  return std::make_unique<StepOperator>(graph, std::move(layout), h, std::move(pattern));
}

OperatorCache::OperatorCache(MetricGraph graph, std::shared_ptr<const StateLayout> layout, double h)
    : graph_(std::move(graph)), layout_(std::move(layout)), h_(h) {
  if (!layout_) throw ArgumentError("operator cache needs a layout");
}

std::shared_ptr<const StepOperator> OperatorCache::for_speeds(const std::vector<double>& speeds) {
  std::lock_guard lock(mutex_);
  auto it = operators_.find(speeds);
  if (it != operators_.end()) return it->second;
  auto op = std::make_shared<const StepOperator>(graph_, layout_, h_, speeds);
  ++factorizations_;
  operators_.emplace(speeds, op);
  return op;
}

std::shared_ptr<const StepOperator> OperatorCache::deterministic() {
  std::vector<double> speeds;
  speeds.reserve(graph_.edges().size());
  for (const auto& e : graph_.edges()) speeds.push_back(e.speed);
  return for_speeds(speeds);
}

std::shared_ptr<const StepOperator> OperatorCache::for_subset(const SubsetScheme& scheme, SubsetIndex omega) {
  return for_speeds(randomized_speeds(scheme, graph_, omega));
}

}  // namespace rbmwave
