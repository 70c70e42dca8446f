#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "rbmwave/grid.hpp"
#include "rbmwave/metric_graph.hpp"
#include "rbmwave/randomization.hpp"

namespace rbmwave {

/// Scratch buffers for StepOperator; one per concurrently running simulation.
struct StepWorkspace {
  Eigen::VectorXd rhs;
  Eigen::VectorXd solution;
  Eigen::VectorXd scratch;
};

/// One backward-Euler step of the upwinded transport pair on every edge, with
/// the node coupling imposed at the new time level.
///
/// Edges with positive pattern speed are "active": all of their unknowns enter
/// one sparse system, factorized once at construction. Edges with speed zero
/// are frozen: their samples are held, and their inflow samples are evaluated
/// explicitly from the coupling once the active unknowns are known. The
/// coupling always uses the original edge speeds of the graph.
class StepOperator {
 public:
  StepOperator(const MetricGraph& graph, std::shared_ptr<const StateLayout> layout, double h,
               std::vector<double> pattern_speeds);

  /// w_new from w_old; `ubar[j]` is the signed forcing of controlled vertex j at t_{n+1}.
  void advance(const Eigen::VectorXd& w_old, std::span<const double> ubar, Eigen::VectorXd& w_new,
               StepWorkspace& work) const;

  /// Transpose of advance(): given dL/dw_new, writes dL/dw_old and adds dL/dubar.
  void adjoint(const Eigen::VectorXd& grad_new, Eigen::VectorXd& grad_old, std::span<double> grad_ubar,
               StepWorkspace& work) const;

  const std::vector<double>& pattern_speeds() const { return speeds_; }
  double h() const { return h_; }
  std::size_t active_unknowns() const { return active_global_.size(); }
  const StateLayout& layout() const { return *layout_; }

 private:
  struct ExplicitRow {
    std::size_t target = 0;
    std::size_t first = 0;  // into explicit_sources_
    std::size_t count = 0;
    int control_slot = -1;
    double control_weight = 0.0;
  };
  struct ControlEntry {
    Eigen::Index row = 0;
    int slot = 0;
    double weight = 0.0;
  };
  struct Range {
    std::size_t begin = 0;
    std::size_t size = 0;
  };

  std::shared_ptr<const StateLayout> layout_;
  double h_;
  std::vector<double> speeds_;

  std::vector<std::size_t> active_global_;  // local unknown -> flat state index
  Eigen::SparseMatrix<double> system_;      // active x active
  // mutable only because SparseLU::transpose() is non-const; the factorization is never modified.
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> rhs_from_state_;  // active x state
  std::vector<ControlEntry> rhs_from_control_;

  std::vector<Range> frozen_ranges_;
  std::vector<ExplicitRow> explicit_rows_;
  std::vector<std::pair<std::size_t, double>> explicit_sources_;
};

/// Builds and factorizes the step operator for explicit per-edge speeds.
std::unique_ptr<StepOperator> assemble_operator(const MetricGraph& graph, const std::vector<EdgeGrid>& grids,
                                                double h, const std::map<EdgeId, double>& speeds);

/// Per-(graph, grids, h) cache of factorized step operators, keyed by the
/// pattern speed vector so identical patterns share one factorization.
/// Thread-safe; lookups lock, so callers resolve operators before time loops.
class OperatorCache {
 public:
  OperatorCache(MetricGraph graph, std::shared_ptr<const StateLayout> layout, double h);

  std::shared_ptr<const StepOperator> for_speeds(const std::vector<double>& speeds);
  std::shared_ptr<const StepOperator> deterministic();
  std::shared_ptr<const StepOperator> for_subset(const SubsetScheme& scheme, SubsetIndex omega);

  /// Number of factorizations performed so far.
  std::size_t factorizations() const { return factorizations_.load(); }
  const MetricGraph& graph() const { return graph_; }
  const std::shared_ptr<const StateLayout>& layout() const { return layout_; }
  double h() const { return h_; }

 private:
  MetricGraph graph_;
  std::shared_ptr<const StateLayout> layout_;
  double h_;
  std::mutex mutex_;
  std::map<std::vector<double>, std::shared_ptr<const StepOperator>> operators_;
  std::atomic<std::size_t> factorizations_{0};
};

}  // namespace rbmwave
