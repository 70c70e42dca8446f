#pragma once

#include <cstdint>
#include <vector>

#include "rbmwave/metric_graph.hpp"

namespace rbmwave {

/// 1-based index of a subset E_omega within a SubsetScheme.
using SubsetIndex = int;

/// Randomization design: candidate active-edge subsets and their selection
/// probabilities. Only the support is stored, never the full power set.
///
/// Construction checks p >= 0 and sum(p) = 1 to 1e-12. Coverage of every
/// graph edge (pi_e > 0) is checked by validate_against().
class SubsetScheme {
 public:
  SubsetScheme(std::vector<std::vector<EdgeId>> subsets, std::vector<double> probabilities);

  /// The degenerate scheme: one subset holding every edge, p = 1.
  static SubsetScheme all_edges(const MetricGraph& graph);

  int size() const { return static_cast<int>(subsets_.size()); }
  const std::vector<EdgeId>& subset(SubsetIndex omega) const;
  double probability(SubsetIndex omega) const;
  const std::vector<double>& probabilities() const { return probabilities_; }
  bool contains(SubsetIndex omega, EdgeId e) const;

  /// Throws SchemeError if a subset names an unknown edge or some edge has pi_e = 0.
  void validate_against(const MetricGraph& graph) const;

 private:
  std::vector<std::vector<EdgeId>> subsets_;  // each sorted, unique
  std::vector<double> probabilities_;
};

/// Per-edge inclusion probabilities and speed variances for a scheme on a graph.
struct EdgeProbabilities {
  std::vector<double> pi;      // indexed by edge id - 1
  std::vector<double> var_ch;  // Var[c_{h,e}], speed^2

  double pi_of(EdgeId e) const { return pi[static_cast<std::size_t>(e - 1)]; }
  double var_of(EdgeId e) const { return var_ch[static_cast<std::size_t>(e - 1)]; }
};

struct RealizationVector {
  std::vector<SubsetIndex> indices;  // omega_1..omega_K, each in [1, #subsets]
  std::uint64_t seed = 0;

  std::size_t size() const { return indices.size(); }
  /// Subset active on the k-th sub-interval (t_{k-1}, t_k], k = 1..K.
  SubsetIndex at(std::size_t k) const { return indices[k - 1]; }
};

/// pi_e = sum of p_omega over subsets containing e. Throws SchemeError when pi_e = 0.
double edge_probability(const SubsetScheme& scheme, EdgeId edge);

/// Var[c_{h,e}] = c^2 sum_omega p_omega (chi_e(omega)/pi_e - 1)^2, by enumeration.
double variance_ch(const SubsetScheme& scheme, EdgeId edge, double speed);

/// Closed form c^2 (1/pi_e - 1) of the same quantity.
double variance_ch_closed_form(const SubsetScheme& scheme, EdgeId edge, double speed);

/// c_e / pi_e when e is in E_omega, otherwise 0.
double randomized_speed(const SubsetScheme& scheme, EdgeId edge, double speed, SubsetIndex omega);

/// sum_omega p_omega * randomized_speed(...); equals `speed` for any valid scheme.
double mean_speed_check(const SubsetScheme& scheme, EdgeId edge, double speed);

EdgeProbabilities edge_probabilities(const SubsetScheme& scheme, const MetricGraph& graph);

/// Per-edge randomized speeds for subset omega (indexed by edge id - 1).
std::vector<double> randomized_speeds(const SubsetScheme& scheme, const MetricGraph& graph,
                                      SubsetIndex omega);

/// K independent categorical draws by inverse CDF over the ordered subset list.
///
/// The generator is std::mt19937_64 seeded with `seed`; each draw consumes one
/// 64-bit output u and uses (u >> 11) * 2^-53 as the uniform variate. Both are
/// fully specified by the C++ standard, so realizations are reproducible across
/// platforms and releases.
RealizationVector sample_realization(const SubsetScheme& scheme, std::size_t steps, std::uint64_t seed);

}  // namespace rbmwave
