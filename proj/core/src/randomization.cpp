#include "rbmwave/randomization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rbmwave/errors.hpp"

namespace rbmwave {

namespace {

constexpr double kProbabilitySumTolerance = 1e-12;

}  // namespace

SubsetScheme::SubsetScheme(std::vector<std::vector<EdgeId>> subsets, std::vector<double> probabilities)
    : subsets_(std::move(subsets)), probabilities_(std::move(probabilities)) {
  if (subsets_.empty()) throw SchemeError("scheme has no subsets");
  if (subsets_.size() != probabilities_.size()) {
    throw SchemeError("scheme has " + std::to_string(subsets_.size()) + " subsets but " +
                      std::to_string(probabilities_.size()) + " probabilities");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities_.size(); ++i) {
    const double p = probabilities_[i];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw SchemeError("probability of subset " + std::to_string(i + 1) + " must be >= 0");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kProbabilitySumTolerance) {
    throw SchemeError("subset probabilities must satisfy sum(p) = 1 (got " + std::to_string(total) + ")");
  }
  for (auto& s : subsets_) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
}

SubsetScheme SubsetScheme::all_edges(const MetricGraph& graph) {
  std::vector<EdgeId> all(static_cast<std::size_t>(graph.edge_count()));
  std::iota(all.begin(), all.end(), 1);
  return SubsetScheme({std::move(all)}, {1.0});
}

const std::vector<EdgeId>& SubsetScheme::subset(SubsetIndex omega) const {
  if (omega < 1 || omega > size()) {
    throw ArgumentError("subset index " + std::to_string(omega) + " outside [1, " + std::to_string(size()) + "]");
  }
  return subsets_[static_cast<std::size_t>(omega - 1)];
}

double SubsetScheme::probability(SubsetIndex omega) const {
  subset(omega);
  return probabilities_[static_cast<std::size_t>(omega - 1)];
}

bool SubsetScheme::contains(SubsetIndex omega, EdgeId e) const {
  const auto& s = subset(omega);
  return std::binary_search(s.begin(), s.end(), e);
}

void SubsetScheme::validate_against(const MetricGraph& graph) const {
  for (int w = 1; w <= size(); ++w) {
    for (EdgeId e : subset(w)) {
      if (e < 1 || e > graph.edge_count()) {
        throw SchemeError("subset " + std::to_string(w) + " names unknown edge " + std::to_string(e));
      }
    }
  }
  for (EdgeId e = 1; e <= graph.edge_count(); ++e) edge_probability(*this, e);
}

double edge_probability(const SubsetScheme& scheme, EdgeId edge) {
  double pi = 0.0;
  for (int w = 1; w <= scheme.size(); ++w) {
    if (scheme.contains(w, edge)) pi += scheme.probability(w);
  }
  if (!(pi > 0.0)) {
    throw SchemeError("edge " + std::to_string(edge) + " has inclusion probability pi = 0");
  }
  return std::min(pi, 1.0);
}

double variance_ch(const SubsetScheme& scheme, EdgeId edge, double speed) {
  const double pi = edge_probability(scheme, edge);
  double sum = 0.0;
  for (int w = 1; w <= scheme.size(); ++w) {
    const double chi = scheme.contains(w, edge) ? 1.0 : 0.0;
    const double d = chi / pi - 1.0;
    sum += scheme.probability(w) * d * d;
  }
  return speed * speed * sum;
}

double variance_ch_closed_form(const SubsetScheme& scheme, EdgeId edge, double speed) {
  const double pi = edge_probability(scheme, edge);
  return speed * speed * (1.0 / pi - 1.0);
}

double randomized_speed(const SubsetScheme& scheme, EdgeId edge, double speed, SubsetIndex omega) {
  if (!scheme.contains(omega, edge)) return 0.0;
  return speed / edge_probability(scheme, edge);
}

double mean_speed_check(const SubsetScheme& scheme, EdgeId edge, double speed) {
  double mean = 0.0;
  for (int w = 1; w <= scheme.size(); ++w) {
    mean += scheme.probability(w) * randomized_speed(scheme, edge, speed, w);
  }
  return mean;
}

EdgeProbabilities edge_probabilities(const SubsetScheme& scheme, const MetricGraph& graph) {
  EdgeProbabilities out;
  out.pi.reserve(static_cast<std::size_t>(graph.edge_count()));
  out.var_ch.reserve(static_cast<std::size_t>(graph.edge_count()));
  for (const EdgeSpec& e : graph.edges()) {
    out.pi.push_back(edge_probability(scheme, e.id));
    out.var_ch.push_back(variance_ch(scheme, e.id, e.speed));
  }
  return out;
}

std::vector<double> randomized_speeds(const SubsetScheme& scheme, const MetricGraph& graph,
                                      SubsetIndex omega) {
  std::vector<double> speeds;
  speeds.reserve(static_cast<std::size_t>(graph.edge_count()));
  for (const EdgeSpec& e : graph.edges()) {
    speeds.push_back(randomized_speed(scheme, e.id, e.speed, omega));
  }
  return speeds;
}

RealizationVector sample_realization(const SubsetScheme& scheme, std::size_t steps, std::uint64_t seed) {
  if (steps == 0) throw ArgumentError("realization length K must be positive");

  // Cumulative sums over the ordered subset list; the last positive-probability
  // subset absorbs any rounding shortfall of the final partial sum.
  const auto& p = scheme.probabilities();
  std::vector<double> cumulative(p.size());
  std::partial_sum(p.begin(), p.end(), cumulative.begin());
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) last_positive = i;
  }

  std::mt19937_64 engine(seed);
  RealizationVector out;
  out.seed = seed;
  out.indices.resize(steps);
  for (auto& index : out.indices) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    std::size_t pick = last_positive;
    for (std::size_t i = 0; i < last_positive; ++i) {
      if (u < cumulative[i]) {
        pick = i;
        break;
      }
    }
    index = static_cast<SubsetIndex>(pick + 1);
  }
  return out;
}

}  // namespace rbmwave
