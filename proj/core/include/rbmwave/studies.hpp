#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "rbmwave/config.hpp"
#include "rbmwave/optimal_control.hpp"
#include "rbmwave/simulation.hpp"

namespace rbmwave {

/// One aggregated metric of a study cell. Metrics ending in "_pct" are
/// percentages; the others are raw values (seconds, counts).
struct StudyRow {
  double h = 0.0;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single sample

  friend bool operator==(const StudyRow&, const StudyRow&) = default;
};

struct SampleStats {
  double mean = 0.0;
  double std = 0.0;
};

SampleStats sample_stats(const std::vector<double>& values);

/// Per-realization measurements of one forward study cell.
struct ForwardSamples {
  double h = 0.0;
  std::vector<double> rel_w;
  std::vector<double> rel_y;
  std::vector<double> time_deterministic;
  std::vector<double> time_randomized;
  std::size_t factorizations = 0;
};

struct ControlSamples {
  double h = 0.0;
  double reference_cost = 0.0;
  double reference_time = 0.0;
  bool reference_converged = true;
  std::vector<double> gap;
  std::vector<double> u_l2;
  std::vector<double> u_h2;
  std::vector<double> w;
  std::vector<double> y;
  std::vector<double> time_randomized;
  std::size_t nonconverged = 0;
  std::size_t factorizations = 0;
};

struct ForwardStudy {
  std::vector<ForwardSamples> cells;
  std::vector<StudyRow> rows;
};

struct ControlStudy {
  std::vector<ControlSamples> cells;
  std::vector<StudyRow> rows;
};

/// For each h: `realizations` paired runs of the deterministic and randomized
/// systems, realization r drawn with seed study_seed + r. The two systems are
/// advanced in lockstep so errors are accumulated without storing trajectories,
/// and each step is timed separately.
ForwardStudy run_forward_study(const ExperimentConfig& config);

/// For each h: the deterministic optimal control once, then one randomized
/// optimal control per realization, compared in cost, control and state.
ControlStudy run_control_study(const ExperimentConfig& config);

struct RateFit {
  double exponent = 0.0;
  double r_squared = 0.0;
};

/// Least-squares slope of log(error) against log(h).
RateFit estimate_rate(const std::vector<std::pair<double, double>>& pairs);

}  // namespace rbmwave
