#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbmwave/expressions.hpp"
#include "rbmwave/metric_graph.hpp"
#include "rbmwave/optimal_control.hpp"
#include "rbmwave/randomization.hpp"

namespace rbmwave {

/// Parses a network document (JSON, schema in docs/config_schema.md).
/// Throws ConfigError naming the offending field.
MetricGraph parse_network(std::string_view document);
MetricGraph load_network(const std::filesystem::path& path);

struct NetworkDocument {
  MetricGraph graph;
  std::optional<SubsetScheme> scheme;
};

/// Network plus the optional "scheme" entry it carries.
NetworkDocument parse_network_document(std::string_view document);

/// True for experiment documents (they name a "network"), false for network documents.
bool is_experiment_document(std::string_view document);

/// Parses a subset scheme object {"subsets": [[...]], "probabilities": [...]}
/// or the string "all-edges".
SubsetScheme parse_scheme(std::string_view document, const MetricGraph& graph);

struct ExperimentConfig {
  std::string name;
  MetricGraph graph;
  SubsetScheme scheme;
  double horizon = 1.0;
  std::vector<double> h_values;
  double max_dx = 0.05;
  Expression y0;
  Expression y1;
  /// Fixed control u(t); empty means the control is optimized.
  std::optional<Expression> control;
  Expression target;
  bool target_depends_on_time = false;
  double alpha = 1.0;
  std::size_t realizations = 20;
  std::uint64_t study_seed = 0;
  OptimizerConfig optimizer;
  /// Wall-clock rows make output documents machine dependent; off by default.
  bool include_timings = false;
  std::size_t threads = 1;
};

/// Parses an experiment document. A string "network" entry is resolved
/// relative to `base_dir`.
ExperimentConfig parse_config(std::string_view document, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace rbmwave
