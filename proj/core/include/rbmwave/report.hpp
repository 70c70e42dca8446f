#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rbmwave/characteristics.hpp"
#include "rbmwave/grid.hpp"
#include "rbmwave/metric_graph.hpp"
#include "rbmwave/simulation.hpp"
#include "rbmwave/studies.hpp"

namespace rbmwave {

enum class Format { csv, json };

/// Throws ArgumentError for anything but "csv" or "json".
Format parse_format(std::string_view name);

/// Columns h, metric, mean, std. CSV prints "_pct" metrics with 2 decimals and
/// everything else in scientific notation; JSON keeps full precision.
std::string emit(const std::vector<StudyRow>& rows, Format format);
/// Inverse of emit(rows, Format::json).
std::vector<StudyRow> parse_rows(std::string_view json_document);

/// Columns lemma, h, samples, lhs, bound, margin, std_error.
std::string emit(const std::vector<LemmaReport>& reports, Format format);

/// Columns time, edge, index, w_minus, w_plus, y; one line per grid node and time level.
void write_trajectory(std::ostream& out, const Trajectory& trajectory);
/// Columns t, vertex, u for every controlled vertex.
void write_control(std::ostream& out, const ControlVector& control, const MetricGraph& graph);

}  // namespace rbmwave
