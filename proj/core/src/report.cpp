#include "rbmwave/report.hpp"

#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "rbmwave/errors.hpp"

namespace rbmwave {

namespace {

using nlohmann::json;

bool is_percent(const std::string& metric) {
  return metric.size() >= 4 && metric.compare(metric.size() - 4, 4, "_pct") == 0;
}

std::string format_value(double v, bool percent) {
  char buf[64];
  std::snprintf(buf, sizeof buf, percent ? "%.2f" : "%.6e", v);
  return buf;
}

std::string format_h(double h) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", h);
  return buf;
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  throw ArgumentError("unknown output format \"" + std::string(name) + "\" (expected csv or json)");
}

std::string emit(const std::vector<StudyRow>& rows, Format format) {
  if (rows.empty()) throw ArgumentError("no rows to emit");
  if (format == Format::json) {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"h", r.h}, {"metric", r.metric}, {"mean", r.mean}, {"std", r.std}});
    return out.dump(2) + "\n";
  }
  std::string out = "h,metric,mean,std\n";
  for (const auto& r : rows) {
    const bool pct = is_percent(r.metric);
    out += format_h(r.h) + "," + r.metric + "," + format_value(r.mean, pct) + "," + format_value(r.std, pct) + "\n";
  }
  return out;
}

std::vector<StudyRow> parse_rows(std::string_view json_document) {
  json doc;
  try {
    doc = json::parse(json_document.begin(), json_document.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("rows: malformed document (") + e.what() + ")");
  }
  if (!doc.is_array()) throw ConfigError("rows: expected an array");
  std::vector<StudyRow> rows;
  for (const auto& r : doc) {
    try {
      rows.push_back({r.at("h").get<double>(), r.at("metric").get<std::string>(), r.at("mean").get<double>(),
                      r.at("std").get<double>()});
    } catch (const json::exception& e) {
      throw ConfigError("rows[" + std::to_string(rows.size()) + "]: " + e.what());
    }
  }
  return rows;
}

std::string emit(const std::vector<LemmaReport>& reports, Format format) {
  if (reports.empty()) throw ArgumentError("no reports to emit");
  if (format == Format::json) {
    json out = json::array();
    for (const auto& r : reports)
      out.push_back({{"lemma", r.lemma},
                     {"h", r.h},
                     {"samples", r.samples},
                     {"lhs", r.lhs_estimate},
                     {"bound", r.bound},
                     {"margin", r.margin},
                     {"std_error", r.std_error}});
    return out.dump(2) + "\n";
  }
  std::string out = "lemma,h,samples,lhs,bound,margin,std_error\n";
  for (const auto& r : reports) {
    out += r.lemma + "," + format_h(r.h) + "," + std::to_string(r.samples) + "," + format_value(r.lhs_estimate, false) +
           "," + format_value(r.bound, false) + "," + format_value(r.margin, false) + "," +
           format_value(r.std_error, false) + "\n";
  }
  return out;
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory) {
  out << "time,edge,index,w_minus,w_plus,y\n";
  const auto& ys = trajectory.y();
  char buf[160];
  for (std::size_t n = 0; n < trajectory.states().size(); ++n) {
    const RiemannState& s = trajectory.states()[n];
    const StateLayout& layout = s.layout();
    for (std::size_t e = 0; e < layout.edge_count(); ++e) {
      const auto id = static_cast<EdgeId>(e + 1);
      const auto wm = s.w_minus(id);
      const auto wp = s.w_plus(id);
      const std::size_t f = layout.field_offset(id);
      for (std::size_t i = 0; i < layout.points(id); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g,%d,%zu,%.17g,%.17g,%.17g\n", s.time, id, i, wm[i], wp[i],
                      ys[n][static_cast<Eigen::Index>(f + i)]);
        out << buf;
      }
    }
  }
}

void write_control(std::ostream& out, const ControlVector& control, const MetricGraph& graph) {
  out << "t,vertex,u\n";
  char buf[96];
  const auto& vertices = graph.controlled_vertices();
  for (std::size_t n = 0; n <= control.tgrid().steps(); ++n) {
    for (std::size_t j = 0; j < vertices.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.10g,%d,%.17g\n", control.tgrid().t(n), vertices[j], control(n, j));
      out << buf;
    }
  }
}

}  // namespace rbmwave
