#include "rbmwave/expressions.hpp"

#include <cmath>
#include <string>

#include "rbmwave/errors.hpp"

namespace rbmwave {

double Expression::operator()(double s) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::constant: return value;
    case Kind::sine: return value * std::sin(rate * s);
    case Kind::sampled: break;
  }
  throw ArgumentError("sampled expressions have no closed form");
}

double Expression::derivative(double s) const {
  switch (kind) {
    case Kind::zero:
    case Kind::constant: return 0.0;
    case Kind::sine: return value * rate * std::cos(rate * s);
    case Kind::sampled: break;
  }
  throw ArgumentError("sampled expressions have no closed-form derivative");
}

namespace {

Eigen::VectorXd sample_field(const StateLayout& layout, const Expression& expr, const char* name) {
  const auto n = static_cast<Eigen::Index>(layout.field_size());
  Eigen::VectorXd out(n);
  if (expr.kind == Expression::Kind::sampled) {
    if (expr.samples.size() != layout.field_size()) {
      throw ArgumentError(std::string(name) + " has " + std::to_string(expr.samples.size()) +
                          " samples, edge grids need " + std::to_string(layout.field_size()));
    }
    for (Eigen::Index i = 0; i < n; ++i) out(i) = expr.samples[static_cast<std::size_t>(i)];
    return out;
  }
  for (EdgeId e = 1; e <= static_cast<EdgeId>(layout.edge_count()); ++e) {
    const EdgeGrid& g = layout.grid(e);
    const std::size_t off = layout.field_offset(e);
    for (std::size_t i = 0; i < g.points; ++i) out(static_cast<Eigen::Index>(off + i)) = expr(g.x(i));
  }
  return out;
}

}  // namespace

InitialData sample_initial_data(const StateLayout& layout, const Expression& y0, const Expression& y1) {
  InitialData data;
  data.y0 = sample_field(layout, y0, "y0");
  data.y1 = sample_field(layout, y1, "y1");
  data.y0x.resize(data.y0.size());
  for (EdgeId e = 1; e <= static_cast<EdgeId>(layout.edge_count()); ++e) {
    const EdgeGrid& g = layout.grid(e);
    const auto off = static_cast<Eigen::Index>(layout.field_offset(e));
    const auto n = static_cast<Eigen::Index>(g.points);
    if (y0.analytic()) {
      for (Eigen::Index i = 0; i < n; ++i) data.y0x(off + i) = y0.derivative(g.x(static_cast<std::size_t>(i)));
      continue;
    }
    auto y = data.y0.segment(off, n);
    auto d = data.y0x.segment(off, n);
    if (n == 2) {
      d.setConstant((y(1) - y(0)) / g.dx);
      continue;
    }
    for (Eigen::Index i = 1; i + 1 < n; ++i) d(i) = (y(i + 1) - y(i - 1)) / (2.0 * g.dx);
    d(0) = (-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * g.dx);
    d(n - 1) = (3.0 * y(n - 1) - 4.0 * y(n - 2) + y(n - 3)) / (2.0 * g.dx);
  }
  return data;
}

ControlVector sample_control(std::size_t controlled_count, const TimeGrid& tgrid, const Expression& u) {
  const std::size_t samples = tgrid.steps() + 1;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(controlled_count));
  if (u.kind == Expression::Kind::sampled && u.samples.size() != samples) {
    throw ArgumentError("sampled control has " + std::to_string(u.samples.size()) + " values, time grid needs " +
                        std::to_string(samples));
  }
  for (std::size_t n = 0; n < samples; ++n) {
    const double v = u.kind == Expression::Kind::sampled ? u.samples[n] : u(tgrid.t(n));
    values.row(static_cast<Eigen::Index>(n)).setConstant(v);
  }
  return ControlVector(std::move(values), tgrid);
}

TargetField TargetField::stationary(Eigen::VectorXd field) {
  TargetField t;
  t.fields_.push_back(std::move(field));
  return t;
}

TargetField TargetField::sampled(std::vector<Eigen::VectorXd> fields) {
  if (fields.empty()) throw ArgumentError("sampled target needs at least one time level");
  TargetField t;
  t.fields_ = std::move(fields);
  return t;
}

TargetField TargetField::from_expression(const Expression& expr, const StateLayout& layout, const TimeGrid& tgrid,
                                         bool depends_on_time) {
  if (!depends_on_time || expr.kind == Expression::Kind::zero || expr.kind == Expression::Kind::constant) {
    return stationary(sample_field(layout, expr, "y_d"));
  }
  std::vector<Eigen::VectorXd> fields;
  fields.reserve(tgrid.steps() + 1);
  const auto n = static_cast<Eigen::Index>(layout.field_size());
  for (std::size_t k = 0; k <= tgrid.steps(); ++k) {
    const double v = expr.kind == Expression::Kind::sampled ? expr.samples.at(k) : expr(tgrid.t(k));
    fields.push_back(Eigen::VectorXd::Constant(n, v));
  }
  return sampled(std::move(fields));
}

void TargetField::check(const StateLayout& layout, const TimeGrid& tgrid) const {
  if (fields_.size() != 1 && fields_.size() != tgrid.steps() + 1) {
    throw ArgumentError("target has " + std::to_string(fields_.size()) + " time levels, expected " +
                        std::to_string(tgrid.steps() + 1));
  }
  for (const auto& f : fields_) {
    if (f.size() != static_cast<Eigen::Index>(layout.field_size())) {
      throw ArgumentError("target is not sampled on the edge grids");
    }
  }
}

}  // namespace rbmwave
