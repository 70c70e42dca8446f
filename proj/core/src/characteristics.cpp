#include "rbmwave/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rbmwave/errors.hpp"

namespace rbmwave {

namespace {

void check_query(const CharacteristicQuery& q) {
  if (!(q.s >= 0.0) || !(q.s <= q.t)) throw ArgumentError("characteristic query needs 0 <= s <= t");
}

double direction_sign(Direction d) { return d == Direction::plus ? -1.0 : 1.0; }

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double std_error() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

std::vector<double> interior_lattice(double length) {
  std::vector<double> xs;
  for (int j = 1; j <= 11; ++j) xs.push_back(length * j / 12.0);
  return xs;
}

}  // namespace

RandomizedSpeedField::RandomizedSpeedField(const SubsetScheme& scheme, const RealizationVector& realization,
                                           const TimeGrid& tgrid, EdgeId edge, double speed)
    : tgrid_(tgrid) {
  if (realization.size() != tgrid.steps()) throw ArgumentError("realization does not cover the time grid");
  speed_.reserve(realization.size());
  for (std::size_t k = 1; k <= realization.size(); ++k)
    speed_.push_back(randomized_speed(scheme, edge, speed, realization.at(k)));
  constant_ = std::all_of(speed_.begin(), speed_.end(), [&](double c) { return c == speed_.front(); });
}

RandomizedSpeedField::RandomizedSpeedField(const TimeGrid& tgrid, double speed)
    : tgrid_(tgrid), speed_(tgrid.steps(), speed), constant_(true) {}

double RandomizedSpeedField::integral(double a, double b) const {
  if (a > b) throw ArgumentError("integration bounds out of order");
  if (constant_) return speed_.front() * (b - a);
  const double h = tgrid_.h();
  const std::size_t last = speed_.size();
  const auto first_k = static_cast<std::size_t>(std::clamp(std::floor(a / h), 0.0, static_cast<double>(last - 1)));
  double total = 0.0;
  for (std::size_t k = first_k; k < last; ++k) {
    const double lo = std::max(a, tgrid_.t(k));
    const double hi = std::min(b, tgrid_.t(k + 1));
    if (tgrid_.t(k) >= b) break;
    if (hi > lo) total += speed_[k] * (hi - lo);
  }
  return total;
}

std::optional<double> RandomizedSpeedField::travel_start(double t, double distance) const {
  if (distance <= 0.0) return t;
  if (constant_) {
    if (speed_.front() == 0.0) return std::nullopt;
    const double s = t - distance / speed_.front();
    if (s < 0.0) return std::nullopt;
    return s;
  }
  const double h = tgrid_.h();
  const auto last = static_cast<long>(speed_.size());
  long k = std::min(last - 1, static_cast<long>(std::ceil(t / h)) - 1);
  double remaining = distance;
  double upper = t;
  for (; k >= 0; --k) {
    const double lower = tgrid_.t(static_cast<std::size_t>(k));
    const double span = upper - lower;
    const double c = speed_[static_cast<std::size_t>(k)];
    if (span > 0.0 && c > 0.0) {
      if (c * span >= remaining) return upper - remaining / c;
      remaining -= c * span;
    }
    upper = lower;
  }
  return std::nullopt;
}

double xi_deterministic(const CharacteristicQuery& q, double speed) {
  check_query(q);
  return q.x + direction_sign(q.sign) * speed * (q.t - q.s);
}

double xi_randomized(const CharacteristicQuery& q, const RandomizedSpeedField& field) {
  check_query(q);
  return q.x + direction_sign(q.sign) * field.integral(q.s, q.t);
}

double xi_randomized(const CharacteristicQuery& q, const SubsetScheme& scheme, const RealizationVector& realization,
                     const TimeGrid& tgrid, double speed) {
  return xi_randomized(q, RandomizedSpeedField(scheme, realization, tgrid, q.edge, speed));
}

namespace {

double distance_to_exit(const CharacteristicQuery& q, double length) {
  if (q.x < 0.0 || q.x > length) throw ArgumentError("query position outside the edge");
  return q.sign == Direction::plus ? q.x : length - q.x;
}

}  // namespace

std::optional<double> exit_time(const CharacteristicQuery& q, double speed, double length) {
  check_query(q);
  const double s = q.t - distance_to_exit(q, length) / speed;
  if (s < 0.0) return std::nullopt;
  return s;
}

std::optional<double> exit_time(const CharacteristicQuery& q, const RandomizedSpeedField& field, double length) {
  check_query(q);
  return field.travel_start(q.t, distance_to_exit(q, length));
}

double exit_time(const CharacteristicQuery& q, double speed, double length, double floor) {
  return std::max(exit_time(q, speed, length).value_or(floor), floor);
}

double exit_time(const CharacteristicQuery& q, const RandomizedSpeedField& field, double length, double floor) {
  return std::max(exit_time(q, field, length).value_or(floor), floor);
}

bool LemmaReport::within_bound() const {
  if (!std::isfinite(lhs_estimate) || !std::isfinite(std_error)) return false;
  if (lhs_estimate > bound + 3.0 * std_error) return false;
  if (fourth_bound > 0.0 && fourth_moment > fourth_bound + 3.0 * fourth_std_error) return false;
  return true;
}

double lemma_c0(const SubsetScheme& scheme, const MetricGraph& graph) {
  double c0 = 0.0;
  for (const auto& e : graph.edges()) {
    const double pi = edge_probability(scheme, e.id);
    c0 = std::max(c0, e.speed * std::max(1.0, std::abs((pi - 1.0) / pi)));
  }
  return c0;
}

LemmaReport validate_position_estimate(const SubsetScheme& scheme, const MetricGraph& graph, EdgeId edge, double s, double t,
                             double h, std::size_t samples, std::uint64_t seed) {
  if (!(s >= 0.0 && s < t)) throw ArgumentError("lemma check needs 0 <= s < t");
  if (samples == 0) throw ArgumentError("lemma check needs samples");
  scheme.validate_against(graph);
  const EdgeSpec& spec = graph.edge(edge);
  const TimeGrid tgrid = TimeGrid::with_step(t, h);
  const double var = variance_ch(scheme, edge, spec.speed);
  const double c0 = lemma_c0(scheme, graph);
  const auto lattice = interior_lattice(spec.length);

  Moments second;
  Moments fourth;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto realization = sample_realization(scheme, tgrid.steps(), seed + i);
    const RandomizedSpeedField field(scheme, realization, tgrid, edge, spec.speed);
    double first_diff = 0.0;
    double sup = 0.0;
    for (std::size_t j = 0; j < lattice.size(); ++j) {
      for (Direction d : {Direction::plus, Direction::minus}) {
        const CharacteristicQuery q{edge, d, t, lattice[j], s};
        const double diff = xi_randomized(q, field) - xi_deterministic(q, spec.speed);
        if (j == 0 && d == Direction::plus) first_diff = std::abs(diff);
        if (std::abs(std::abs(diff) - first_diff) > 1e-12 * (1.0 + spec.length + first_diff))
          throw std::logic_error("characteristic deviation depends on x");
        sup = std::max(sup, std::abs(diff));
      }
    }
    second.add(sup * sup);
    fourth.add(sup * sup * sup * sup);
  }

  LemmaReport report;
  report.lemma = "position";
  report.h = h;
  report.samples = samples;
  report.lhs_estimate = second.mean();
  report.std_error = second.std_error();
  report.bound = h * (t - s) * var;
  report.margin = report.bound - report.lhs_estimate;
  report.fourth_moment = fourth.mean();
  report.fourth_std_error = fourth.std_error();
  report.fourth_bound = 3.0 * c0 * c0 * var * h * h * (t - s) * (t - s);
  return report;
}

LemmaReport validate_exit_time_estimate(const SubsetScheme& scheme, const MetricGraph& graph, EdgeId edge, double t_floor,
                             double t, double h, std::size_t samples, std::uint64_t seed) {
  if (!(t_floor >= 0.0 && t_floor < t)) throw ArgumentError("lemma check needs 0 <= t' < t");
  if (samples == 0) throw ArgumentError("lemma check needs samples");
  scheme.validate_against(graph);
  const EdgeSpec& spec = graph.edge(edge);
  const TimeGrid tgrid = TimeGrid::with_step(t, h);
  const double var = variance_ch(scheme, edge, spec.speed);
  const double c0 = lemma_c0(scheme, graph);
  const double c1 = 3.0 * c0 * c0 * var;
  const double c2 = 1.5 * std::sqrt(2.0 * c1) / (graph.min_speed() * graph.min_speed());
  const auto lattice = interior_lattice(spec.length);

  Moments second;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto realization = sample_realization(scheme, tgrid.steps(), seed + i);
    const RandomizedSpeedField field(scheme, realization, tgrid, edge, spec.speed);
    double sup = 0.0;
    for (double x : lattice) {
      for (Direction d : {Direction::plus, Direction::minus}) {
        const CharacteristicQuery q{edge, d, t, x, 0.0};
        const double diff =
            exit_time(q, field, spec.length, t_floor) - exit_time(q, spec.speed, spec.length, t_floor);
        sup = std::max(sup, std::abs(diff));
      }
    }
    second.add(sup * sup);
  }

  LemmaReport report;
  report.lemma = "exit_time";
  report.h = h;
  report.samples = samples;
  report.lhs_estimate = second.mean();
  report.std_error = second.std_error();
  report.bound = c2 * h * (t - t_floor);
  report.margin = report.bound - report.lhs_estimate;
  return report;
}

InvariantValues dalembert_single_edge(const SingleEdgeProblem& p, double t, double x) {
  if (t < 0.0) throw ArgumentError("time must be non-negative");
  if (x < 0.0 || x > p.length) throw ArgumentError("position outside the edge");
  const auto forcing = [](const std::function<double(double)>& f, double s) { return f ? f(s) : 0.0; };

  const auto trace = [&](Direction dir, double time, double pos) {
    double acc = 0.0;
    for (;;) {
      if (dir == Direction::plus) {
        const double s0 = time - pos / p.speed;
        if (s0 <= 0.0) return acc + p.w_plus0(pos - p.speed * time);
        // w_plus entering at x = 0 equals the outgoing w_minus there, shifted by the forcing.
        acc -= 2.0 * forcing(p.ubar_start, s0) / p.speed;
        dir = Direction::minus;
        time = s0;
        pos = 0.0;
      } else {
        const double s0 = time - (p.length - pos) / p.speed;
        if (s0 <= 0.0) return acc + p.w_minus0(pos + p.speed * time);
        acc -= 2.0 * forcing(p.ubar_end, s0) / p.speed;
        dir = Direction::plus;
        time = s0;
        pos = p.length;
      }
    }
  };

  return {trace(Direction::minus, t, x), trace(Direction::plus, t, x)};
}

}  // namespace rbmwave
