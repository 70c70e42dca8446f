#include "rbmwave/studies.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "rbmwave/errors.hpp"

namespace rbmwave {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void add_row(std::vector<StudyRow>& rows, double h, const std::string& metric, const std::vector<double>& values,
             double scale = 1.0) {
  std::vector<double> scaled(values);
  for (double& v : scaled) v *= scale;
  const SampleStats s = sample_stats(scaled);
  rows.push_back({h, metric, s.mean, s.std});
}

RelativeErrors relative_or_zero(const ErrorAccumulator& acc) {
  return acc.identical() ? RelativeErrors{} : acc.result();
}

struct Cell {
  TimeGrid tgrid;
  std::vector<EdgeGrid> grids;
  std::shared_ptr<const StateLayout> layout;
  std::shared_ptr<OperatorCache> cache;
  InitialData initial;
};

Cell make_cell(const ExperimentConfig& config, double h) {
  TimeGrid tgrid = TimeGrid::with_step(config.horizon, h);
  auto grids = build_grids(config.graph, config.max_dx);
  auto layout = std::make_shared<const StateLayout>(config.graph, grids);
  auto cache = std::make_shared<OperatorCache>(config.graph, layout, tgrid.h());
  InitialData initial = sample_initial_data(*layout, config.y0, config.y1);
  return {tgrid, std::move(grids), std::move(layout), std::move(cache), std::move(initial)};
}

}  // namespace

SampleStats sample_stats(const std::vector<double>& values) {
  if (values.empty()) throw ArgumentError("statistics of an empty sample");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  return {mean, std};
}

ForwardStudy run_forward_study(const ExperimentConfig& config) {
  if (!config.control) throw ConfigError("control: a forward study needs a fixed control expression");
  ForwardStudy study;
  for (double h : config.h_values) {
    Cell cell = make_cell(config, h);
    const ControlVector control =
        sample_control(config.graph.controlled_vertices().size(), cell.tgrid, *config.control);
    const Eigen::VectorXd w0 = initial_riemann(cell.initial, config.graph, cell.layout).values;
    const PatternSchedule deterministic = PatternSchedule::deterministic(*cell.cache, cell.tgrid.steps());

    ForwardSamples samples;
    samples.h = h;
    const std::size_t n = config.realizations;
    samples.rel_w.resize(n);
    samples.rel_y.resize(n);
    samples.time_deterministic.resize(n);
    samples.time_randomized.resize(n);

    parallel_for(n, config.threads, [&](std::size_t r) {
      const auto realization = sample_realization(config.scheme, cell.tgrid.steps(), config.study_seed + r);
      const PatternSchedule randomized = PatternSchedule::randomized(*cell.cache, config.scheme, realization);
      TransportSolver det(deterministic, control, w0);
      TransportSolver rnd(randomized, control, w0);
      DisplacementIntegrator y_det(*cell.layout, cell.initial.y0, h);
      DisplacementIntegrator y_rnd(*cell.layout, cell.initial.y0, h);
      ErrorAccumulator errors(*cell.layout);
      errors.add(rnd.state(), det.state(), y_rnd.current(), y_det.current());
      double t_det = 0.0;
      double t_rnd = 0.0;
      while (!det.finished()) {
        auto start = Clock::now();
        det.advance();
        y_det.add(det.state());
        t_det += seconds_since(start);
        start = Clock::now();
        rnd.advance();
        y_rnd.add(rnd.state());
        t_rnd += seconds_since(start);
        errors.add(rnd.state(), det.state(), y_rnd.current(), y_det.current());
      }
      const RelativeErrors e = relative_or_zero(errors);
      samples.rel_w[r] = e.rel_w;
      samples.rel_y[r] = e.rel_y;
      samples.time_deterministic[r] = t_det;
      samples.time_randomized[r] = t_rnd;
    });
    samples.factorizations = cell.cache->factorizations();

    if (config.include_timings) {
      std::vector<double> ratio(n);
      for (std::size_t r = 0; r < n; ++r) ratio[r] = samples.time_randomized[r] / samples.time_deterministic[r];
      add_row(study.rows, h, "time_d", samples.time_deterministic);
      add_row(study.rows, h, "time_rd", samples.time_randomized);
      add_row(study.rows, h, "time_ratio_pct", ratio, 100.0);
    }
    add_row(study.rows, h, "rel_w_pct", samples.rel_w, 100.0);
    add_row(study.rows, h, "rel_y_pct", samples.rel_y, 100.0);
    study.cells.push_back(std::move(samples));
  }
  return study;
}

namespace {

double relative_gap(double value, double reference) {
  const double diff = std::abs(value - reference);
  if (diff == 0.0) return 0.0;
  if (reference == 0.0) throw UndefinedRelativeError("reference optimal cost is zero");
  return diff / std::abs(reference);
}

ControlDifference control_difference(const ControlVector& a, const ControlVector& b) {
  if (a.values() == b.values()) return {};
  return compare_controls(a, b);
}

}  // namespace

ControlStudy run_control_study(const ExperimentConfig& config) {
  if (config.control) throw ConfigError("control: a control study needs \"optimize\"");
  ControlStudy study;
  for (double h : config.h_values) {
    Cell cell = make_cell(config, h);
    OcpProblem problem{config.graph, cell.grids, cell.tgrid, cell.initial,
                       TargetField::from_expression(config.target, *cell.layout, cell.tgrid,
                                                    config.target_depends_on_time),
                       config.alpha};
    const OcpSolution reference = solve_ocp(problem, config.optimizer, cell.cache.get());
    const PatternSchedule deterministic = PatternSchedule::deterministic(*cell.cache, cell.tgrid.steps());
    const Eigen::VectorXd w0 = initial_riemann(cell.initial, config.graph, cell.layout).values;

    ControlSamples samples;
    samples.h = h;
    samples.reference_cost = reference.cost.total;
    samples.reference_time = reference.wall_time;
    samples.reference_converged = reference.converged;
    const std::size_t n = config.realizations;
    samples.gap.resize(n);
    samples.u_l2.resize(n);
    samples.u_h2.resize(n);
    samples.w.resize(n);
    samples.y.resize(n);
    samples.time_randomized.resize(n);
    std::vector<char> converged(n, 1);

    parallel_for(n, config.threads, [&](std::size_t r) {
      const auto realization = sample_realization(config.scheme, cell.tgrid.steps(), config.study_seed + r);
      const OcpSolution sol = solve_rocp(problem, config.scheme, realization, config.optimizer, cell.cache.get());
      converged[r] = sol.converged ? 1 : 0;
      samples.time_randomized[r] = sol.wall_time;
      samples.gap[r] = relative_gap(sol.cost.total, reference.cost.total);
      const ControlDifference d = control_difference(sol.control, reference.control);
      samples.u_l2[r] = d.rel_l2;
      samples.u_h2[r] = d.rel_h2;

      TransportSolver with_rnd(deterministic, sol.control, w0);
      TransportSolver with_ref(deterministic, reference.control, w0);
      DisplacementIntegrator y_rnd(*cell.layout, cell.initial.y0, h);
      DisplacementIntegrator y_ref(*cell.layout, cell.initial.y0, h);
      ErrorAccumulator errors(*cell.layout);
      errors.add(with_rnd.state(), with_ref.state(), y_rnd.current(), y_ref.current());
      while (!with_ref.finished()) {
        with_rnd.advance();
        with_ref.advance();
        y_rnd.add(with_rnd.state());
        y_ref.add(with_ref.state());
        errors.add(with_rnd.state(), with_ref.state(), y_rnd.current(), y_ref.current());
      }
      const RelativeErrors e = relative_or_zero(errors);
      samples.w[r] = e.rel_w;
      samples.y[r] = e.rel_y;
    });
    for (char c : converged) samples.nonconverged += c ? 0 : 1;
    if (!reference.converged) ++samples.nonconverged;
    samples.factorizations = cell.cache->factorizations();

    if (config.include_timings) {
      std::vector<double> ratio(n);
      for (std::size_t r = 0; r < n; ++r) ratio[r] = samples.time_randomized[r] / samples.reference_time;
      add_row(study.rows, h, "time_ocp", {samples.reference_time});
      add_row(study.rows, h, "time_rocp", samples.time_randomized);
      add_row(study.rows, h, "time_ratio_pct", ratio, 100.0);
    }
    add_row(study.rows, h, "gap_pct", samples.gap, 100.0);
    add_row(study.rows, h, "u_l2_pct", samples.u_l2, 100.0);
    add_row(study.rows, h, "u_h2_pct", samples.u_h2, 100.0);
    add_row(study.rows, h, "w_pct", samples.w, 100.0);
    add_row(study.rows, h, "y_pct", samples.y, 100.0);
    study.rows.push_back({h, "nonconverged", static_cast<double>(samples.nonconverged), 0.0});
    study.cells.push_back(std::move(samples));
  }
  return study;
}

RateFit estimate_rate(const std::vector<std::pair<double, double>>& pairs) {
  std::set<double> distinct;
  for (const auto& [h, e] : pairs) {
    if (!(h > 0.0)) throw ArgumentError("rate fit needs positive h");
    if (!(e > 0.0)) throw ArgumentError("rate fit needs positive errors");
    distinct.insert(h);
  }
  if (distinct.size() < 2) throw ArgumentError("rate fit needs at least two distinct h");
  const double n = static_cast<double>(pairs.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [h, e] : pairs) {
    mx += std::log(h);
    my += std::log(e);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [h, e] : pairs) {
    const double dx = std::log(h) - mx;
    const double dy = std::log(e) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (const auto& [h, e] : pairs) {
    const double r = std::log(e) - my - slope * (std::log(h) - mx);
    ss_res += r * r;
  }
  return {slope, syy > 0.0 ? 1.0 - ss_res / syy : 1.0};
}

}  // namespace rbmwave
