// Command-line front end: single runs, optimal control solves, Monte Carlo
// studies and lemma checks on networks described by JSON documents.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbmwave/characteristics.hpp"
#include "rbmwave/config.hpp"
#include "rbmwave/errors.hpp"
#include "rbmwave/expressions.hpp"
#include "rbmwave/optimal_control.hpp"
#include "rbmwave/report.hpp"
#include "rbmwave/simulation.hpp"
#include "rbmwave/studies.hpp"

namespace {

using namespace rbmwave;

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> realizations;
  std::string out;
  std::string format = "csv";
  bool export_trajectory = false;
  bool timings = false;
  std::optional<std::size_t> threads;
  std::string export_control;
  std::size_t samples = 10000;
  std::vector<int> edges{1, 2};
  std::vector<double> lemma_h{0.02, 0.005};
};

ExperimentConfig load(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("--config: required");
  ExperimentConfig cfg = load_config(opt.config);
  if (opt.seed) cfg.study_seed = *opt.seed;
  if (opt.realizations) cfg.realizations = *opt.realizations;
  if (opt.timings) cfg.include_timings = true;
  if (opt.threads) cfg.threads = *opt.threads;
  return cfg;
}

void write_output(const Options& opt, const std::string& text) {
  if (opt.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(opt.out, std::ios::binary);
  if (!file) throw ConfigError("--out: cannot write " + opt.out);
  file << text;
}

struct Setup {
  TimeGrid tgrid;
  std::vector<EdgeGrid> grids;
  std::shared_ptr<const StateLayout> layout;
  InitialData initial;
};

Setup setup(const ExperimentConfig& cfg, double h) {
  TimeGrid tgrid = TimeGrid::with_step(cfg.horizon, h);
  auto grids = build_grids(cfg.graph, cfg.max_dx);
  auto layout = std::make_shared<const StateLayout>(cfg.graph, grids);
  InitialData initial = sample_initial_data(*layout, cfg.y0, cfg.y1);
  return {tgrid, std::move(grids), std::move(layout), std::move(initial)};
}

std::vector<StudyRow> trajectory_rows(double h, const Trajectory& t, bool timings) {
  const StateLayout& layout = t.states().front().layout();
  double norm_w = 0.0;
  double norm_y = 0.0;
  const Eigen::VectorXd& wt = layout.quadrature_weights();
  for (std::size_t n = 0; n < t.states().size(); ++n) {
    norm_w = std::max(norm_w, std::sqrt(4.0 * discrete_energy(layout, t.states()[n].values)));
    norm_y = std::max(norm_y, std::sqrt(wt.dot(t.y()[n].cwiseAbs2())));
  }
  std::vector<StudyRow> rows;
  if (timings) rows.push_back({h, "wall_time", t.wall_time(), 0.0});
  rows.push_back({h, "max_norm_w", norm_w, 0.0});
  rows.push_back({h, "max_norm_y", norm_y, 0.0});
  rows.push_back({h, "final_energy", discrete_energy(layout, t.states().back().values), 0.0});
  return rows;
}

int run_simulate(const Options& opt, bool randomized) {
  const ExperimentConfig cfg = load(opt);
  if (!cfg.control) throw ConfigError("control: simulation needs a fixed control expression");
  std::vector<StudyRow> rows;
  for (double h : cfg.h_values) {
    const Setup s = setup(cfg, h);
    const ControlVector u = sample_control(cfg.graph.controlled_vertices().size(), s.tgrid, *cfg.control);
    OperatorCache cache(cfg.graph, s.layout, s.tgrid.h());
    const Trajectory det = simulate_deterministic(cfg.graph, s.initial, u, s.grids, s.tgrid, &cache);
    if (!randomized) {
      if (opt.export_trajectory) {
        std::ostringstream text;
        write_trajectory(text, det);
        write_output(opt, text.str());
        return 0;
      }
      auto r = trajectory_rows(h, det, cfg.include_timings);
      rows.insert(rows.end(), r.begin(), r.end());
      continue;
    }
    const auto realization = sample_realization(cfg.scheme, s.tgrid.steps(), cfg.study_seed);
    const Trajectory rnd = simulate_randomized(cfg.graph, cfg.scheme, realization, s.initial, u, s.grids, s.tgrid, &cache);
    if (opt.export_trajectory) {
      std::ostringstream text;
      write_trajectory(text, rnd);
      write_output(opt, text.str());
      return 0;
    }
    auto r = trajectory_rows(h, rnd, cfg.include_timings);
    rows.insert(rows.end(), r.begin(), r.end());
    const RelativeErrors e = error_norms(rnd, det);
    rows.push_back({h, "rel_w_pct", 100.0 * e.rel_w, 0.0});
    rows.push_back({h, "rel_y_pct", 100.0 * e.rel_y, 0.0});
  }
  write_output(opt, emit(rows, parse_format(opt.format)));
  return 0;
}

int run_control(const Options& opt, bool randomized) {
  const ExperimentConfig cfg = load(opt);
  std::vector<StudyRow> rows;
  bool all_converged = true;
  for (double h : cfg.h_values) {
    const Setup s = setup(cfg, h);
    OcpProblem problem{cfg.graph, s.grids, s.tgrid, s.initial,
                       TargetField::from_expression(cfg.target, *s.layout, s.tgrid, cfg.target_depends_on_time),
                       cfg.alpha};
    OperatorCache cache(cfg.graph, s.layout, s.tgrid.h());
    OcpSolution sol = [&] {
      if (!randomized) return solve_ocp(problem, cfg.optimizer, &cache);
      const auto realization = sample_realization(cfg.scheme, s.tgrid.steps(), cfg.study_seed);
      return solve_rocp(problem, cfg.scheme, realization, cfg.optimizer, &cache);
    }();
    all_converged = all_converged && sol.converged;
    if (!opt.export_control.empty() && h == cfg.h_values.front()) {
      std::ofstream file(opt.export_control, std::ios::binary);
      if (!file) throw ConfigError("--export-control: cannot write " + opt.export_control);
      write_control(file, sol.control, cfg.graph);
    }
    if (cfg.include_timings) rows.push_back({h, "wall_time", sol.wall_time, 0.0});
    rows.push_back({h, "cost_total", sol.cost.total, 0.0});
    rows.push_back({h, "cost_tracking", sol.cost.tracking, 0.0});
    rows.push_back({h, "cost_regularization", sol.cost.regularization, 0.0});
    rows.push_back({h, "iterations", static_cast<double>(sol.iterations), 0.0});
    rows.push_back({h, "gradient_norm", sol.gradient_norm, 0.0});
    rows.push_back({h, "converged", sol.converged ? 1.0 : 0.0, 0.0});
  }
  write_output(opt, emit(rows, parse_format(opt.format)));
  if (!all_converged) std::cerr << "warning: optimizer stopped at max_iters before reaching grad_tol\n";
  return 0;
}

int run_study(const Options& opt, bool control) {
  const ExperimentConfig cfg = load(opt);
  const std::vector<StudyRow> rows = control ? run_control_study(cfg).rows : run_forward_study(cfg).rows;
  write_output(opt, emit(rows, parse_format(opt.format)));
  return 0;
}

int run_lemmas(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  std::vector<LemmaReport> reports;
  bool ok = true;
  for (int edge : opt.edges) {
    if (edge < 1 || edge > cfg.graph.edge_count()) throw ConfigError("--edges: unknown edge " + std::to_string(edge));
    for (double h : opt.lemma_h) {
      LemmaReport r = validate_position_estimate(cfg.scheme, cfg.graph, edge, 0.0, 1.0, h, opt.samples, cfg.study_seed);
      r.lemma += "/e" + std::to_string(edge);
      ok = ok && r.within_bound();
      reports.push_back(r);
    }
    for (double h : opt.lemma_h) {
      LemmaReport r = validate_exit_time_estimate(cfg.scheme, cfg.graph, edge, 0.0, 1.0, h, opt.samples, cfg.study_seed);
      r.lemma += "/e" + std::to_string(edge);
      reports.push_back(r);
    }
  }
  write_output(opt, emit(reports, parse_format(opt.format)));
  if (!ok) {
    std::cerr << "position-deviation estimate exceeds its bound by more than 3 standard errors\n";
    return kExitValidation;
  }
  return 0;
}

int run_parse_check(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("--config: required");
  std::ifstream in(opt.config, std::ios::binary);
  if (!in) throw ConfigError(opt.config + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::ostringstream out;
  const auto describe = [&](const MetricGraph& g, const SubsetScheme* scheme) {
    out << "vertices " << g.vertex_count() << "\nedges " << g.edge_count() << "\ncontrolled";
    for (VertexId v : g.controlled_vertices()) out << ' ' << v;
    out << '\n';
    if (scheme) {
      const EdgeProbabilities p = edge_probabilities(*scheme, g);
      out << "subsets " << scheme->size() << "\n";
      for (const auto& e : g.edges())
        out << "edge " << e.id << " length " << e.length << " speed " << e.speed << " pi " << p.pi_of(e.id)
            << " var " << p.var_of(e.id) << '\n';
    }
  };
  if (!is_experiment_document(text)) {
    const NetworkDocument doc = parse_network_document(text);
    describe(doc.graph, doc.scheme ? &*doc.scheme : nullptr);
  } else {
    const ExperimentConfig cfg = parse_config(text, std::filesystem::path(opt.config).parent_path());
    describe(cfg.graph, &cfg.scheme);
    out << "horizon " << cfg.horizon << "\nh";
    for (double h : cfg.h_values) out << ' ' << h;
    out << "\nrealizations " << cfg.realizations << "\nstudy_seed " << cfg.study_seed << '\n';
  }
  write_output(opt, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random batch simulation and optimal control of networked wave equations"};
  app.require_subcommand(1);
  Options opt;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Experiment or network document (JSON)")->required();
    sub->add_option("--seed", opt.seed, "Overrides study_seed (realization r uses seed + r)");
    sub->add_option("--realizations", opt.realizations, "Overrides the number of realizations");
    sub->add_option("--out", opt.out, "Output file (default: stdout)");
    sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--timings", opt.timings, "Include wall-clock rows");
    sub->add_option("--threads", opt.threads, "Worker threads for realizations");
  };

  auto* simulate = app.add_subcommand("simulate", "Deterministic simulation for each h");
  auto* rbm = app.add_subcommand("rbm-simulate", "Randomized simulation with one realization per h");
  for (auto* sub : {simulate, rbm}) {
    common(sub);
    sub->add_flag("--export-trajectory", opt.export_trajectory, "Write (time, edge, index, w_minus, w_plus, y) for the first h");
  }
  auto* ocp = app.add_subcommand("ocp", "Deterministic optimal control for each h");
  auto* rocp = app.add_subcommand("rocp", "Randomized optimal control with one realization per h");
  for (auto* sub : {ocp, rocp}) {
    common(sub);
    sub->add_option("--export-control", opt.export_control, "Write (t, vertex, u) of the first h to this file");
  }
  auto* study_forward = app.add_subcommand("study-forward", "Monte Carlo forward study");
  auto* study_control = app.add_subcommand("study-control", "Monte Carlo optimal control study");
  common(study_forward);
  common(study_control);
  auto* lemmas = app.add_subcommand("validate-lemmas", "Monte Carlo checks of the characteristic estimates");
  common(lemmas);
  lemmas->add_option("--samples", opt.samples, "Monte Carlo samples per estimate");
  lemmas->add_option("--edges", opt.edges, "Edges to check");
  lemmas->add_option("--step", opt.lemma_h, "Sub-interval lengths");
  auto* parse_check = app.add_subcommand("parse-check", "Validate a network or experiment document");
  parse_check->add_option("--config", opt.config, "Document to check")->required();
  parse_check->add_option("--out", opt.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (simulate->parsed()) return run_simulate(opt, false);
    if (rbm->parsed()) return run_simulate(opt, true);
    if (ocp->parsed()) return run_control(opt, false);
    if (rocp->parsed()) return run_control(opt, true);
    if (study_forward->parsed()) return run_study(opt, false);
    if (study_control->parsed()) return run_study(opt, true);
    if (lemmas->parsed()) return run_lemmas(opt);
    if (parse_check->parsed()) return run_parse_check(opt);
  } catch (const SolverError& e) {
    std::cerr << "solver failure";
    if (e.step() > 0) std::cerr << " at step " << e.step();
    std::cerr << ": " << e.what() << '\n';
    return kExitSolver;
  } catch (const ConfigError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const StructuralError& e) {
    std::cerr << "invalid network: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SchemeError& e) {
    std::cerr << "invalid scheme: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitValidation;
  } catch (const UndefinedRelativeError& e) {
    std::cerr << "undefined relative error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return 0;
}
