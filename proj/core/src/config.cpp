#include "rbmwave/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rbmwave/errors.hpp"

namespace rbmwave {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError(field + ": " + message);
}

json parse_document(std::string_view document, const std::string& what) {
  try {
    return json::parse(document.begin(), document.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": malformed document (" + e.what() + ")");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where.empty() ? key : where + "." + key, "missing");
  return *it;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(field, "must be finite");
  return d;
}

long long integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<long long>();
}

double positive(const json& v, const std::string& field) {
  const double d = number(v, field);
  if (!(d > 0.0)) fail(field, "must be positive");
  return d;
}

Expression parse_expression(const json& v, const std::string& field) {
  if (v.is_number()) return Expression::constant(number(v, field));
  if (v.is_string()) {
    if (v.get<std::string>() == "zero") return Expression::zero();
    fail(field, "unknown expression \"" + v.get<std::string>() + "\"");
  }
  if (!v.is_object()) fail(field, "expected a number or an expression object");
  const std::string kind = require(v, "kind", field).is_string() ? v.at("kind").get<std::string>() : "";
  if (kind == "zero") return Expression::zero();
  if (kind == "constant") return Expression::constant(number(require(v, "value", field), field + ".value"));
  if (kind == "sin") {
    const double amplitude = v.contains("amplitude") ? number(v.at("amplitude"), field + ".amplitude") : 1.0;
    double rate = 0.0;
    if (v.contains("rate_pi"))
      rate = number(v.at("rate_pi"), field + ".rate_pi") * std::numbers::pi;
    else
      rate = number(require(v, "rate", field), field + ".rate");
    return Expression::sine(amplitude, rate);
  }
  if (kind == "sampled") {
    const json& values = require(v, "values", field);
    if (!values.is_array()) fail(field + ".values", "expected an array");
    std::vector<double> samples;
    for (std::size_t i = 0; i < values.size(); ++i)
      samples.push_back(number(values[i], field + ".values[" + std::to_string(i) + "]"));
    return Expression::sampled(std::move(samples));
  }
  fail(field + ".kind", "expected one of zero, constant, sin, sampled");
}

MetricGraph network_from_json(const json& doc) {
  if (!doc.is_object()) fail("network", "expected an object");
  const long long vertices = integer(require(doc, "vertices", ""), "vertices");
  if (vertices < 1) fail("vertices", "must be at least 1");
  const json& edges = require(doc, "edges", "");
  if (!edges.is_array() || edges.empty()) fail("edges", "expected a nonempty array");

  std::vector<EdgeSpec> specs;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string f = "edges[" + std::to_string(i) + "]";
    const json& e = edges[i];
    EdgeSpec s;
    s.id = static_cast<EdgeId>(integer(require(e, "id", f), f + ".id"));
    for (const char* key : {"from", "to"}) {
      const long long v = integer(require(e, key, f), f + "." + key);
      if (v < 1 || v > vertices)
        fail(f + "." + key, "vertex " + std::to_string(v) + " is outside 1.." + std::to_string(vertices));
      (std::string(key) == "from" ? s.start : s.end) = static_cast<VertexId>(v);
    }
    s.length = positive(require(e, "length", f), f + ".length");
    s.speed = positive(require(e, "speed", f), f + ".speed");
    specs.push_back(s);
  }

  std::vector<VertexId> controlled;
  if (doc.contains("controlled")) {
    const json& c = doc.at("controlled");
    if (!c.is_array()) fail("controlled", "expected an array of vertex ids");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string f = "controlled[" + std::to_string(i) + "]";
      const long long v = integer(c[i], f);
      if (v < 1 || v > vertices) fail(f, "vertex " + std::to_string(v) + " is outside 1.." + std::to_string(vertices));
      controlled.push_back(static_cast<VertexId>(v));
    }
  }
  try {
    return MetricGraph(static_cast<int>(vertices), std::move(specs), std::move(controlled));
  } catch (const StructuralError& e) {
    fail("network", e.what());
  } catch (const ArgumentError& e) {
    fail("network", e.what());
  }
}

SubsetScheme scheme_from_json(const json& v, const MetricGraph& graph, const std::string& field) {
  if (v.is_string()) {
    if (v.get<std::string>() == "all-edges") return SubsetScheme::all_edges(graph);
    fail(field, "expected \"all-edges\" or a scheme object");
  }
  const json& subsets = require(v, "subsets", field);
  const json& probabilities = require(v, "probabilities", field);
  if (!subsets.is_array() || subsets.empty()) fail(field + ".subsets", "expected a nonempty array");
  if (!probabilities.is_array() || probabilities.size() != subsets.size())
    fail(field + ".probabilities", "expected one probability per subset");
  std::vector<std::vector<EdgeId>> sets;
  std::vector<double> p;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    const std::string f = field + ".subsets[" + std::to_string(i) + "]";
    if (!subsets[i].is_array()) fail(f, "expected an array of edge ids");
    std::vector<EdgeId> set;
    for (std::size_t k = 0; k < subsets[i].size(); ++k) {
      const long long e = integer(subsets[i][k], f + "[" + std::to_string(k) + "]");
      if (e < 1 || e > graph.edge_count())
        fail(f + "[" + std::to_string(k) + "]", "edge " + std::to_string(e) + " is not in the network");
      set.push_back(static_cast<EdgeId>(e));
    }
    sets.push_back(std::move(set));
    p.push_back(number(probabilities[i], field + ".probabilities[" + std::to_string(i) + "]"));
  }
  try {
    SubsetScheme scheme(std::move(sets), std::move(p));
    scheme.validate_against(graph);
    return scheme;
  } catch (const SchemeError& e) {
    fail(field, e.what());
  }
}

OptimizerConfig optimizer_from_json(const json& v) {
  OptimizerConfig c;
  if (!v.is_object()) fail("optimizer", "expected an object");
  if (v.contains("method")) {
    const std::string m = v.at("method").is_string() ? v.at("method").get<std::string>() : "";
    if (m == "cg")
      c.method = OptimizerMethod::conjugate_gradient;
    else if (m == "gradient-descent")
      c.method = OptimizerMethod::gradient_descent;
    else
      fail("optimizer.method", "expected \"cg\" or \"gradient-descent\"");
  }
  if (v.contains("max_iters")) {
    const long long n = integer(v.at("max_iters"), "optimizer.max_iters");
    if (n < 1) fail("optimizer.max_iters", "must be at least 1");
    c.max_iters = static_cast<std::size_t>(n);
  }
  if (v.contains("grad_tol") && !v.at("grad_tol").is_null()) c.grad_tol = positive(v.at("grad_tol"), "optimizer.grad_tol");
  if (v.contains("step_rule")) {
    const std::string r = v.at("step_rule").is_string() ? v.at("step_rule").get<std::string>() : "";
    if (r == "backtracking")
      c.step_rule = StepRule::backtracking;
    else if (r == "fixed")
      c.step_rule = StepRule::fixed;
    else
      fail("optimizer.step_rule", "expected \"backtracking\" or \"fixed\"");
  }
  if (v.contains("fixed_step")) c.fixed_step = positive(v.at("fixed_step"), "optimizer.fixed_step");
  return c;
}

}  // namespace

MetricGraph parse_network(std::string_view document) { return network_from_json(parse_document(document, "network")); }

MetricGraph load_network(const std::filesystem::path& path) { return parse_network(read_file(path)); }

NetworkDocument parse_network_document(std::string_view document) {
  const json doc = parse_document(document, "network");
  NetworkDocument out{network_from_json(doc), std::nullopt};
  if (doc.contains("scheme")) out.scheme = scheme_from_json(doc.at("scheme"), out.graph, "scheme");
  return out;
}

bool is_experiment_document(std::string_view document) {
  const json doc = parse_document(document, "document");
  return doc.is_object() && doc.contains("network");
}

SubsetScheme parse_scheme(std::string_view document, const MetricGraph& graph) {
  return scheme_from_json(parse_document(document, "scheme"), graph, "scheme");
}

ExperimentConfig parse_config(std::string_view document, const std::filesystem::path& base_dir) {
  const json doc = parse_document(document, "config");
  if (!doc.is_object()) fail("config", "expected an object");

  const json& net = require(doc, "network", "");
  json network_doc;
  if (net.is_string()) {
    const std::filesystem::path p = base_dir / net.get<std::string>();
    network_doc = parse_document(read_file(p), p.string());
  } else {
    network_doc = net;
  }
  MetricGraph graph = network_from_json(network_doc);

  const json* scheme_doc = nullptr;
  if (doc.contains("scheme"))
    scheme_doc = &doc.at("scheme");
  else if (network_doc.contains("scheme"))
    scheme_doc = &network_doc.at("scheme");
  if (!scheme_doc) fail("scheme", "missing (give it in the config or the network document)");
  SubsetScheme scheme = scheme_from_json(*scheme_doc, graph, "scheme");

  const double horizon = positive(require(doc, "horizon", ""), "horizon");
  const json& hs = require(doc, "h", "");
  if (!hs.is_array() || hs.empty()) fail("h", "expected a nonempty array of time steps");
  std::vector<double> h_values;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const std::string f = "h[" + std::to_string(i) + "]";
    const double h = positive(hs[i], f);
    try {
      (void)TimeGrid::with_step(horizon, h);
    } catch (const ArgumentError& e) {
      fail(f, e.what());
    }
    h_values.push_back(h);
  }

  Expression y0 = Expression::zero();
  Expression y1 = Expression::zero();
  if (doc.contains("initial")) {
    const json& init = doc.at("initial");
    if (!init.is_object()) fail("initial", "expected an object with y0 and y1");
    if (init.contains("y0")) y0 = parse_expression(init.at("y0"), "initial.y0");
    if (init.contains("y1")) y1 = parse_expression(init.at("y1"), "initial.y1");
  }

  std::optional<Expression> control;
  const json& c = require(doc, "control", "");
  if (!(c.is_string() && c.get<std::string>() == "optimize")) control = parse_expression(c, "control");

  Expression target = Expression::zero();
  bool target_time = false;
  if (doc.contains("target")) target = parse_expression(doc.at("target"), "target");
  if (doc.contains("target_variable")) {
    const std::string var = doc.at("target_variable").is_string() ? doc.at("target_variable").get<std::string>() : "";
    if (var != "x" && var != "t") fail("target_variable", "expected \"x\" or \"t\"");
    target_time = var == "t";
  }

  const double alpha = doc.contains("alpha") ? positive(doc.at("alpha"), "alpha") : 1.0;
  std::size_t realizations = 20;
  if (doc.contains("realizations")) {
    const long long r = integer(doc.at("realizations"), "realizations");
    if (r < 1) fail("realizations", "must be at least 1");
    realizations = static_cast<std::size_t>(r);
  }
  std::uint64_t seed = 0;
  if (doc.contains("study_seed")) {
    const json& s = doc.at("study_seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      fail("study_seed", "expected a non-negative integer");
    seed = s.get<std::uint64_t>();
  }
  const double max_dx = positive(require(doc, "max_dx", ""), "max_dx");
  OptimizerConfig optimizer = doc.contains("optimizer") ? optimizer_from_json(doc.at("optimizer")) : OptimizerConfig{};
  bool timings = false;
  if (doc.contains("include_timings")) {
    if (!doc.at("include_timings").is_boolean()) fail("include_timings", "expected true or false");
    timings = doc.at("include_timings").get<bool>();
  }
  std::size_t threads = 1;
  if (doc.contains("threads")) {
    const long long t = integer(doc.at("threads"), "threads");
    if (t < 1) fail("threads", "must be at least 1");
    threads = static_cast<std::size_t>(t);
  }
  std::string name = doc.contains("name") && doc.at("name").is_string() ? doc.at("name").get<std::string>() : "";

  return ExperimentConfig{
      .name = std::move(name),
      .graph = std::move(graph),
      .scheme = std::move(scheme),
      .horizon = horizon,
      .h_values = std::move(h_values),
      .max_dx = max_dx,
      .y0 = std::move(y0),
      .y1 = std::move(y1),
      .control = std::move(control),
      .target = std::move(target),
      .target_depends_on_time = target_time,
      .alpha = alpha,
      .realizations = realizations,
      .study_seed = seed,
      .optimizer = std::move(optimizer),
      .include_timings = timings,
      .threads = threads,
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

}  // namespace rbmwave
