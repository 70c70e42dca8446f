#include "rbmwave/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "rbmwave/errors.hpp"

namespace rbmwave {

namespace {

std::string edge_label(EdgeId e) { return "edge " + std::to_string(e); }

}  // namespace

MetricGraph::MetricGraph(int vertex_count, std::vector<EdgeSpec> edges,
                         std::vector<VertexId> controlled_vertices)
    : vertex_count_(vertex_count), edges_(std::move(edges)), controlled_(std::move(controlled_vertices)) {
  if (vertex_count_ < 1) throw StructuralError("vertex_count must be positive");
  if (edges_.empty()) throw StructuralError("graph has no edges");

  std::sort(edges_.begin(), edges_.end(),
            [](const EdgeSpec& a, const EdgeSpec& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const EdgeSpec& e = edges_[i];
    if (e.id != static_cast<EdgeId>(i + 1)) {
      throw StructuralError("edge ids must be exactly 1.." + std::to_string(edges_.size()) +
                            " (found id " + std::to_string(e.id) + ")");
    }
    if (e.start < 1 || e.start > vertex_count_ || e.end < 1 || e.end > vertex_count_) {
      throw StructuralError(edge_label(e.id) + " has an endpoint outside [1, " +
                            std::to_string(vertex_count_) + "]");
    }
    if (e.start == e.end) throw StructuralError(edge_label(e.id) + " is a self-loop");
    if (!(e.length > 0.0) || !std::isfinite(e.length)) {
      throw StructuralError(edge_label(e.id) + " must have positive length");
    }
    if (!(e.speed > 0.0) || !std::isfinite(e.speed)) {
      throw StructuralError(edge_label(e.id) + " must have positive speed");
    }
  }

  // CSR incidence lists; edges are visited in id order so each list is sorted.
  std::vector<std::size_t> counts(static_cast<std::size_t>(vertex_count_) + 1, 0);
  for (const EdgeSpec& e : edges_) {
    ++counts[static_cast<std::size_t>(e.start)];
    ++counts[static_cast<std::size_t>(e.end)];
  }
  incidence_offsets_.assign(static_cast<std::size_t>(vertex_count_) + 1, 0);
  for (int v = 1; v <= vertex_count_; ++v) {
    incidence_offsets_[static_cast<std::size_t>(v)] =
        incidence_offsets_[static_cast<std::size_t>(v - 1)] + counts[static_cast<std::size_t>(v)];
  }
  incidences_.resize(incidence_offsets_.back());
  std::vector<std::size_t> fill(incidence_offsets_.begin(), incidence_offsets_.end() - 1);
  for (const EdgeSpec& e : edges_) {
    incidences_[fill[static_cast<std::size_t>(e.start - 1)]++] = {e.id, -1};
    incidences_[fill[static_cast<std::size_t>(e.end - 1)]++] = {e.id, +1};
  }

  // Undirected reachability from vertex 1.
  std::vector<char> seen(static_cast<std::size_t>(vertex_count_), 0);
  std::queue<VertexId> frontier;
  frontier.push(1);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const VertexId v = frontier.front();
    frontier.pop();
    for (const Incidence& inc : edges_at(v)) {
      const EdgeSpec& e = edge(inc.edge);
      const VertexId w = inc.sign < 0 ? e.end : e.start;
      if (!seen[static_cast<std::size_t>(w - 1)]) {
        seen[static_cast<std::size_t>(w - 1)] = 1;
        ++reached;
        frontier.push(w);
      }
    }
  }
  if (reached != vertex_count_) {
    throw StructuralError("graph is not connected (" + std::to_string(reached) + " of " +
                          std::to_string(vertex_count_) + " vertices reachable from vertex 1)");
  }

  std::sort(controlled_.begin(), controlled_.end());
  controlled_.erase(std::unique(controlled_.begin(), controlled_.end()), controlled_.end());
  control_slot_.assign(static_cast<std::size_t>(vertex_count_), -1);
  for (std::size_t i = 0; i < controlled_.size(); ++i) {
    const VertexId v = controlled_[i];
    if (v < 1 || v > vertex_count_) {
      throw StructuralError("controlled vertex " + std::to_string(v) + " is not a vertex of the graph");
    }
    control_slot_[static_cast<std::size_t>(v - 1)] = static_cast<int>(i);
  }
}

void MetricGraph::check_vertex(VertexId v) const {
  if (v < 1 || v > vertex_count_) {
    throw StructuralError("unknown vertex " + std::to_string(v));
  }
}

const EdgeSpec& MetricGraph::edge(EdgeId e) const {
  if (e < 1 || e > edge_count()) throw StructuralError("unknown " + edge_label(e));
  return edges_[static_cast<std::size_t>(e - 1)];
}

bool MetricGraph::is_controlled(VertexId v) const { return control_slot(v) >= 0; }

int MetricGraph::control_slot(VertexId v) const {
  check_vertex(v);
  return control_slot_[static_cast<std::size_t>(v - 1)];
}

std::span<const Incidence> MetricGraph::edges_at(VertexId v) const {
  check_vertex(v);
  const auto begin = incidence_offsets_[static_cast<std::size_t>(v - 1)];
  const auto end = incidence_offsets_[static_cast<std::size_t>(v)];
  return {incidences_.data() + begin, end - begin};
}

double MetricGraph::c_tot(VertexId v) const {
  const auto incident = edges_at(v);
  if (incident.empty()) throw StructuralError("vertex " + std::to_string(v) + " is isolated");
  double total = 0.0;
  for (const Incidence& inc : incident) total += edge(inc.edge).speed;
  return total;
}

double MetricGraph::max_speed() const {
  return std::max_element(edges_.begin(), edges_.end(),
                          [](const EdgeSpec& a, const EdgeSpec& b) { return a.speed < b.speed; })
      ->speed;
}

double MetricGraph::min_speed() const {
  return std::min_element(edges_.begin(), edges_.end(),
                          [](const EdgeSpec& a, const EdgeSpec& b) { return a.speed < b.speed; })
      ->speed;
}

IncidenceMatrix build_incidence(const MetricGraph& graph) {
  Eigen::MatrixXi d = Eigen::MatrixXi::Zero(graph.vertex_count(), graph.edge_count());
  for (const EdgeSpec& e : graph.edges()) {
    d(e.start - 1, e.id - 1) = -1;
    d(e.end - 1, e.id - 1) = +1;
  }
  return IncidenceMatrix(std::move(d));
}

std::vector<Incidence> edges_at(const MetricGraph& graph, VertexId vertex) {
  const auto span = graph.edges_at(vertex);
  return {span.begin(), span.end()};
}

double c_tot(const MetricGraph& graph, VertexId vertex) { return graph.c_tot(vertex); }

}  // namespace rbmwave
