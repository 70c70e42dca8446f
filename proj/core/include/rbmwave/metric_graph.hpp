#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace rbmwave {

/// Vertex and edge identifiers are 1-based everywhere in the public API.
using VertexId = int;
using EdgeId = int;

struct EdgeSpec {
  EdgeId id = 0;
  VertexId start = 0;  // x = 0
  VertexId end = 0;    // x = length
  double length = 0.0;
  double speed = 0.0;
};

/// An edge incident to a vertex together with the incidence sign
/// (-1 when the vertex is the start of the edge, +1 when it is the end).
struct Incidence {
  EdgeId edge = 0;
  int sign = 0;

  friend bool operator==(const Incidence&, const Incidence&) = default;
};

/// |V| x |E| matrix with entries in {-1, 0, +1}; accessed with 1-based ids.
class IncidenceMatrix {
 public:
  explicit IncidenceMatrix(Eigen::MatrixXi entries) : entries_(std::move(entries)) {}

  int operator()(VertexId v, EdgeId e) const { return entries_(v - 1, e - 1); }
  int rows() const { return static_cast<int>(entries_.rows()); }
  int cols() const { return static_cast<int>(entries_.cols()); }
  const Eigen::MatrixXi& entries() const { return entries_; }

 private:
  Eigen::MatrixXi entries_;
};

/// Directed metric graph with per-edge length and wave speed.
///
/// Edge ids must form a permutation of 1..|E|; edges are stored sorted by id
/// so that the internal index of edge `e` is `e - 1`. Direction only fixes the
/// orientation of the edge coordinate; connectivity is checked undirected.
/// Parallel edges are allowed, self-loops are not. Immutable once built.
class MetricGraph {
 public:
  MetricGraph(int vertex_count, std::vector<EdgeSpec> edges,
              std::vector<VertexId> controlled_vertices = {});

  int vertex_count() const { return vertex_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  const std::vector<EdgeSpec>& edges() const { return edges_; }
  const EdgeSpec& edge(EdgeId e) const;

  /// Sorted, duplicate-free.
  const std::vector<VertexId>& controlled_vertices() const { return controlled_; }
  bool is_controlled(VertexId v) const;
  /// Position of `v` in controlled_vertices(), or -1.
  int control_slot(VertexId v) const;

  /// Incident edges in ascending edge-id order.
  std::span<const Incidence> edges_at(VertexId v) const;
  double c_tot(VertexId v) const;
  int degree(VertexId v) const { return static_cast<int>(edges_at(v).size()); }

  double max_speed() const;
  double min_speed() const;

 private:
  void check_vertex(VertexId v) const;

  int vertex_count_;
  std::vector<EdgeSpec> edges_;
  std::vector<VertexId> controlled_;
  std::vector<int> control_slot_;
  std::vector<std::size_t> incidence_offsets_;
  std::vector<Incidence> incidences_;
};

IncidenceMatrix build_incidence(const MetricGraph& graph);

std::vector<Incidence> edges_at(const MetricGraph& graph, VertexId vertex);

/// Sum of the speeds of the edges incident to `vertex`.
double c_tot(const MetricGraph& graph, VertexId vertex);

}  // namespace rbmwave
