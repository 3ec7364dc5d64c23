#pragma once

#include <vector>

namespace flownet {

struct Edge {
  int tail = 0;
  int head = 0;
};

// Directed multigraph with a fixed edge order; edge j is column j of the
// incidence matrix. Parallel edges are allowed, self-loops are not.
class DirectedGraph {
 public:
  DirectedGraph() = default;
  DirectedGraph(int vertex_count, std::vector<Edge> edges);

  int vertex_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int j) const { return edges_[static_cast<size_t>(j)]; }

  // Edge ids leaving / entering a vertex, ascending.
  const std::vector<int>& out_edges(int v) const { return out_[static_cast<size_t>(v)]; }
  const std::vector<int>& in_edges(int v) const { return in_[static_cast<size_t>(v)]; }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

// Dense vertex-by-edge incidence matrix over {-1, 0, +1}: column j has -1 at
// the tail of edge j and +1 at its head.
struct IncidenceMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> entries;  // row-major

  int operator()(int i, int j) const {
    return entries[static_cast<size_t>(i) * static_cast<size_t>(cols) + static_cast<size_t>(j)];
  }
};

IncidenceMatrix incidence(const DirectedGraph& graph);

// One terminal: a vertex where a constant external flow enters (+1) or
// leaves (-1) the network.
struct TerminalColumn {
  int vertex = 0;
  int sign = +1;
};

class TerminalPattern {
 public:
  TerminalPattern() = default;
  explicit TerminalPattern(std::vector<TerminalColumn> columns);

  int terminal_count() const { return static_cast<int>(columns_.size()); }
  bool empty() const { return columns_.empty(); }
  const std::vector<TerminalColumn>& columns() const { return columns_; }

  // Net external inflow per vertex produced by the terminal flows d.
  std::vector<double> apply(const std::vector<double>& d, int vertex_count) const;

 private:
  std::vector<TerminalColumn> columns_;
};

struct Connectivity {
  bool connected = false;
  int component_count = 0;
};

// Connectivity of the underlying undirected graph.
Connectivity weak_connectivity(const DirectedGraph& graph);
bool is_weakly_connected(const DirectedGraph& graph);

bool is_strongly_connected(const DirectedGraph& graph);

// In-degree equals out-degree at every vertex.
bool is_balanced(const DirectedGraph& graph);

// Component id per vertex; ids are dense starting at 0.
std::vector<int> strongly_connected_components(const DirectedGraph& graph);

}  // namespace flownet
