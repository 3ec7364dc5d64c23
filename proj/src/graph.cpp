#include "flownet/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace flownet {

DirectedGraph::DirectedGraph(int vertex_count, std::vector<Edge> edges)
    : n_(vertex_count), edges_(std::move(edges)) {
  if (n_ < 0) throw std::invalid_argument("vertex count must be nonnegative");
  out_.resize(static_cast<size_t>(n_));
  in_.resize(static_cast<size_t>(n_));
  for (int j = 0; j < edge_count(); ++j) {
    const Edge& e = edges_[static_cast<size_t>(j)];
    if (e.tail < 0 || e.tail >= n_ || e.head < 0 || e.head >= n_)
      throw std::invalid_argument("edge " + std::to_string(j) + " references a missing vertex");
    if (e.tail == e.head)
      throw std::invalid_argument("edge " + std::to_string(j) + " is a self-loop");
    out_[static_cast<size_t>(e.tail)].push_back(j);
    in_[static_cast<size_t>(e.head)].push_back(j);
  }
}

IncidenceMatrix incidence(const DirectedGraph& graph) {
  IncidenceMatrix b;
  b.rows = graph.vertex_count();
  b.cols = graph.edge_count();
  b.entries.assign(static_cast<size_t>(b.rows) * static_cast<size_t>(b.cols), 0);
  for (int j = 0; j < b.cols; ++j) {
    const Edge& e = graph.edge(j);
    b.entries[static_cast<size_t>(e.tail) * b.cols + j] = -1;
    b.entries[static_cast<size_t>(e.head) * b.cols + j] = +1;
  }
  return b;
}

TerminalPattern::TerminalPattern(std::vector<TerminalColumn> columns)
    : columns_(std::move(columns)) {
  for (size_t k = 0; k < columns_.size(); ++k) {
    if (columns_[k].sign != 1 && columns_[k].sign != -1)
      throw std::invalid_argument("terminal " + std::to_string(k) + " sign must be +1 or -1");
    if (columns_[k].vertex < 0)
      throw std::invalid_argument("terminal " + std::to_string(k) + " vertex must be nonnegative");
  }
}

std::vector<double> TerminalPattern::apply(const std::vector<double>& d, int vertex_count) const {
  if (d.size() != columns_.size())
    throw std::invalid_argument("terminal flow vector length mismatch");
  std::vector<double> inflow(static_cast<size_t>(vertex_count), 0.0);
  for (size_t k = 0; k < columns_.size(); ++k) {
    const TerminalColumn& c = columns_[k];
    if (c.vertex >= vertex_count)
      throw std::invalid_argument("terminal " + std::to_string(k) + " references a missing vertex");
    inflow[static_cast<size_t>(c.vertex)] += static_cast<double>(c.sign) * d[k];
  }
  return inflow;
}

Connectivity weak_connectivity(const DirectedGraph& graph) {
  const int n = graph.vertex_count();
  if (n == 0) return {true, 0};
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> stack;
  int components = 0;
  for (int s = 0; s < n; ++s) {
    if (seen[static_cast<size_t>(s)]) continue;
    ++components;
    stack.assign(1, s);
    seen[static_cast<size_t>(s)] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      auto visit = [&](int w) {
        if (!seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = 1;
          stack.push_back(w);
        }
      };
      for (int e : graph.out_edges(v)) visit(graph.edge(e).head);
      for (int e : graph.in_edges(v)) visit(graph.edge(e).tail);
    }
  }
  return {components <= 1, components};
}

bool is_weakly_connected(const DirectedGraph& graph) { return weak_connectivity(graph).connected; }

namespace {

// Vertices reachable from 0 following edges forward or backward.
int reach_count(const DirectedGraph& graph, bool forward) {
  const int n = graph.vertex_count();
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    const std::vector<int>& step = forward ? graph.out_edges(v) : graph.in_edges(v);
    for (int e : step) {
      int w = forward ? graph.edge(e).head : graph.edge(e).tail;
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count;
}

}  // namespace

bool is_strongly_connected(const DirectedGraph& graph) {
  const int n = graph.vertex_count();
  if (n <= 1) return true;
  return reach_count(graph, true) == n && reach_count(graph, false) == n;
}

bool is_balanced(const DirectedGraph& graph) {
  for (int v = 0; v < graph.vertex_count(); ++v)
    if (graph.in_edges(v).size() != graph.out_edges(v).size()) return false;
  return true;
}

std::vector<int> strongly_connected_components(const DirectedGraph& graph) {
  // Iterative Tarjan.
  const int n = graph.vertex_count();
  std::vector<int> comp(static_cast<size_t>(n), -1);
  std::vector<int> index(static_cast<size_t>(n), -1);
  std::vector<int> low(static_cast<size_t>(n), 0);
  std::vector<char> on_stack(static_cast<size_t>(n), 0);
  std::vector<int> stack;
  int next_index = 0;
  int next_comp = 0;

  struct Frame {
    int v;
    size_t edge_pos;
  };
  std::vector<Frame> frames;

  for (int root = 0; root < n; ++root) {
    if (index[static_cast<size_t>(root)] != -1) continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      Frame& f = frames.back();
      int v = f.v;
      if (f.edge_pos == 0) {
        index[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = next_index++;
        stack.push_back(v);
        on_stack[static_cast<size_t>(v)] = 1;
      }
      bool descended = false;
      const std::vector<int>& outs = graph.out_edges(v);
      while (f.edge_pos < outs.size()) {
        int w = graph.edge(outs[f.edge_pos]).head;
        ++f.edge_pos;
        if (index[static_cast<size_t>(w)] == -1) {
          frames.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[static_cast<size_t>(w)])
          low[static_cast<size_t>(v)] =
              std::min(low[static_cast<size_t>(v)], index[static_cast<size_t>(w)]);
      }
      if (descended) continue;
      if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
        while (true) {
          int w = stack.back();
          stack.pop_back();
          on_stack[static_cast<size_t>(w)] = 0;
          comp[static_cast<size_t>(w)] = next_comp;
          if (w == v) break;
        }
        ++next_comp;
      }
      frames.pop_back();
      if (!frames.empty()) {
        int parent = frames.back().v;
        low[static_cast<size_t>(parent)] =
            std::min(low[static_cast<size_t>(parent)], low[static_cast<size_t>(v)]);
      }
    }
  }
  return comp;
}

}  // namespace flownet
