#include "flownet/cycle.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flownet/errors.hpp"

namespace flownet {

bool is_directed_cycle(const DirectedGraph& graph, const DirectedCycle& cycle) {
  const std::vector<int>& ids = cycle.edge_ids;
  if (ids.empty()) return false;
  std::vector<int> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
  for (size_t k = 0; k < ids.size(); ++k) {
    int e = ids[k];
    if (e < 0 || e >= graph.edge_count()) return false;
    int next = ids[(k + 1) % ids.size()];
    if (graph.edge(e).head != graph.edge(next).tail) return false;
  }
  return true;
}

std::vector<int> cover_multiplicity(const DirectedGraph& graph,
                                    const std::vector<DirectedCycle>& cycles) {
  std::vector<int> mult(static_cast<size_t>(graph.edge_count()), 0);
  for (size_t j = 0; j < cycles.size(); ++j) {
    if (!is_directed_cycle(graph, cycles[j]))
      throw NotACycleError("cover entry " + std::to_string(j) + " is not a directed cycle");
    for (int e : cycles[j].edge_ids) ++mult[static_cast<size_t>(e)];
  }
  return mult;
}

namespace {

// Peel directed cycles off an integer circulation. The walk takes the
// remaining out-edge with the smallest rotated id, so rotation 0 reproduces
// the lowest-edge-id extraction and other rotations give alternative
// decompositions of the same circulation.
std::vector<DirectedCycle> extract_cycles(const DirectedGraph& graph, std::vector<int> remaining,
                                          int rotation) {
  const int m = graph.edge_count();
  long long total = std::accumulate(remaining.begin(), remaining.end(), 0LL);
  auto key = [&](int e) { return (e + rotation) % std::max(m, 1); };

  std::vector<DirectedCycle> cycles;
  std::vector<int> path_edges;
  std::vector<int> path_verts;
  std::vector<int> pos_in_path(static_cast<size_t>(graph.vertex_count()), -1);

  while (total > 0) {
    int start = -1;
    for (int e = 0; e < m; ++e) {
      if (remaining[static_cast<size_t>(e)] > 0 &&
          (start == -1 || key(e) < key(start)))
        start = e;
    }

    path_edges.assign(1, start);
    --remaining[static_cast<size_t>(start)];
    --total;
    path_verts.assign(1, graph.edge(start).tail);
    pos_in_path[static_cast<size_t>(graph.edge(start).tail)] = 0;
    int v = graph.edge(start).head;

    while (pos_in_path[static_cast<size_t>(v)] == -1) {
      pos_in_path[static_cast<size_t>(v)] = static_cast<int>(path_verts.size());
      path_verts.push_back(v);
      int chosen = -1;
      for (int e : graph.out_edges(v)) {
        if (remaining[static_cast<size_t>(e)] > 0 && (chosen == -1 || key(e) < key(chosen)))
          chosen = e;
      }
      if (chosen == -1)
        throw std::logic_error("circulation walk stuck; multiplicity vector not balanced");
      path_edges.push_back(chosen);
      --remaining[static_cast<size_t>(chosen)];
      --total;
      v = graph.edge(chosen).head;
    }

    // v closes a loop: edges from its first occurrence onward form the cycle,
    // the prefix goes back into the pool.
    int k = pos_in_path[static_cast<size_t>(v)];
    DirectedCycle cycle;
    cycle.edge_ids.assign(path_edges.begin() + k, path_edges.end());
    cycles.push_back(std::move(cycle));
    for (int i = 0; i < k; ++i) {
      ++remaining[static_cast<size_t>(path_edges[static_cast<size_t>(i)])];
      ++total;
    }
    for (int w : path_verts) pos_in_path[static_cast<size_t>(w)] = -1;
  }
  return cycles;
}

// Successive shortest path min-cost max-flow; Bellman-Ford handles the
// negative residual costs. Sizes here are tiny.
struct MinCostFlow {
  struct Arc {
    int to;
    int rev;
    int cap;
    int cost;
  };
  std::vector<std::vector<Arc>> g;

  explicit MinCostFlow(int n) : g(static_cast<size_t>(n)) {}

  void add(int a, int b, int cap, int cost) {
    g[static_cast<size_t>(a)].push_back({b, static_cast<int>(g[static_cast<size_t>(b)].size()), cap, cost});
    g[static_cast<size_t>(b)].push_back(
        {a, static_cast<int>(g[static_cast<size_t>(a)].size()) - 1, 0, -cost});
  }

  int run(int s, int t) {
    const int n = static_cast<int>(g.size());
    int flow = 0;
    while (true) {
      std::vector<long long> dist(static_cast<size_t>(n), std::numeric_limits<long long>::max());
      std::vector<int> pv(static_cast<size_t>(n), -1);
      std::vector<int> pe(static_cast<size_t>(n), -1);
      dist[static_cast<size_t>(s)] = 0;
      for (int round = 0; round < n; ++round) {
        bool changed = false;
        for (int v = 0; v < n; ++v) {
          if (dist[static_cast<size_t>(v)] == std::numeric_limits<long long>::max()) continue;
          for (size_t i = 0; i < g[static_cast<size_t>(v)].size(); ++i) {
            const Arc& a = g[static_cast<size_t>(v)][i];
            if (a.cap <= 0) continue;
            long long nd = dist[static_cast<size_t>(v)] + a.cost;
            if (nd < dist[static_cast<size_t>(a.to)]) {
              dist[static_cast<size_t>(a.to)] = nd;
              pv[static_cast<size_t>(a.to)] = v;
              pe[static_cast<size_t>(a.to)] = static_cast<int>(i);
              changed = true;
            }
          }
        }
        if (!changed) break;
      }
      if (dist[static_cast<size_t>(t)] == std::numeric_limits<long long>::max()) break;
      int push = std::numeric_limits<int>::max();
      for (int v = t; v != s; v = pv[static_cast<size_t>(v)])
        push = std::min(push, g[static_cast<size_t>(pv[static_cast<size_t>(v)])]
                                  [static_cast<size_t>(pe[static_cast<size_t>(v)])].cap);
      for (int v = t; v != s; v = pv[static_cast<size_t>(v)]) {
        Arc& a = g[static_cast<size_t>(pv[static_cast<size_t>(v)])]
                   [static_cast<size_t>(pe[static_cast<size_t>(v)])];
        a.cap -= push;
        g[static_cast<size_t>(v)][static_cast<size_t>(a.rev)].cap += push;
      }
      flow += push;
    }
    return flow;
  }
};

}  // namespace

std::vector<DirectedCycle> decompose_circulation(const DirectedGraph& graph,
                                                 const std::vector<int>& multiplicity,
                                                 int rotation) {
  if (static_cast<int>(multiplicity.size()) != graph.edge_count())
    throw std::invalid_argument("multiplicity length mismatch");
  std::vector<long long> balance(static_cast<size_t>(graph.vertex_count()), 0);
  for (int e = 0; e < graph.edge_count(); ++e) {
    if (multiplicity[static_cast<size_t>(e)] < 0)
      throw std::invalid_argument("multiplicity must be nonnegative");
    balance[static_cast<size_t>(graph.edge(e).head)] += multiplicity[static_cast<size_t>(e)];
    balance[static_cast<size_t>(graph.edge(e).tail)] -= multiplicity[static_cast<size_t>(e)];
  }
  for (long long b : balance)
    if (b != 0) throw NotBalancedError("multiplicity vector is not a circulation");
  return extract_cycles(graph, multiplicity, rotation);
}

std::vector<DirectedCycle> decompose_balanced(const DirectedGraph& graph) {
  if (!is_balanced(graph))
    throw NotBalancedError("graph is not balanced: some vertex has in-degree != out-degree");
  if (!is_strongly_connected(graph))
    throw NotStronglyConnectedError("graph is not strongly connected");
  return extract_cycles(graph, std::vector<int>(static_cast<size_t>(graph.edge_count()), 1), 0);
}

CycleCover minimal_cover(const DirectedGraph& graph, int rotation) {
  if (!is_strongly_connected(graph))
    throw NotStronglyConnectedError("minimal cover requires a strongly connected graph");

  const int n = graph.vertex_count();
  const int m = graph.edge_count();
  std::vector<int> mult(static_cast<size_t>(m), 1);

  std::vector<int> deficit(static_cast<size_t>(n), 0);  // outdeg - indeg
  bool balanced = true;
  for (int v = 0; v < n; ++v) {
    deficit[static_cast<size_t>(v)] = static_cast<int>(graph.out_edges(v).size()) -
                                      static_cast<int>(graph.in_edges(v).size());
    if (deficit[static_cast<size_t>(v)] != 0) balanced = false;
  }

  if (!balanced) {
    // T = 1 + g where g routes the all-ones imbalance at unit cost.
    MinCostFlow mcf(n + 2);
    const int s = n;
    const int t = n + 1;
    std::vector<std::pair<int, int>> arc_of_edge(static_cast<size_t>(m));
    for (int e = 0; e < m; ++e) {
      arc_of_edge[static_cast<size_t>(e)] = {graph.edge(e).tail,
                                             static_cast<int>(mcf.g[static_cast<size_t>(graph.edge(e).tail)].size())};
      mcf.add(graph.edge(e).tail, graph.edge(e).head, m, 1);
    }
    // A vertex with more out-edges than in-edges needs that surplus supplied
    // back by g, so it sits on the sink side; the mirror case feeds the source.
    int need = 0;
    for (int v = 0; v < n; ++v) {
      if (deficit[static_cast<size_t>(v)] > 0) {
        mcf.add(v, t, deficit[static_cast<size_t>(v)], 0);
        need += deficit[static_cast<size_t>(v)];
      } else if (deficit[static_cast<size_t>(v)] < 0) {
        mcf.add(s, v, -deficit[static_cast<size_t>(v)], 0);
      }
    }
    int pushed = mcf.run(s, t);
    if (pushed != need)
      throw NotStronglyConnectedError("no circulation covers every edge");
    for (int e = 0; e < m; ++e) {
      auto [v, idx] = arc_of_edge[static_cast<size_t>(e)];
      mult[static_cast<size_t>(e)] += m - mcf.g[static_cast<size_t>(v)][static_cast<size_t>(idx)].cap;
    }
  }

  CycleCover cover;
  cover.multiplicity = mult;
  cover.cycles = extract_cycles(graph, mult, rotation);
  return cover;
}

std::vector<std::vector<double>> default_breakpoints(const ConstrainedNetwork& net,
                                                     const CycleCover& cover) {
  std::vector<std::vector<double>> bps(static_cast<size_t>(net.graph.edge_count()));
  for (int e = 0; e < net.graph.edge_count(); ++e) {
    int t = cover.multiplicity[static_cast<size_t>(e)];
    const FlowConstraint& c = net.constraints[static_cast<size_t>(e)];
    for (int k = 1; k < t; ++k)
      bps[static_cast<size_t>(e)].push_back(c.lo + (c.hi - c.lo) * k / t);
  }
  return bps;
}

AugmentedNetwork augment(const ConstrainedNetwork& net, const CycleCover& cover,
                         const std::vector<std::vector<double>>& breakpoints) {
  const int m = net.graph.edge_count();
  if (static_cast<int>(cover.multiplicity.size()) != m)
    throw std::invalid_argument("cover multiplicity length mismatch");
  if (static_cast<int>(breakpoints.size()) != m)
    throw std::invalid_argument("one breakpoint list per edge required");
  std::vector<int> recount = cover_multiplicity(net.graph, cover.cycles);
  if (recount != cover.multiplicity)
    throw std::invalid_argument("cover multiplicity does not match its cycles");
  for (int e = 0; e < m; ++e) {
    if (cover.multiplicity[static_cast<size_t>(e)] < 1)
      throw std::invalid_argument("cover misses edge " + std::to_string(e));
    if (static_cast<int>(breakpoints[static_cast<size_t>(e)].size()) !=
        cover.multiplicity[static_cast<size_t>(e)] - 1)
      throw std::invalid_argument("edge " + std::to_string(e) + " needs multiplicity-1 breakpoints");
  }

  std::vector<Edge> edges;
  std::vector<FlowConstraint> intervals;
  EdgeMapping mapping;
  std::vector<int> first_copy(static_cast<size_t>(m), 0);

  for (int e = 0; e < m; ++e) {
    mapping.begin_edge();
    first_copy[static_cast<size_t>(e)] = static_cast<int>(edges.size());
    SplitPieces pieces =
        split_pieces(net.constraints[static_cast<size_t>(e)], breakpoints[static_cast<size_t>(e)]);
    for (size_t k = 0; k < pieces.intervals.size(); ++k) {
      mapping.add_image({static_cast<int>(edges.size()), +1, pieces.offsets[k]});
      edges.push_back(net.graph.edge(e));
      intervals.push_back(pieces.intervals[k]);
    }
  }

  // The r-th cycle through an edge takes copy r, in cover order.
  std::vector<int> next_copy(static_cast<size_t>(m), 0);
  CycleCover new_cover;
  for (const DirectedCycle& cycle : cover.cycles) {
    DirectedCycle mapped;
    for (int e : cycle.edge_ids) {
      mapped.edge_ids.push_back(first_copy[static_cast<size_t>(e)] +
                                next_copy[static_cast<size_t>(e)]);
      ++next_copy[static_cast<size_t>(e)];
    }
    new_cover.cycles.push_back(std::move(mapped));
  }
  new_cover.multiplicity.assign(edges.size(), 1);

  DirectedGraph graph(net.graph.vertex_count(), std::move(edges));
  return {ConstrainedNetwork(std::move(graph), std::move(intervals)), std::move(mapping),
          std::move(new_cover)};
}

}  // namespace flownet
