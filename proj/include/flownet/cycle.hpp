#pragma once

#include <vector>

#include "flownet/constraint.hpp"
#include "flownet/graph.hpp"

namespace flownet {

// Edge ids in traversal order; head of each edge is the tail of the next,
// cyclically, and no edge repeats.
struct DirectedCycle {
  std::vector<int> edge_ids;
};

bool is_directed_cycle(const DirectedGraph& graph, const DirectedCycle& cycle);

// Cycles plus the per-edge multiplicity: multiplicity[i] counts the cycles
// that use edge i. A cover touches every edge at least once.
struct CycleCover {
  std::vector<DirectedCycle> cycles;
  std::vector<int> multiplicity;
};

// Multiplicity vector induced by a cycle list; validates the cycles.
std::vector<int> cover_multiplicity(const DirectedGraph& graph,
                                    const std::vector<DirectedCycle>& cycles);

// Partition the edges of a balanced strongly connected graph into
// edge-disjoint directed cycles. Deterministic: the walk always takes the
// lowest remaining edge id.
std::vector<DirectedCycle> decompose_balanced(const DirectedGraph& graph);

// Decompose an integer circulation (multiplicity[i] >= 0, balanced at every
// vertex) into directed cycles; edge i appears in exactly multiplicity[i] of
// them. `rotation` rotates the lowest-edge-id tie-break and yields alternative
// decompositions of the same circulation.
std::vector<DirectedCycle> decompose_circulation(const DirectedGraph& graph,
                                                 const std::vector<int>& multiplicity,
                                                 int rotation = 0);

// Cycle cover minimizing the total multiplicity, found as a minimum
// circulation with per-edge lower bound one. Requires strong connectivity.
CycleCover minimal_cover(const DirectedGraph& graph, int rotation = 0);

struct AugmentedNetwork {
  ConstrainedNetwork network;  // each edge i replaced by multiplicity[i] copies
  EdgeMapping mapping;
  CycleCover cover;            // non-overlapping cover of the new graph
};

// Split every edge into as many copies as cycles that use it, handing the
// cycles their own copies: the r-th cycle through edge i (in cover order)
// receives copy r. breakpoints[i] must hold multiplicity[i] - 1 values.
AugmentedNetwork augment(const ConstrainedNetwork& net, const CycleCover& cover,
                         const std::vector<std::vector<double>>& breakpoints);

// Equally spaced breakpoints inside every interval.
std::vector<std::vector<double>> default_breakpoints(const ConstrainedNetwork& net,
                                                     const CycleCover& cover);

}  // namespace flownet
