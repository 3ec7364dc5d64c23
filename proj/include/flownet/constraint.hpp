#pragma once

#include <span>
#include <vector>

#include "flownet/graph.hpp"

namespace flownet {

// Closed flow interval [lo, hi] with lo < hi.
struct FlowConstraint {
  double lo = 0.0;
  double hi = 1.0;
};

void validate_constraint(const FlowConstraint& c);

struct ConstrainedNetwork {
  ConstrainedNetwork() = default;
  ConstrainedNetwork(DirectedGraph g, std::vector<FlowConstraint> c);

  DirectedGraph graph;
  std::vector<FlowConstraint> constraints;

  // Every interval satisfies lo >= 0 and hi > 0, so each edge can only carry
  // flow along its orientation.
  bool compatible() const;
};

double saturate(double z, const FlowConstraint& c);
std::vector<double> saturate(std::span<const double> z, std::span<const FlowConstraint> cs);

// Integral of the clamp from 0 to z in closed form. Convex, C1, and its
// derivative is saturate(z, c).
double sat_antiderivative(double z, const FlowConstraint& c);

// One copy an original edge turned into during a rewrite. The copy's
// controller state starts at sign * (xc_original + offset), and summing
// sign * flow over all copies recovers the original edge flow.
struct EdgeImage {
  int target = 0;
  int sign = +1;
  double offset = 0.0;
};

class EdgeMapping {
 public:
  EdgeMapping() = default;
  static EdgeMapping identity(int edge_count);

  // Builder interface: append images edge by edge in original order.
  void begin_edge() { images_.emplace_back(); }
  void add_image(EdgeImage image);

  int original_edge_count() const { return static_cast<int>(images_.size()); }
  int target_edge_count() const { return target_count_; }
  const std::vector<EdgeImage>& images_of(int original) const {
    return images_[static_cast<size_t>(original)];
  }

  std::vector<double> map_controller_state(std::span<const double> xc) const;
  std::vector<double> pull_back_flows(std::span<const double> flows) const;

  // Composition: apply this mapping, then `next`.
  EdgeMapping then(const EdgeMapping& next) const;

 private:
  std::vector<std::vector<EdgeImage>> images_;
  int target_count_ = 0;
};

// Minimum-norm controller state xc with B xc = vertex_rhs. If the system is
// inconsistent the returned vector is a best-effort solve; callers check the
// residual themselves.
std::vector<double> min_norm_controller_state(const DirectedGraph& graph,
                                              const std::vector<double>& vertex_rhs);

struct AbsorbResult {
  ConstrainedNetwork network;          // intervals shifted by the matching state
  std::vector<double> matching_state;  // minimum-norm xc reproducing the inflow
};

// Fold constant terminal flows into the flow intervals. Throws NoMatchingError
// when no controller state reproduces the external inflow (in particular when
// total inflow does not cancel).
AbsorbResult absorb_disturbance(const ConstrainedNetwork& net, const TerminalPattern& terminals,
                                const std::vector<double>& dbar);

struct TransformResult {
  ConstrainedNetwork network;
  EdgeMapping mapping;
};

// Rewrite every edge so that all intervals satisfy lo >= 0, hi > 0: edges with
// hi <= 0 are reversed, edges with lo < 0 < hi are split into a forward and a
// reversed copy.
TransformResult normalize_orientation(const ConstrainedNetwork& net);

// Replace one edge by parallel copies along the given strictly increasing
// breakpoints, all strictly inside (lo, hi). The copies carry intervals
// [lo, b1], [0, b2 - b1], ..., [0, hi - b_last] and offsets 0, b1, ..., b_last.
TransformResult split_edge(const ConstrainedNetwork& net, int edge_id,
                           const std::vector<double>& breakpoints);

// The per-copy intervals and offsets split_edge assigns for one edge.
struct SplitPieces {
  std::vector<FlowConstraint> intervals;
  std::vector<double> offsets;
};
SplitPieces split_pieces(const FlowConstraint& c, const std::vector<double>& breakpoints);

}  // namespace flownet
