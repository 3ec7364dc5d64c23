#include "flownet/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "flownet/errors.hpp"

namespace flownet {

void validate_constraint(const FlowConstraint& c) {
  if (!(c.lo < c.hi))
    throw std::invalid_argument("flow interval requires lo < hi, got [" + std::to_string(c.lo) +
                                ", " + std::to_string(c.hi) + "]");
}

ConstrainedNetwork::ConstrainedNetwork(DirectedGraph g, std::vector<FlowConstraint> c)
    : graph(std::move(g)), constraints(std::move(c)) {
  if (static_cast<int>(constraints.size()) != graph.edge_count())
    throw std::invalid_argument("one flow interval per edge required");
  for (const FlowConstraint& fc : constraints) validate_constraint(fc);
}

bool ConstrainedNetwork::compatible() const {
  for (const FlowConstraint& c : constraints)
    if (c.lo < 0.0 || c.hi <= 0.0) return false;
  return true;
}

double saturate(double z, const FlowConstraint& c) {
  if (z < c.lo) return c.lo;
  if (z > c.hi) return c.hi;
  return z;
}

std::vector<double> saturate(std::span<const double> z, std::span<const FlowConstraint> cs) {
  if (z.size() != cs.size()) throw std::invalid_argument("saturate: length mismatch");
  std::vector<double> out(z.size());
  for (size_t i = 0; i < z.size(); ++i) out[i] = saturate(z[i], cs[i]);
  return out;
}

double sat_antiderivative(double z, const FlowConstraint& c) {
  auto primitive = [&c](double t) {
    if (t <= c.lo) return c.lo * t;
    if (t >= c.hi) return c.hi * t + 0.5 * (c.lo * c.lo - c.hi * c.hi);
    return 0.5 * (t * t + c.lo * c.lo);
  };
  return primitive(z) - primitive(0.0);
}

EdgeMapping EdgeMapping::identity(int edge_count) {
  EdgeMapping map;
  for (int i = 0; i < edge_count; ++i) {
    map.begin_edge();
    map.add_image({i, +1, 0.0});
  }
  return map;
}

void EdgeMapping::add_image(EdgeImage image) {
  if (images_.empty()) throw std::logic_error("add_image before begin_edge");
  if (image.sign != 1 && image.sign != -1)
    throw std::invalid_argument("edge image sign must be +1 or -1");
  images_.back().push_back(image);
  target_count_ = std::max(target_count_, image.target + 1);
}

std::vector<double> EdgeMapping::map_controller_state(std::span<const double> xc) const {
  if (static_cast<int>(xc.size()) != original_edge_count())
    throw std::invalid_argument("controller state length mismatch");
  std::vector<double> out(static_cast<size_t>(target_count_), 0.0);
  for (size_t i = 0; i < images_.size(); ++i)
    for (const EdgeImage& im : images_[i])
      out[static_cast<size_t>(im.target)] = im.sign * (xc[i] + im.offset);
  return out;
}

std::vector<double> EdgeMapping::pull_back_flows(std::span<const double> flows) const {
  if (static_cast<int>(flows.size()) != target_count_)
    throw std::invalid_argument("flow vector length mismatch");
  std::vector<double> out(images_.size(), 0.0);
  for (size_t i = 0; i < images_.size(); ++i)
    for (const EdgeImage& im : images_[i])
      out[i] += im.sign * flows[static_cast<size_t>(im.target)];
  return out;
}

EdgeMapping EdgeMapping::then(const EdgeMapping& next) const {
  if (next.original_edge_count() != target_count_)
    throw std::invalid_argument("mapping composition size mismatch");
  EdgeMapping out;
  for (size_t i = 0; i < images_.size(); ++i) {
    out.begin_edge();
    for (const EdgeImage& first : images_[i]) {
      for (const EdgeImage& second : next.images_of(first.target)) {
        // xc2 = s2 (s1 (xc + b1) + b2) = s1 s2 (xc + b1 + s1 b2)
        out.add_image(
            {second.target, first.sign * second.sign, first.offset + first.sign * second.offset});
      }
    }
  }
  return out;
}

std::vector<double> min_norm_controller_state(const DirectedGraph& graph,
                                              const std::vector<double>& vertex_rhs) {
  const int n = graph.vertex_count();
  if (static_cast<int>(vertex_rhs.size()) != n)
    throw std::invalid_argument("vertex inflow length mismatch");

  // Any y with (B B^T) y = rhs gives the same B^T y, which is the minimum-norm
  // solution of B xc = rhs whenever that system is consistent.
  std::vector<std::vector<double>> a(static_cast<size_t>(n),
                                     std::vector<double>(static_cast<size_t>(n) + 1, 0.0));
  for (int j = 0; j < graph.edge_count(); ++j) {
    const Edge& e = graph.edge(j);
    a[static_cast<size_t>(e.tail)][static_cast<size_t>(e.tail)] += 1.0;
    a[static_cast<size_t>(e.head)][static_cast<size_t>(e.head)] += 1.0;
    a[static_cast<size_t>(e.tail)][static_cast<size_t>(e.head)] -= 1.0;
    a[static_cast<size_t>(e.head)][static_cast<size_t>(e.tail)] -= 1.0;
  }
  for (int v = 0; v < n; ++v) a[static_cast<size_t>(v)][static_cast<size_t>(n)] = vertex_rhs[v];

  double scale = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a[i][j]));
  const double tol = 1e-12 * scale;

  std::vector<int> pivot_col;
  int row = 0;
  for (int col = 0; col < n && row < n; ++col) {
    int best = row;
    for (int r = row + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[best][col])) best = r;
    if (std::abs(a[best][col]) <= tol) continue;
    std::swap(a[row], a[best]);
    for (int r = 0; r < n; ++r) {
      if (r == row) continue;
      double f = a[r][col] / a[row][col];
      if (f == 0.0) continue;
      for (int c = col; c <= n; ++c) a[r][c] -= f * a[row][c];
    }
    pivot_col.push_back(col);
    ++row;
  }

  std::vector<double> y(static_cast<size_t>(n), 0.0);  // free variables stay 0
  for (size_t r = 0; r < pivot_col.size(); ++r)
    y[static_cast<size_t>(pivot_col[r])] = a[r][static_cast<size_t>(n)] / a[r][pivot_col[r]];

  std::vector<double> xc(static_cast<size_t>(graph.edge_count()), 0.0);
  for (int j = 0; j < graph.edge_count(); ++j) {
    const Edge& e = graph.edge(j);
    xc[static_cast<size_t>(j)] = y[static_cast<size_t>(e.head)] - y[static_cast<size_t>(e.tail)];
  }
  return xc;
}

AbsorbResult absorb_disturbance(const ConstrainedNetwork& net, const TerminalPattern& terminals,
                                const std::vector<double>& dbar) {
  const int n = net.graph.vertex_count();
  std::vector<double> inflow = terminals.apply(dbar, n);

  double total = 0.0;
  double magnitude = 0.0;
  for (double b : inflow) {
    total += b;
    magnitude += b * b;
  }
  magnitude = std::sqrt(magnitude);
  const double tol = 1e-9 * (1.0 + magnitude);
  if (std::abs(total) > tol)
    throw NoMatchingError("terminal flows do not cancel: total inflow " + std::to_string(total));

  std::vector<double> xc = min_norm_controller_state(net.graph, inflow);

  // Residual check covers inflow outside the incidence range.
  std::vector<double> residual = inflow;
  for (int j = 0; j < net.graph.edge_count(); ++j) {
    const Edge& e = net.graph.edge(j);
    residual[static_cast<size_t>(e.head)] -= xc[static_cast<size_t>(j)];
    residual[static_cast<size_t>(e.tail)] += xc[static_cast<size_t>(j)];
  }
  double rnorm = 0.0;
  for (double r : residual) rnorm += r * r;
  rnorm = std::sqrt(rnorm);
  if (rnorm > tol)
    throw NoMatchingError("terminal inflow cannot be carried by the network edges (residual " +
                          std::to_string(rnorm) + ")");

  std::vector<FlowConstraint> shifted = net.constraints;
  for (int j = 0; j < net.graph.edge_count(); ++j) {
    shifted[static_cast<size_t>(j)].lo += xc[static_cast<size_t>(j)];
    shifted[static_cast<size_t>(j)].hi += xc[static_cast<size_t>(j)];
  }
  return {ConstrainedNetwork(net.graph, std::move(shifted)), std::move(xc)};
}

TransformResult normalize_orientation(const ConstrainedNetwork& net) {
  std::vector<Edge> edges;
  std::vector<FlowConstraint> intervals;
  EdgeMapping mapping;

  for (int j = 0; j < net.graph.edge_count(); ++j) {
    const Edge& e = net.graph.edge(j);
    const FlowConstraint& c = net.constraints[static_cast<size_t>(j)];
    mapping.begin_edge();
    if (c.lo >= 0.0) {
      mapping.add_image({static_cast<int>(edges.size()), +1, 0.0});
      edges.push_back(e);
      intervals.push_back(c);
    } else if (c.hi <= 0.0) {
      mapping.add_image({static_cast<int>(edges.size()), -1, 0.0});
      edges.push_back({e.head, e.tail});
      intervals.push_back({-c.hi, -c.lo});
    } else {
      // lo < 0 < hi: forward part keeps the edge, the nonpositive part runs
      // against it as a reversed copy.
      mapping.add_image({static_cast<int>(edges.size()), +1, 0.0});
      edges.push_back(e);
      intervals.push_back({0.0, c.hi});
      mapping.add_image({static_cast<int>(edges.size()), -1, 0.0});
      edges.push_back({e.head, e.tail});
      intervals.push_back({0.0, -c.lo});
    }
  }

  DirectedGraph graph(net.graph.vertex_count(), std::move(edges));
  return {ConstrainedNetwork(std::move(graph), std::move(intervals)), std::move(mapping)};
}

SplitPieces split_pieces(const FlowConstraint& c, const std::vector<double>& breakpoints) {
  validate_constraint(c);
  double prev = c.lo;
  for (double b : breakpoints) {
    if (!(b > prev) || !(b < c.hi))
      throw std::invalid_argument("breakpoints must increase strictly inside the interval");
    prev = b;
  }
  SplitPieces pieces;
  if (breakpoints.empty()) {
    pieces.intervals.push_back(c);
    pieces.offsets.push_back(0.0);
    return pieces;
  }
  pieces.intervals.push_back({c.lo, breakpoints.front()});
  pieces.offsets.push_back(0.0);
  for (size_t k = 1; k < breakpoints.size(); ++k) {
    pieces.intervals.push_back({0.0, breakpoints[k] - breakpoints[k - 1]});
    pieces.offsets.push_back(breakpoints[k - 1]);
  }
  pieces.intervals.push_back({0.0, c.hi - breakpoints.back()});
  pieces.offsets.push_back(breakpoints.back());
  return pieces;
}

TransformResult split_edge(const ConstrainedNetwork& net, int edge_id,
                           const std::vector<double>& breakpoints) {
  if (edge_id < 0 || edge_id >= net.graph.edge_count())
    throw std::invalid_argument("split_edge: no such edge");
  std::vector<Edge> edges;
  std::vector<FlowConstraint> intervals;
  EdgeMapping mapping;

  for (int j = 0; j < net.graph.edge_count(); ++j) {
    mapping.begin_edge();
    if (j != edge_id) {
      mapping.add_image({static_cast<int>(edges.size()), +1, 0.0});
      edges.push_back(net.graph.edge(j));
      intervals.push_back(net.constraints[static_cast<size_t>(j)]);
      continue;
    }
    SplitPieces pieces = split_pieces(net.constraints[static_cast<size_t>(j)], breakpoints);
    for (size_t k = 0; k < pieces.intervals.size(); ++k) {
      mapping.add_image({static_cast<int>(edges.size()), +1, pieces.offsets[k]});
      edges.push_back(net.graph.edge(j));
      intervals.push_back(pieces.intervals[k]);
    }
  }

  DirectedGraph graph(net.graph.vertex_count(), std::move(edges));
  return {ConstrainedNetwork(std::move(graph), std::move(intervals)), std::move(mapping)};
}

}  // namespace flownet
