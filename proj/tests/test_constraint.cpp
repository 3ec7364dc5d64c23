#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "flownet/constraint.hpp"
#include "flownet/errors.hpp"
#include "flownet/graph.hpp"
#include "oracles.hpp"

using namespace flownet;

namespace {

FlowConstraint interval(double lo, double hi) { return {lo, hi}; }

DirectedGraph triangle() { return DirectedGraph(3, {{0, 1}, {1, 2}, {2, 0}}); }

// Draw z values that land strictly inside, strictly outside, and exactly on
// the interval endpoints.
double draw_sample(std::mt19937_64& rng, const FlowConstraint& c) {
  std::uniform_real_distribution<double> wide(-10.0, 10.0);
  switch (rng() % 5) {
    case 0: return c.lo;
    case 1: return c.hi;
    case 2: return c.lo + (c.hi - c.lo) * 0.37;
    default: return wide(rng);
  }
}

FlowConstraint draw_interval(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> wide(-5.0, 5.0);
  double a = wide(rng), b = wide(rng);
  if (a > b) std::swap(a, b);
  if (b - a < 1e-3) b = a + 1e-3;
  return {a, b};
}

// Flow produced by a transformed network at frozen tensions, pulled back
// through the mapping. `orient[t]` is +1 when target edge t keeps the original
// direction of its preimage, -1 when it runs against it.
std::vector<double> pulled_back_flows(const TransformResult& tr, const std::vector<int>& orient,
                                      const std::vector<double>& tension,
                                      const std::vector<double>& xc_original) {
  std::vector<double> xc_t = tr.mapping.map_controller_state(xc_original);
  std::vector<double> u_t(xc_t.size());
  for (size_t t = 0; t < u_t.size(); ++t) {
    double y_t = orient[t] > 0 ? tension[t] : -tension[t];
    u_t[t] = saturate(-y_t - xc_t[t], tr.network.constraints[t]);
  }
  return tr.mapping.pull_back_flows(u_t);
}

}  // namespace

TEST_CASE("flow intervals require lo < hi") {
  CHECK_NOTHROW(validate_constraint(interval(-1.0, 1.0)));
  CHECK_THROWS_AS(validate_constraint(interval(1.0, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(validate_constraint(interval(2.0, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(ConstrainedNetwork(triangle(), {interval(0, 1)}), std::invalid_argument);

  ConstrainedNetwork net(triangle(), {interval(0, 1), interval(0.5, 2), interval(1, 3)});
  CHECK(net.compatible());
  ConstrainedNetwork mixed(triangle(), {interval(-1, 1), interval(0.5, 2), interval(1, 3)});
  CHECK_FALSE(mixed.compatible());
  ConstrainedNetwork reversed(triangle(), {interval(-2, -1), interval(0.5, 2), interval(1, 3)});
  CHECK_FALSE(reversed.compatible());
}

TEST_CASE("saturate clamps into the interval") {
  FlowConstraint c = interval(-1.0, 2.0);
  CHECK(saturate(-3.0, c) == -1.0);
  CHECK(saturate(0.5, c) == 0.5);
  CHECK(saturate(7.0, c) == 2.0);
  CHECK(saturate(-1.0, c) == -1.0);
  CHECK(saturate(2.0, c) == 2.0);

  std::vector<double> z{-3.0, 0.5, 7.0};
  std::vector<FlowConstraint> cs{c, c, c};
  CHECK(saturate(z, cs) == std::vector<double>{-1.0, 0.5, 2.0});
  std::vector<FlowConstraint> short_cs{c};
  CHECK_THROWS_AS(saturate(std::span<const double>(z), std::span<const FlowConstraint>(short_cs)),
                  std::invalid_argument);
}

TEST_CASE("sat_antiderivative matches frozen closed-form values") {
  // Integral of clamp(t, -1, 1) from 0 to 2: 1/2 + 1 = 3/2.
  CHECK(sat_antiderivative(2.0, interval(-1.0, 1.0)) == doctest::Approx(1.5).epsilon(1e-14));
  // Integral of clamp(t, 1, 2) from 0 to -1: clamp is 1 below t=1, signed area -1.
  CHECK(sat_antiderivative(-1.0, interval(1.0, 2.0)) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(sat_antiderivative(0.0, interval(-3.0, 4.0)) == 0.0);
  CHECK(sat_antiderivative(0.0, interval(1.0, 2.0)) == 0.0);
}

TEST_CASE("sat_antiderivative agrees with quadrature of the clamp") {
  std::mt19937_64 rng(101u);
  for (int trial = 0; trial < 300; ++trial) {
    FlowConstraint c = draw_interval(rng);
    double z = draw_sample(rng, c);
    double expected = oracle::clamp_integral(z, c.lo, c.hi);
    CHECK(sat_antiderivative(z, c) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("sat_antiderivative is C1 with derivative saturate") {
  std::mt19937_64 rng(103u);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    FlowConstraint c = draw_interval(rng);
    double z = draw_sample(rng, c);
    double num = (sat_antiderivative(z + h, c) - sat_antiderivative(z - h, c)) / (2.0 * h);
    CHECK(num == doctest::Approx(saturate(z, c)).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("clamp shift identity: sat(z; c) + w equals sat(z + w; c + w)") {
  std::mt19937_64 rng(107u);
  std::uniform_real_distribution<double> shift(-8.0, 8.0);
  for (int trial = 0; trial < 2000; ++trial) {
    FlowConstraint c = draw_interval(rng);
    double z = draw_sample(rng, c);
    double w = shift(rng);
    FlowConstraint shifted{c.lo + w, c.hi + w};
    CHECK(saturate(z, c) + w ==
          doctest::Approx(saturate(z + w, shifted)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("clamp reversal identity: sat(z; lo, hi) equals -sat(-z; -hi, -lo)") {
  std::mt19937_64 rng(109u);
  for (int trial = 0; trial < 2000; ++trial) {
    FlowConstraint c = draw_interval(rng);
    double z = draw_sample(rng, c);
    FlowConstraint flipped{-c.hi, -c.lo};
    CHECK(saturate(z, c) == -saturate(-z, flipped));  // negation is exact
  }
}

TEST_CASE("clamp division identity: piecewise clamps along breakpoints sum to the clamp") {
  std::mt19937_64 rng(113u);
  for (int trial = 0; trial < 1000; ++trial) {
    FlowConstraint c = draw_interval(rng);
    int pieces = 1 + static_cast<int>(rng() % 3);
    std::vector<double> bps;
    for (int k = 1; k < pieces; ++k)
      bps.push_back(c.lo + (c.hi - c.lo) * static_cast<double>(k) / pieces);
    SplitPieces split = split_pieces(c, bps);
    double z = draw_sample(rng, c);
    double sum = 0.0;
    for (size_t k = 0; k < split.intervals.size(); ++k)
      sum += saturate(z - split.offsets[k], split.intervals[k]);
    CHECK(sum == doctest::Approx(saturate(z, c)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("edge mapping identity and composition behave like function composition") {
  EdgeMapping id = EdgeMapping::identity(3);
  CHECK(id.original_edge_count() == 3);
  CHECK(id.target_edge_count() == 3);
  std::vector<double> xc{1.0, -2.0, 0.5};
  CHECK(id.map_controller_state(xc) == xc);
  CHECK(id.pull_back_flows(xc) == xc);

  EdgeMapping flip;  // single edge reversed
  flip.begin_edge();
  flip.add_image({0, -1, 0.0});
  CHECK(flip.map_controller_state(std::vector<double>{2.0}) == std::vector<double>{-2.0});
  CHECK(flip.pull_back_flows(std::vector<double>{3.0}) == std::vector<double>{-3.0});

  EdgeMapping offset;  // single edge split at 1.0 within [0, 2]
  offset.begin_edge();
  offset.add_image({0, +1, 0.0});
  offset.add_image({1, +1, 1.0});
  std::vector<double> mapped = offset.map_controller_state(std::vector<double>{0.25});
  CHECK(mapped == std::vector<double>{0.25, 1.25});
  CHECK(offset.pull_back_flows(std::vector<double>{0.5, 0.25}) == std::vector<double>{0.75});

  // Composition must agree with applying the mappings one after the other.
  EdgeMapping composed = offset.then(EdgeMapping::identity(2));
  CHECK(composed.map_controller_state(std::vector<double>{0.25}) == mapped);

  EdgeMapping flip2;  // reverse both targets
  flip2.begin_edge();
  flip2.add_image({0, -1, 0.0});
  flip2.begin_edge();
  flip2.add_image({1, -1, 0.0});
  EdgeMapping chain = offset.then(flip2);
  std::vector<double> direct = flip2.map_controller_state(offset.map_controller_state(xc = {0.25}));
  CHECK(chain.map_controller_state(std::vector<double>{0.25}) == direct);
  std::vector<double> f{0.5, 0.25};
  CHECK(chain.pull_back_flows(f) == offset.pull_back_flows(flip2.pull_back_flows(f)));

  CHECK_THROWS_AS(offset.then(EdgeMapping::identity(3)), std::invalid_argument);
  CHECK_THROWS_AS(id.map_controller_state(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("minimum-norm controller state: frozen triangle solve") {
  // B xc = (1, -1, 0) on the directed triangle; the minimum-norm solution is
  // orthogonal to the circulation (1, 1, 1).
  std::vector<double> xc = min_norm_controller_state(triangle(), {1.0, -1.0, 0.0});
  REQUIRE(xc.size() == 3);
  CHECK(xc[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(xc[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(xc[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("minimum-norm controller state solves B xc = rhs orthogonally to ker B") {
  std::mt19937_64 rng(127u);
  std::uniform_real_distribution<double> amp(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    oracle::GraphData d = oracle::random_weakly_connected(rng, 2 + trial % 6, trial % 4);
    std::vector<Edge> edges;
    for (auto [t, h] : d.edges) edges.push_back({t, h});
    DirectedGraph g(d.n, edges);

    // rhs in the range of B by construction.
    std::vector<double> w(d.edges.size());
    for (double& v : w) v = amp(rng);
    std::vector<double> rhs = oracle::b_times(d, w);

    std::vector<double> xc = min_norm_controller_state(g, rhs);
    std::vector<double> achieved = oracle::b_times(d, xc);
    for (size_t v = 0; v < rhs.size(); ++v)
      CHECK(achieved[v] == doctest::Approx(rhs[v]).epsilon(1e-9).scale(1.0));

    for (const std::vector<double>& basis : oracle::incidence_kernel_basis(d)) {
      double dot = 0.0, norm = 0.0;
      for (size_t j = 0; j < xc.size(); ++j) {
        dot += xc[j] * basis[j];
        norm += basis[j] * basis[j];
      }
      CHECK(std::abs(dot) <= 1e-8 * (1.0 + std::sqrt(norm)));
    }
  }
}

TEST_CASE("absorb_disturbance folds matched terminal flows into the intervals") {
  ConstrainedNetwork net(triangle(), {interval(0, 2), interval(0, 2), interval(0, 2)});
  TerminalPattern terminals({{0, +1}, {1, -1}});
  AbsorbResult r = absorb_disturbance(net, terminals, {1.0, 1.0});

  REQUIRE(r.matching_state.size() == 3);
  CHECK(r.matching_state[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(r.matching_state[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.matching_state[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.network.constraints[0].lo == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(r.network.constraints[0].hi == doctest::Approx(2.0 - 2.0 / 3.0).epsilon(1e-12));
  CHECK(r.network.constraints[1].lo == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.network.constraints[2].hi == doctest::Approx(2.0 + 1.0 / 3.0).epsilon(1e-12));

  // Absorbed flows with the shifted controller state reproduce original flows
  // plus the matching circulation: sat(z; c) + xbar = sat(z + xbar; c + xbar).
  std::mt19937_64 rng(131u);
  std::uniform_real_distribution<double> amp(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    for (int j = 0; j < 3; ++j) {
      double y = amp(rng), xc = amp(rng);
      double u_orig = saturate(-y - xc, net.constraints[static_cast<size_t>(j)]);
      double xt = xc - r.matching_state[static_cast<size_t>(j)];
      double u_abs = saturate(-y - xt, r.network.constraints[static_cast<size_t>(j)]);
      CHECK(u_abs == doctest::Approx(u_orig + r.matching_state[static_cast<size_t>(j)])
                         .epsilon(1e-12)
                         .scale(1.0));
    }
  }
}

TEST_CASE("absorb_disturbance rejects unmatched terminal flows") {
  ConstrainedNetwork net(triangle(), {interval(0, 2), interval(0, 2), interval(0, 2)});
  // Total inflow does not cancel.
  CHECK_THROWS_AS(absorb_disturbance(net, TerminalPattern({{0, +1}}), {1.0}), NoMatchingError);

  // Cancelling totals in separate weak components still have no carrier.
  DirectedGraph split(4, {{0, 1}, {2, 3}});
  ConstrainedNetwork split_net(split, {interval(0, 1), interval(0, 1)});
  TerminalPattern cross({{0, +1}, {3, -1}});
  CHECK_THROWS_AS(absorb_disturbance(split_net, cross, {1.0, 1.0}), NoMatchingError);

  // Zero disturbance is always matched by the zero state.
  AbsorbResult r = absorb_disturbance(net, TerminalPattern({{0, +1}, {1, -1}}), {0.0, 0.0});
  for (double v : r.matching_state) CHECK(v == 0.0);
}

TEST_CASE("normalize_orientation keeps, reverses, or splits edges by interval sign") {
  DirectedGraph g(2, {{0, 1}});

  TransformResult keep = normalize_orientation(ConstrainedNetwork(g, {interval(1, 2)}));
  CHECK(keep.network.graph.edge_count() == 1);
  CHECK(keep.network.graph.edge(0).tail == 0);
  CHECK(keep.network.constraints[0].lo == 1.0);
  CHECK(keep.mapping.images_of(0).size() == 1);
  CHECK(keep.mapping.images_of(0)[0].sign == +1);

  TransformResult rev = normalize_orientation(ConstrainedNetwork(g, {interval(-2, -1)}));
  CHECK(rev.network.graph.edge_count() == 1);
  CHECK(rev.network.graph.edge(0).tail == 1);
  CHECK(rev.network.graph.edge(0).head == 0);
  CHECK(rev.network.constraints[0].lo == 1.0);
  CHECK(rev.network.constraints[0].hi == 2.0);
  CHECK(rev.mapping.images_of(0)[0].sign == -1);

  TransformResult split = normalize_orientation(ConstrainedNetwork(g, {interval(-1, 2)}));
  CHECK(split.network.graph.edge_count() == 2);
  CHECK(split.network.graph.edge(0).tail == 0);
  CHECK(split.network.graph.edge(1).tail == 1);  // reversed copy
  CHECK(split.network.constraints[0].lo == 0.0);
  CHECK(split.network.constraints[0].hi == 2.0);
  CHECK(split.network.constraints[1].lo == 0.0);
  CHECK(split.network.constraints[1].hi == 1.0);
  CHECK(split.network.compatible());
}

TEST_CASE("normalized networks realize the original saturation pointwise") {
  std::mt19937_64 rng(137u);
  std::uniform_real_distribution<double> amp(-4.0, 4.0);
  DirectedGraph g(2, {{0, 1}});
  for (int trial = 0; trial < 400; ++trial) {
    FlowConstraint c = draw_interval(rng);
    ConstrainedNetwork net(g, {c});
    TransformResult tr = normalize_orientation(net);

    std::vector<int> orient(static_cast<size_t>(tr.network.graph.edge_count()));
    for (size_t t = 0; t < orient.size(); ++t)
      orient[t] = tr.network.graph.edge(static_cast<int>(t)).tail == 0 ? +1 : -1;

    double y = amp(rng), xc = amp(rng);
    std::vector<double> tension(orient.size(), y);  // same vertices, same tension magnitude
    std::vector<double> pulled = pulled_back_flows(tr, orient, tension, {xc});
    double expected = saturate(-y - xc, c);
    CHECK(pulled[0] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("split_edge produces offset copies that sum back to the original flow") {
  DirectedGraph g(2, {{0, 1}});
  ConstrainedNetwork net(g, {interval(1, 2)});

  TransformResult tr = split_edge(net, 0, {1.5});
  REQUIRE(tr.network.graph.edge_count() == 2);
  CHECK(tr.network.constraints[0].lo == 1.0);
  CHECK(tr.network.constraints[0].hi == 1.5);
  CHECK(tr.network.constraints[1].lo == 0.0);
  CHECK(tr.network.constraints[1].hi == 0.5);
  CHECK(tr.mapping.images_of(0)[0].offset == 0.0);
  CHECK(tr.mapping.images_of(0)[1].offset == 1.5);

  std::mt19937_64 rng(139u);
  std::uniform_real_distribution<double> amp(-4.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    double y = amp(rng), xc = amp(rng);
    std::vector<int> orient{+1, +1};
    std::vector<double> tension{y, y};
    std::vector<double> pulled = pulled_back_flows(tr, orient, tension, {xc});
    CHECK(pulled[0] ==
          doctest::Approx(saturate(-y - xc, net.constraints[0])).epsilon(1e-12).scale(1.0));
  }

  CHECK_THROWS_AS(split_edge(net, 1, {1.5}), std::invalid_argument);
  CHECK_THROWS_AS(split_edge(net, 0, {2.5}), std::invalid_argument);   // outside
  CHECK_THROWS_AS(split_edge(net, 0, {1.0}), std::invalid_argument);   // not strictly inside
  CHECK_THROWS_AS(split_edge(net, 0, {1.6, 1.4}), std::invalid_argument);  // not increasing
}

TEST_CASE("split_pieces covers the interval with contiguous offset pieces") {
  SplitPieces p = split_pieces(interval(0.3, 1.6), {0.8, 1.2});
  REQUIRE(p.intervals.size() == 3);
  CHECK(p.intervals[0].lo == 0.3);
  CHECK(p.intervals[0].hi == 0.8);
  CHECK(p.offsets[0] == 0.0);
  CHECK(p.intervals[1].lo == 0.0);
  CHECK(p.intervals[1].hi == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(p.offsets[1] == 0.8);
  CHECK(p.intervals[2].lo == 0.0);
  CHECK(p.intervals[2].hi == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(p.offsets[2] == 1.2);

  SplitPieces single = split_pieces(interval(0.3, 1.6), {});
  CHECK(single.intervals.size() == 1);
  CHECK(single.offsets[0] == 0.0);
}
