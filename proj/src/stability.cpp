#include "flownet/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "flownet/errors.hpp"
#include "flownet/lp.hpp"

namespace flownet {

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double l2_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double a : v) acc += a * a;
  return std::sqrt(acc);
}

}  // namespace

CycleVerdict analyze_cycle(const ConstrainedNetwork& net, const DirectedCycle& cycle,
                           double interior_tol) {
  if (!is_directed_cycle(net.graph, cycle))
    throw NotACycleError("edge list does not trace a directed cycle");
  if (net.constraints.size() != static_cast<size_t>(net.graph.edge_count()))
    throw std::invalid_argument("network carries no interval for some edge");

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int e : cycle.edge_ids) {
    const FlowConstraint& c = net.constraints[static_cast<size_t>(e)];
    if (c.lo < 0.0 || !(c.hi > 0.0))
      throw IncompatibleOrientationError("cycle edge " + std::to_string(e) + " holds [" +
                                         fmt_g(c.lo) + ", " + fmt_g(c.hi) +
                                         "], incompatible with its orientation");
    lo = std::max(lo, c.lo);
    hi = std::min(hi, c.hi);
  }

  CycleVerdict verdict;
  verdict.lo = lo;
  verdict.hi = hi;
  const double width = hi - lo;
  if (width < 0.0) {
    verdict.classification = CycleClass::Unstable;
  } else if (width == 0.0) {
    verdict.classification = CycleClass::Clustering;
  } else if (width < interior_tol) {
    verdict.classification = CycleClass::Clustering;
    verdict.boundary = true;  // interior exists but is thinner than the tolerance
  } else {
    verdict.classification = CycleClass::Consensus;
  }
  return verdict;
}

MatchResult check_matching(const TerminalPattern& terminals, const std::vector<double>& dbar,
                           const DirectedGraph& graph) {
  MatchResult result;
  const int n = graph.vertex_count();
  std::vector<double> inflow = terminals.empty()
                                   ? std::vector<double>(static_cast<size_t>(n), 0.0)
                                   : terminals.apply(dbar, n);
  double total = 0.0;
  for (double b : inflow) total += b;
  const double scale = 1.0 + l2_norm(inflow);
  result.conservation_ok = std::abs(total) <= 1e-9 * scale;

  std::vector<double> xc = min_norm_controller_state(graph, inflow);
  std::vector<double> residual = inflow;
  for (int e = 0; e < graph.edge_count(); ++e) {
    residual[static_cast<size_t>(graph.edge(e).head)] -= xc[static_cast<size_t>(e)];
    residual[static_cast<size_t>(graph.edge(e).tail)] += xc[static_cast<size_t>(e)];
  }
  result.residual = l2_norm(residual);
  result.matchable = result.residual <= 1e-9 * scale;
  if (result.matchable) result.controller_state = std::move(xc);
  return result;
}

namespace {

// The certificate's own view of the split intervals: piece j of an edge with
// multiplicity T has lower bound lo (j = 0) or 0 (j > 0), and an upper bound
// affine in the breakpoints: b_1, then b_{j+1} - b_j, then hi - b_{T-1}.
struct PieceBounds {
  double lower = 0.0;
  std::vector<std::pair<int, double>> upper_coeff;  // (variable, coefficient)
  double upper_const = 0.0;
};

struct CoverLayout {
  std::vector<int> var_offset;                       // per edge, into breakpoint vars
  int num_vars = 0;
  std::vector<std::vector<PieceBounds>> pieces;      // per edge, per copy
  std::vector<std::vector<std::pair<int, int>>> members;  // per cycle: (edge, rank)
  std::vector<LinearConstraint> ordering;            // breakpoint interior + ascent
  std::vector<int> split_edges;                      // multiplicity >= 2, ascending
};

CoverLayout layout_cover(const ConstrainedNetwork& net, const CycleCover& cover) {
  const int m = net.graph.edge_count();
  CoverLayout layout;
  layout.var_offset.assign(static_cast<size_t>(m) + 1, 0);
  for (int e = 0; e < m; ++e) {
    layout.var_offset[static_cast<size_t>(e) + 1] =
        layout.var_offset[static_cast<size_t>(e)] +
        std::max(cover.multiplicity[static_cast<size_t>(e)] - 1, 0);
    if (cover.multiplicity[static_cast<size_t>(e)] > 1) layout.split_edges.push_back(e);
  }
  layout.num_vars = layout.var_offset[static_cast<size_t>(m)];

  layout.pieces.resize(static_cast<size_t>(m));
  for (int e = 0; e < m; ++e) {
    const int t = cover.multiplicity[static_cast<size_t>(e)];
    const FlowConstraint& c = net.constraints[static_cast<size_t>(e)];
    const int base = layout.var_offset[static_cast<size_t>(e)];
    auto& list = layout.pieces[static_cast<size_t>(e)];
    list.resize(static_cast<size_t>(t));
    for (int j = 0; j < t; ++j) {
      PieceBounds& p = list[static_cast<size_t>(j)];
      p.lower = j == 0 ? c.lo : 0.0;
      if (t == 1) {
        p.upper_const = c.hi;
      } else if (j == 0) {
        p.upper_coeff.push_back({base, 1.0});
      } else if (j < t - 1) {
        p.upper_coeff.push_back({base + j, 1.0});
        p.upper_coeff.push_back({base + j - 1, -1.0});
      } else {
        p.upper_coeff.push_back({base + t - 2, -1.0});
        p.upper_const = c.hi;
      }
    }

    if (t > 1) {
      // Keep breakpoints strictly ascending and strictly interior.
      const double margin = (c.hi - c.lo) * 1e-9;
      {
        LinearConstraint row;
        row.coeff.assign(static_cast<size_t>(layout.num_vars), 0.0);
        row.coeff[static_cast<size_t>(base)] = -1.0;
        row.bound = -c.lo - margin;
        layout.ordering.push_back(std::move(row));
      }
      for (int j = 0; j + 1 < t - 1; ++j) {
        LinearConstraint row;
        row.coeff.assign(static_cast<size_t>(layout.num_vars), 0.0);
        row.coeff[static_cast<size_t>(base + j)] = 1.0;
        row.coeff[static_cast<size_t>(base + j + 1)] = -1.0;
        row.bound = -margin;
        layout.ordering.push_back(std::move(row));
      }
      {
        LinearConstraint row;
        row.coeff.assign(static_cast<size_t>(layout.num_vars), 0.0);
        row.coeff[static_cast<size_t>(base + t - 2)] = 1.0;
        row.bound = c.hi - margin;
        layout.ordering.push_back(std::move(row));
      }
    }
  }

  layout.members.resize(cover.cycles.size());
  std::vector<int> seen(static_cast<size_t>(m), 0);
  for (size_t i = 0; i < cover.cycles.size(); ++i) {
    for (int e : cover.cycles[i].edge_ids) {
      layout.members[i].push_back({e, seen[static_cast<size_t>(e)]});
      ++seen[static_cast<size_t>(e)];
    }
  }
  return layout;
}

long long saturating_factorial(int k, long long cap) {
  long long f = 1;
  for (int i = 2; i <= k; ++i) {
    if (f > cap / i) return cap;
    f *= i;
  }
  return f;
}

// Lexicographic unranking of the permutations of {0..k-1}; rank 0 is identity.
std::vector<int> nth_permutation(int k, long long rank) {
  std::vector<int> pool(static_cast<size_t>(k));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<long long> fact(static_cast<size_t>(k) + 1, 1);
  for (int i = 1; i <= k; ++i)
    fact[static_cast<size_t>(i)] = fact[static_cast<size_t>(i) - 1] * i;
  std::vector<int> out;
  out.reserve(static_cast<size_t>(k));
  for (int i = k; i >= 1; --i) {
    long long f = fact[static_cast<size_t>(i) - 1];
    long long idx = rank / f;
    rank %= f;
    out.push_back(pool[static_cast<size_t>(idx)]);
    pool.erase(pool.begin() + static_cast<long>(idx));
  }
  return out;
}

// Copy choice for every (edge, rank) pair under candidate index `c`.
std::vector<std::vector<int>> decode_assignment(const CoverLayout& layout,
                                                const CycleCover& cover, long long c,
                                                const std::vector<long long>& radix) {
  std::vector<std::vector<int>> assign(cover.multiplicity.size());
  for (size_t e = 0; e < cover.multiplicity.size(); ++e)
    assign[e] = {0};
  for (size_t s = 0; s < layout.split_edges.size(); ++s) {
    const int e = layout.split_edges[s];
    long long r = c % radix[s];
    c /= radix[s];
    assign[static_cast<size_t>(e)] =
        nth_permutation(cover.multiplicity[static_cast<size_t>(e)], r);
  }
  return assign;
}

struct CandidateCertificate {
  bool ok = false;
  ConsensusCertificate cert;
};

CandidateCertificate evaluate_candidate(const ConstrainedNetwork& net, const CycleCover& cover,
                                        const CoverLayout& layout,
                                        const std::vector<std::vector<int>>& assign,
                                        double interior_tol) {
  std::vector<LinearConstraint> rows = layout.ordering;
  const double eps = 2.0 * interior_tol;  // keep clear of the solver's own slack

  for (const auto& cycle_members : layout.members) {
    for (const auto& [ea, ra] : cycle_members) {
      const PieceBounds& a =
          layout.pieces[static_cast<size_t>(ea)]
                       [static_cast<size_t>(assign[static_cast<size_t>(ea)][static_cast<size_t>(ra)])];
      for (const auto& [eb, rb] : cycle_members) {
        const PieceBounds& b =
            layout.pieces[static_cast<size_t>(eb)]
                         [static_cast<size_t>(assign[static_cast<size_t>(eb)][static_cast<size_t>(rb)])];
        // lower(a) + eps <= upper(b)
        LinearConstraint row;
        row.coeff.assign(static_cast<size_t>(layout.num_vars), 0.0);
        for (const auto& [var, coeff] : b.upper_coeff)
          row.coeff[static_cast<size_t>(var)] -= coeff;
        row.bound = b.upper_const - a.lower - eps;
        rows.push_back(std::move(row));
      }
    }
  }

  FeasibleResult lp = fourier_motzkin_feasible(layout.num_vars, rows);
  if (!lp.feasible) return {};

  CandidateCertificate out;
  out.cert.cover = cover;
  out.cert.copy_assignment = assign;
  const int m = net.graph.edge_count();
  out.cert.breakpoints.resize(static_cast<size_t>(m));
  for (int e = 0; e < m; ++e) {
    const int lo = layout.var_offset[static_cast<size_t>(e)];
    const int hi = layout.var_offset[static_cast<size_t>(e) + 1];
    out.cert.breakpoints[static_cast<size_t>(e)].assign(lp.point.begin() + lo,
                                                        lp.point.begin() + hi);
  }

  double min_width = std::numeric_limits<double>::infinity();
  for (const auto& cycle_members : layout.members) {
    Interval iv{-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
    for (const auto& [e, r] : cycle_members) {
      const SplitPieces pieces = split_pieces(net.constraints[static_cast<size_t>(e)],
                                              out.cert.breakpoints[static_cast<size_t>(e)]);
      const FlowConstraint piece =
          pieces.intervals[static_cast<size_t>(assign[static_cast<size_t>(e)][static_cast<size_t>(r)])];
      iv.lo = std::max(iv.lo, piece.lo);
      iv.hi = std::min(iv.hi, piece.hi);
    }
    out.cert.cycle_intersections.push_back(iv);
    min_width = std::min(min_width, iv.hi - iv.lo);
  }
  out.cert.min_width = layout.members.empty() ? 0.0 : min_width;
  out.ok = verify_certificate(net, out.cert, interior_tol);
  return out;
}

std::vector<std::vector<int>> canonical_cover(const CycleCover& cover) {
  std::vector<std::vector<int>> cycles;
  for (const DirectedCycle& c : cover.cycles) {
    std::vector<int> ids = c.edge_ids;
    auto lowest = std::min_element(ids.begin(), ids.end());
    std::rotate(ids.begin(), lowest, ids.end());
    cycles.push_back(std::move(ids));
  }
  std::sort(cycles.begin(), cycles.end());
  return cycles;
}

}  // namespace

bool verify_certificate(const ConstrainedNetwork& net, const ConsensusCertificate& cert,
                        double interior_tol) {
  const int m = net.graph.edge_count();
  if (static_cast<int>(cert.breakpoints.size()) != m) return false;
  if (static_cast<int>(cert.copy_assignment.size()) != m) return false;
  if (static_cast<int>(cert.cover.multiplicity.size()) != m) return false;

  std::vector<int> mult;
  try {
    mult = cover_multiplicity(net.graph, cert.cover.cycles);
  } catch (const std::exception&) {
    return false;
  }
  for (int e = 0; e < m; ++e) {
    if (mult[static_cast<size_t>(e)] != cert.cover.multiplicity[static_cast<size_t>(e)])
      return false;
    if (mult[static_cast<size_t>(e)] < 1) return false;
  }

  std::vector<SplitPieces> pieces(static_cast<size_t>(m));
  for (int e = 0; e < m; ++e) {
    const int t = mult[static_cast<size_t>(e)];
    const auto& bp = cert.breakpoints[static_cast<size_t>(e)];
    if (static_cast<int>(bp.size()) != t - 1) return false;
    const auto& assign = cert.copy_assignment[static_cast<size_t>(e)];
    if (static_cast<int>(assign.size()) != t) return false;
    std::vector<int> sorted = assign;
    std::sort(sorted.begin(), sorted.end());
    for (int j = 0; j < t; ++j)
      if (sorted[static_cast<size_t>(j)] != j) return false;  // not a bijection
    try {
      pieces[static_cast<size_t>(e)] = split_pieces(net.constraints[static_cast<size_t>(e)], bp);
    } catch (const std::exception&) {
      return false;
    }
  }

  if (cert.cycle_intersections.size() != cert.cover.cycles.size()) return false;

  std::vector<int> seen(static_cast<size_t>(m), 0);
  double min_width = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < cert.cover.cycles.size(); ++i) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int e : cert.cover.cycles[i].edge_ids) {
      const int rank = seen[static_cast<size_t>(e)]++;
      const int copy = cert.copy_assignment[static_cast<size_t>(e)][static_cast<size_t>(rank)];
      const FlowConstraint& piece = pieces[static_cast<size_t>(e)].intervals[static_cast<size_t>(copy)];
      lo = std::max(lo, piece.lo);
      hi = std::min(hi, piece.hi);
    }
    if (hi - lo < interior_tol) return false;
    const Interval& recorded = cert.cycle_intersections[i];
    if (std::abs(recorded.lo - lo) > 1e-9 || std::abs(recorded.hi - hi) > 1e-9) return false;
    min_width = std::min(min_width, hi - lo);
  }
  if (!cert.cover.cycles.empty() && std::abs(cert.min_width - min_width) > 1e-9) return false;
  return true;
}

CertifyResult certify_consensus(const ConstrainedNetwork& net, const CertifyOptions& opts) {
  if (!net.compatible())
    throw IncompatibleOrientationError(
        "certificate search requires a normalized network (lo >= 0, hi > 0)");

  CertifyResult result;
  if (!is_strongly_connected(net.graph)) {
    result.status = CertifyStatus::NotStronglyConnected;
    return result;
  }
  if (net.graph.edge_count() == 0) {
    // Single vertex: nothing to balance.
    result.status = CertifyStatus::Certified;
    result.certificate = ConsensusCertificate{};
    result.covers_tried = 1;
    return result;
  }

  std::vector<CycleCover> covers;
  std::vector<std::vector<std::vector<int>>> seen;
  for (int rot = 0; rot < std::max(opts.max_covers, 1); ++rot) {
    CycleCover cover = minimal_cover(net.graph, rot);
    auto canon = canonical_cover(cover);
    if (std::find(seen.begin(), seen.end(), canon) != seen.end()) continue;
    seen.push_back(std::move(canon));
    covers.push_back(std::move(cover));
  }

  for (const CycleCover& cover : covers) {
    ++result.covers_tried;
    CoverLayout layout = layout_cover(net, cover);

    std::vector<long long> radix(layout.split_edges.size(), 1);
    long long total = 1;
    const long long cap = std::numeric_limits<long long>::max() / 4;
    for (size_t s = 0; s < layout.split_edges.size(); ++s) {
      radix[s] = saturating_factorial(
          cover.multiplicity[static_cast<size_t>(layout.split_edges[s])], cap);
      total = total > cap / radix[s] ? cap : total * radix[s];
    }
    const long long budget =
        std::max<long long>(0, opts.max_assignments - result.assignments_tried);
    const long long to_try = std::min(total, budget);

    std::optional<ConsensusCertificate> winner;
    const long long block = 64;
    for (long long base = 0; base < to_try && !winner; base += block) {
      const long long end = std::min(base + block, to_try);
      std::vector<CandidateCertificate> outcomes(static_cast<size_t>(end - base));
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
      for (long long c = base; c < end; ++c) {
        auto assign = decode_assignment(layout, cover, c, radix);
        outcomes[static_cast<size_t>(c - base)] =
            evaluate_candidate(net, cover, layout, assign, opts.interior_tol);
      }
      for (long long c = base; c < end; ++c) {
        result.assignments_tried += 1;
        if (outcomes[static_cast<size_t>(c - base)].ok) {
          winner = std::move(outcomes[static_cast<size_t>(c - base)].cert);
          break;
        }
      }
    }

    if (winner) {
      result.status = CertifyStatus::Certified;
      result.certificate = std::move(winner);
      return result;
    }
  }

  result.status = CertifyStatus::NoSplittingFound;
  return result;
}

namespace {

// True when the graph is exactly one directed cycle.
bool is_single_cycle(const DirectedGraph& graph) {
  const int n = graph.vertex_count();
  if (n < 2 || graph.edge_count() != n) return false;
  for (int v = 0; v < n; ++v)
    if (graph.out_edges(v).size() != 1 || graph.in_edges(v).size() != 1) return false;
  return is_strongly_connected(graph);
}

StaticReport analyze_unconstrained(const NetworkSystem& sys) {
  StaticReport report;
  report.weak = weak_connectivity(sys.graph);
  report.strongly_connected = is_strongly_connected(sys.graph);

  MatchResult match = check_matching(sys.terminals, sys.disturbance, sys.graph);
  report.matching_state = match.controller_state;

  if (match.matchable) {
    if (report.weak.connected) {
      report.verdict = StaticReport::Verdict::Consensus;
      report.exact = true;
      report.detail =
          "weakly connected with matched inflow: the proportional-integral loop "
          "drives all marginal storage levels together";
    } else {
      report.verdict = StaticReport::Verdict::SteadyStateNoConsensus;
      report.exact = true;
      report.detail = "inflow matched per component, but " +
                      std::to_string(report.weak.component_count) +
                      " disconnected components settle to independent levels";
    }
    return report;
  }

  // Unmatched inflow: some component's total storage drifts linearly.
  report.verdict = StaticReport::Verdict::Unstable;
  report.exact = true;
  report.detail = "external inflow cannot be carried by any constant edge flow "
                  "(residual " +
                  fmt_g(match.residual) + "); total storage drifts without bound";
  return report;
}

}  // namespace

StaticReport analyze_network(const NetworkSystem& sys, const CertifyOptions& opts) {
  sys.validate();
  if (sys.mode == ControlMode::Unconstrained) return analyze_unconstrained(sys);

  StaticReport report;
  ConstrainedNetwork net = sys.network();

  std::vector<double> inflow = sys.external_inflow();
  bool has_inflow = false;
  for (double b : inflow) has_inflow = has_inflow || b != 0.0;
  if (has_inflow) {
    AbsorbResult absorbed = absorb_disturbance(net, sys.terminals, sys.disturbance);
    report.matching_state = absorbed.matching_state;
    net = std::move(absorbed.network);
  }

  TransformResult normalized = normalize_orientation(net);
  report.normalized = normalized.network;
  report.mapping = normalized.mapping;
  const ConstrainedNetwork& work = *report.normalized;

  report.weak = weak_connectivity(work.graph);
  report.strongly_connected = is_strongly_connected(work.graph);

  if (!report.strongly_connected) {
    std::vector<int> scc = strongly_connected_components(work.graph);
    for (int e = 0; e < work.graph.edge_count(); ++e) {
      const Edge& ed = work.graph.edge(e);
      if (scc[static_cast<size_t>(ed.tail)] == scc[static_cast<size_t>(ed.head)]) continue;
      if (work.constraints[static_cast<size_t>(e)].lo > 0.0) {
        report.verdict = StaticReport::Verdict::Unstable;
        report.exact = true;
        report.detail = "edge " + std::to_string(e) +
                        " leaves its strongly connected component with flow pinned at or above " +
                        fmt_g(work.constraints[static_cast<size_t>(e)].lo) +
                        "; the upstream side drains without bound";
        return report;
      }
    }
    report.verdict = StaticReport::Verdict::SteadyStateNoConsensus;
    report.detail = "graph is not strongly connected; every cross-component flow can vanish, "
                    "so an equilibrium without consensus is possible";
    return report;
  }

  if (is_single_cycle(work.graph)) {
    std::vector<DirectedCycle> cycles = decompose_balanced(work.graph);
    CycleVerdict verdict = analyze_cycle(work, cycles.front(), opts.interior_tol);
    report.cycle_verdict = verdict;
    report.exact = true;
    report.detail = "single-cycle graph: interval intersection [" + fmt_g(verdict.lo) + ", " +
                    fmt_g(verdict.hi) + "]";
    if (verdict.boundary) report.detail += " (interior thinner than tolerance)";
    switch (verdict.classification) {
      case CycleClass::Consensus:
        report.verdict = StaticReport::Verdict::Consensus;
        break;
      case CycleClass::Clustering:
        report.verdict = StaticReport::Verdict::Clustering;
        break;
      case CycleClass::Unstable:
        report.verdict = StaticReport::Verdict::Unstable;
        break;
    }
    return report;
  }

  CertifyResult certified = certify_consensus(work, opts);
  report.covers_tried = certified.covers_tried;
  report.assignments_tried = certified.assignments_tried;
  if (certified.status == CertifyStatus::Certified) {
    report.verdict = StaticReport::Verdict::CertifiedConsensus;
    report.certificate = certified.certificate;
    report.detail = "splitting certificate found: every cycle of the cover keeps an interval "
                    "intersection of width at least " +
                    fmt_g(opts.interior_tol);
  } else {
    report.verdict = StaticReport::Verdict::Inconclusive;
    report.detail = "no splitting certificate within the search budget (" +
                    std::to_string(certified.covers_tried) + " covers, " +
                    std::to_string(certified.assignments_tried) +
                    " assignments); the criterion is sufficient only, so instability does not "
                    "follow";
  }
  return report;
}

const char* verdict_name(StaticReport::Verdict v) {
  switch (v) {
    case StaticReport::Verdict::Consensus:
      return "consensus";
    case StaticReport::Verdict::Clustering:
      return "clustering";
    case StaticReport::Verdict::Unstable:
      return "unstable";
    case StaticReport::Verdict::CertifiedConsensus:
      return "certified-consensus";
    case StaticReport::Verdict::SteadyStateNoConsensus:
      return "steady-state-no-consensus";
    case StaticReport::Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

const char* cycle_class_name(CycleClass c) {
  switch (c) {
    case CycleClass::Consensus:
      return "consensus";
    case CycleClass::Clustering:
      return "clustering";
    case CycleClass::Unstable:
      return "unstable";
  }
  return "unstable";
}

}  // namespace flownet
