#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flownet/cycle.hpp"
#include "flownet/dynamics.hpp"

namespace flownet {

enum class CycleClass { Consensus, Clustering, Unstable };

struct CycleVerdict {
  CycleClass classification = CycleClass::Unstable;
  double lo = 0.0;        // intersection of the member intervals
  double hi = 0.0;
  bool boundary = false;  // nonempty interior thinner than the tolerance
};

// Exact trichotomy for a single directed cycle with compatible intervals:
// the flows reach consensus iff the intervals share interior points, cluster
// iff they share exactly one point, and diverge iff they share none.
CycleVerdict analyze_cycle(const ConstrainedNetwork& net, const DirectedCycle& cycle,
                           double interior_tol = 1e-9);

struct MatchResult {
  bool conservation_ok = false;        // terminal flows cancel in total
  bool matchable = false;              // inflow lies in the incidence range
  std::vector<double> controller_state;  // minimum-norm matching state
  double residual = 0.0;
};

MatchResult check_matching(const TerminalPattern& terminals, const std::vector<double>& dbar,
                           const DirectedGraph& graph);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Witness that every cycle of the cover can be handed its own slice of every
// shared edge so that all per-cycle interval intersections keep interior.
struct ConsensusCertificate {
  CycleCover cover;
  std::vector<std::vector<double>> breakpoints;   // per edge, multiplicity-1 values
  std::vector<std::vector<int>> copy_assignment;  // per edge: r-th cycle -> copy index
  std::vector<Interval> cycle_intersections;
  double min_width = 0.0;
};

bool verify_certificate(const ConstrainedNetwork& net, const ConsensusCertificate& cert,
                        double interior_tol = 1e-9);

struct CertifyOptions {
  double interior_tol = 1e-9;
  int max_covers = 6;        // alternative minimal covers explored
  long long max_assignments = 100000;
  bool parallel = true;      // evaluate candidate assignments with OpenMP
};

enum class CertifyStatus { Certified, NotStronglyConnected, NoSplittingFound };

struct CertifyResult {
  CertifyStatus status = CertifyStatus::NoSplittingFound;
  std::optional<ConsensusCertificate> certificate;
  int covers_tried = 0;
  long long assignments_tried = 0;
};

// Search minimal covers and copy assignments for a feasible splitting. The
// search is sufficient only: failure yields NoSplittingFound, never an
// instability claim. Candidates are evaluated in parallel but the lowest
// feasible candidate index always wins.
CertifyResult certify_consensus(const ConstrainedNetwork& net, const CertifyOptions& opts = {});

struct StaticReport {
  enum class Verdict {
    Consensus,            // exact, single-cycle graphs
    Clustering,           // exact, single-cycle graphs
    Unstable,             // exact: empty cycle intersection or pinned drain
    CertifiedConsensus,   // proven by a splitting certificate
    SteadyStateNoConsensus,  // equilibrium without consensus possible
    Inconclusive
  };

  Verdict verdict = Verdict::Inconclusive;
  bool exact = false;  // verdict from a complete characterization
  std::string detail;

  Connectivity weak;
  bool strongly_connected = false;
  std::vector<double> matching_state;  // absorbed controller offset, empty if none
  std::optional<ConstrainedNetwork> normalized;
  std::optional<EdgeMapping> mapping;
  std::optional<CycleVerdict> cycle_verdict;
  std::optional<ConsensusCertificate> certificate;
  int covers_tried = 0;
  long long assignments_tried = 0;
};

// Static pipeline: absorb terminal flows, normalize orientation, check
// connectivity, then either the exact cycle trichotomy or the certificate
// search. Throws NoMatchingError when the disturbance cannot be absorbed.
StaticReport analyze_network(const NetworkSystem& sys, const CertifyOptions& opts = {});

const char* verdict_name(StaticReport::Verdict v);
const char* cycle_class_name(CycleClass c);

}  // namespace flownet
