#pragma once

#include <span>

#include "flownet/constraint.hpp"
#include "flownet/graph.hpp"

// Data-parallel building blocks of the closed-loop vector field. Every kernel
// has a serial reference path and an OpenMP path selected at runtime; both use
// the same per-element evaluation order, so the vector kernels agree bitwise.
namespace flownet::kernels {

enum class Backend { Serial, OpenMP };

// Reported at runtime so callers can tell whether OpenMP was compiled in.
bool openmp_enabled();
int max_threads();

// tension[e] = grad[head(e)] - grad[tail(e)]
void edge_tension(const DirectedGraph& graph, std::span<const double> vertex_grad,
                  std::span<double> tension, Backend backend);

// flow[e] = clamp(-tension[e] - xc[e]) into [lo, hi]
void saturated_flow(std::span<const double> tension, std::span<const double> xc,
                    std::span<const FlowConstraint> constraints, std::span<double> flow,
                    Backend backend);

// flow[e] = -gain[e] * tension[e] - xc[e]; empty gain means unit gains.
void proportional_flow(std::span<const double> tension, std::span<const double> xc,
                       std::span<const double> gain, std::span<double> flow, Backend backend);

// xdot[v] = sum(in flows) - sum(out flows) + inflow[v]; empty inflow means 0.
// Per-vertex gather in ascending edge order, so results match the serial path
// exactly under OpenMP.
void divergence(const DirectedGraph& graph, std::span<const double> flow,
                std::span<const double> inflow, std::span<double> xdot, Backend backend);

// sum_e sat_antiderivative(w[e], constraints[e]). The OpenMP path reduces in
// unspecified order; agreement with serial is up to rounding.
double saturation_energy(std::span<const double> w, std::span<const FlowConstraint> constraints,
                         Backend backend);

}  // namespace flownet::kernels
