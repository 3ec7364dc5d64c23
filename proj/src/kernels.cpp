#include "flownet/kernels.hpp"

#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace flownet::kernels {

bool openmp_enabled() {
#if defined(_OPENMP)
  return true;
#else
  return false;
#endif
}

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void edge_tension(const DirectedGraph& graph, std::span<const double> vertex_grad,
                  std::span<double> tension, Backend backend) {
  const int m = graph.edge_count();
  if (static_cast<int>(vertex_grad.size()) != graph.vertex_count() ||
      static_cast<int>(tension.size()) != m)
    throw std::invalid_argument("edge_tension: size mismatch");
  if (backend == Backend::OpenMP) {
#pragma omp parallel for schedule(static)
    for (int e = 0; e < m; ++e) {
      const Edge& ed = graph.edge(e);
      tension[static_cast<size_t>(e)] = vertex_grad[static_cast<size_t>(ed.head)] -
                                        vertex_grad[static_cast<size_t>(ed.tail)];
    }
  } else {
    for (int e = 0; e < m; ++e) {
      const Edge& ed = graph.edge(e);
      tension[static_cast<size_t>(e)] = vertex_grad[static_cast<size_t>(ed.head)] -
                                        vertex_grad[static_cast<size_t>(ed.tail)];
    }
  }
}

void saturated_flow(std::span<const double> tension, std::span<const double> xc,
                    std::span<const FlowConstraint> constraints, std::span<double> flow,
                    Backend backend) {
  const size_t m = tension.size();
  if (xc.size() != m || constraints.size() != m || flow.size() != m)
    throw std::invalid_argument("saturated_flow: size mismatch");
  if (backend == Backend::OpenMP) {
#pragma omp parallel for schedule(static)
    for (long long e = 0; e < static_cast<long long>(m); ++e)
      flow[static_cast<size_t>(e)] = saturate(-tension[static_cast<size_t>(e)] -
                                              xc[static_cast<size_t>(e)],
                                              constraints[static_cast<size_t>(e)]);
  } else {
    for (size_t e = 0; e < m; ++e) flow[e] = saturate(-tension[e] - xc[e], constraints[e]);
  }
}

void proportional_flow(std::span<const double> tension, std::span<const double> xc,
                       std::span<const double> gain, std::span<double> flow, Backend backend) {
  const size_t m = tension.size();
  if (xc.size() != m || flow.size() != m || (!gain.empty() && gain.size() != m))
    throw std::invalid_argument("proportional_flow: size mismatch");
  auto at = [&gain](size_t e) { return gain.empty() ? 1.0 : gain[e]; };
  if (backend == Backend::OpenMP) {
#pragma omp parallel for schedule(static)
    for (long long e = 0; e < static_cast<long long>(m); ++e)
      flow[static_cast<size_t>(e)] = -at(static_cast<size_t>(e)) * tension[static_cast<size_t>(e)] -
                                     xc[static_cast<size_t>(e)];
  } else {
    for (size_t e = 0; e < m; ++e) flow[e] = -at(e) * tension[e] - xc[e];
  }
}

namespace {

inline double gather_divergence(const DirectedGraph& graph, std::span<const double> flow,
                                std::span<const double> inflow, int v) {
  double acc = inflow.empty() ? 0.0 : inflow[static_cast<size_t>(v)];
  for (int e : graph.in_edges(v)) acc += flow[static_cast<size_t>(e)];
  for (int e : graph.out_edges(v)) acc -= flow[static_cast<size_t>(e)];
  return acc;
}

}  // namespace

void divergence(const DirectedGraph& graph, std::span<const double> flow,
                std::span<const double> inflow, std::span<double> xdot, Backend backend) {
  const int n = graph.vertex_count();
  if (static_cast<int>(flow.size()) != graph.edge_count() ||
      static_cast<int>(xdot.size()) != n ||
      (!inflow.empty() && static_cast<int>(inflow.size()) != n))
    throw std::invalid_argument("divergence: size mismatch");
  if (backend == Backend::OpenMP) {
#pragma omp parallel for schedule(static)
    for (int v = 0; v < n; ++v)
      xdot[static_cast<size_t>(v)] = gather_divergence(graph, flow, inflow, v);
  } else {
    for (int v = 0; v < n; ++v)
      xdot[static_cast<size_t>(v)] = gather_divergence(graph, flow, inflow, v);
  }
}

double saturation_energy(std::span<const double> w, std::span<const FlowConstraint> constraints,
                         Backend backend) {
  if (w.size() != constraints.size())
    throw std::invalid_argument("saturation_energy: size mismatch");
  double sum = 0.0;
  if (backend == Backend::OpenMP) {
#pragma omp parallel for schedule(static) reduction(+ : sum)
    for (long long e = 0; e < static_cast<long long>(w.size()); ++e)
      sum += sat_antiderivative(w[static_cast<size_t>(e)], constraints[static_cast<size_t>(e)]);
  } else {
    for (size_t e = 0; e < w.size(); ++e) sum += sat_antiderivative(w[e], constraints[e]);
  }
  return sum;
}

}  // namespace flownet::kernels
