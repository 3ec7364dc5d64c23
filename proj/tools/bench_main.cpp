#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flownet/dynamics.hpp"
#include "flownet/kernels.hpp"

namespace {

using flownet::kernels::Backend;

// Ring with chords: strongly connected, average degree ~3.
flownet::DirectedGraph ring_with_chords(int n, std::uint64_t seed) {
  std::vector<flownet::Edge> edges;
  edges.reserve(static_cast<size_t>(n) + static_cast<size_t>(n) / 2);
  for (int v = 0; v < n; ++v) edges.push_back({v, (v + 1) % n});
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int k = 0; k < n / 2; ++k) {
    int a = pick(rng);
    int b = pick(rng);
    if (a != b) edges.push_back({a, b});
  }
  return flownet::DirectedGraph(n, std::move(edges));
}

double time_ms(const std::function<void()>& fn, int iters) {
  fn();  // warm up
  double best = 1e300;
  for (int rep = 0; rep < 3; ++rep) {
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count() / iters);
  }
  return best;
}

void print_row(const std::string& name, int n, int m, double serial_ms, double omp_ms,
               const std::string& agree) {
  std::printf("%-18s %9d %9d %11.3f %11.3f %8.2fx   %s\n", name.c_str(), n, m, serial_ms,
              omp_ms, omp_ms > 0 ? serial_ms / omp_ms : 0.0, agree.c_str());
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel comparison"};
  int n = 1 << 17;
  int iters = 20;
  int batch = 16;
  app.add_option("--vertices", n, "graph size")->check(CLI::PositiveNumber);
  app.add_option("--iters", iters, "iterations per measurement")->check(CLI::PositiveNumber);
  app.add_option("--batch", batch, "trajectories in the batch benchmark")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::printf("OpenMP: %s (%d threads)\n", flownet::kernels::openmp_enabled() ? "on" : "off",
              flownet::kernels::max_threads());

  flownet::DirectedGraph graph = ring_with_chords(n, 42);
  const int m = graph.edge_count();

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> x(static_cast<size_t>(n));
  for (double& v : x) v = uni(rng);
  std::vector<double> xc(static_cast<size_t>(m));
  for (double& v : xc) v = uni(rng);
  std::vector<flownet::FlowConstraint> constraints(static_cast<size_t>(m));
  for (auto& c : constraints) {
    double lo = 0.2 + 0.3 * (uni(rng) + 1.0);
    c = {lo, lo + 0.5 + 0.5 * (uni(rng) + 1.0)};
  }

  std::printf("%-18s %9s %9s %11s %11s %9s   %s\n", "kernel", "n", "m", "serial_ms",
              "openmp_ms", "speedup", "agreement");

  std::vector<double> grad(static_cast<size_t>(n)), tension_s(static_cast<size_t>(m)),
      tension_p(static_cast<size_t>(m)), flow_s(static_cast<size_t>(m)),
      flow_p(static_cast<size_t>(m)), div_s(static_cast<size_t>(n)),
      div_p(static_cast<size_t>(n));
  for (size_t i = 0; i < grad.size(); ++i) grad[i] = x[i];

  double ts = time_ms(
      [&] { flownet::kernels::edge_tension(graph, grad, tension_s, Backend::Serial); }, iters);
  double tp = time_ms(
      [&] { flownet::kernels::edge_tension(graph, grad, tension_p, Backend::OpenMP); }, iters);
  print_row("edge_tension", n, m, ts, tp, bitwise_equal(tension_s, tension_p) ? "bitwise" : "DIFF");

  ts = time_ms(
      [&] {
        flownet::kernels::saturated_flow(tension_s, xc, constraints, flow_s, Backend::Serial);
      },
      iters);
  tp = time_ms(
      [&] {
        flownet::kernels::saturated_flow(tension_s, xc, constraints, flow_p, Backend::OpenMP);
      },
      iters);
  print_row("saturated_flow", n, m, ts, tp, bitwise_equal(flow_s, flow_p) ? "bitwise" : "DIFF");

  ts = time_ms(
      [&] { flownet::kernels::divergence(graph, flow_s, {}, div_s, Backend::Serial); }, iters);
  tp = time_ms(
      [&] { flownet::kernels::divergence(graph, flow_s, {}, div_p, Backend::OpenMP); }, iters);
  print_row("divergence", n, m, ts, tp, bitwise_equal(div_s, div_p) ? "bitwise" : "DIFF");

  double energy_s = 0.0, energy_p = 0.0;
  ts = time_ms(
      [&] {
        energy_s = flownet::kernels::saturation_energy(tension_s, constraints, Backend::Serial);
      },
      iters);
  tp = time_ms(
      [&] {
        energy_p = flownet::kernels::saturation_energy(tension_s, constraints, Backend::OpenMP);
      },
      iters);
  const double energy_err =
      std::abs(energy_s - energy_p) / (1.0 + std::abs(energy_s));
  char energy_desc[64];
  std::snprintf(energy_desc, sizeof energy_desc, "rel_err=%.2e", energy_err);
  print_row("saturation_energy", n, m, ts, tp, energy_desc);

  // Whole right-hand side via a short integration on a smaller graph.
  const int sim_n = std::max(n / 8, 64);
  flownet::DirectedGraph sim_graph = ring_with_chords(sim_n, 43);
  std::vector<flownet::FlowConstraint> sim_constraints(
      static_cast<size_t>(sim_graph.edge_count()));
  for (auto& c : sim_constraints) {
    double lo = 0.2 + 0.3 * (uni(rng) + 1.0);
    c = {lo, lo + 0.5 + 0.5 * (uni(rng) + 1.0)};
  }
  flownet::NetworkSystem sys = flownet::make_constrained_system(
      flownet::ConstrainedNetwork(sim_graph, sim_constraints),
      flownet::Hamiltonian::quadratic_identity(sim_n));
  flownet::NetworkState init;
  init.x.resize(static_cast<size_t>(sim_n));
  for (double& v : init.x) v = uni(rng);
  init.xc.assign(static_cast<size_t>(sim_graph.edge_count()), 0.0);

  flownet::SimOptions sopts;
  sopts.horizon = 0.05;
  sopts.step = 1e-3;
  sopts.record_stride = 1000;

  sopts.backend = Backend::Serial;
  ts = time_ms([&] { flownet::simulate(sys, init, sopts); }, std::max(iters / 4, 1));
  sopts.backend = Backend::OpenMP;
  tp = time_ms([&] { flownet::simulate(sys, init, sopts); }, std::max(iters / 4, 1));
  flownet::SimOptions check = sopts;
  check.backend = Backend::Serial;
  flownet::Trajectory traj_s = flownet::simulate(sys, init, check);
  check.backend = Backend::OpenMP;
  flownet::Trajectory traj_p = flownet::simulate(sys, init, check);
  print_row("rhs_integration", sim_n, sim_graph.edge_count(), ts, tp,
            bitwise_equal(traj_s.x.back(), traj_p.x.back()) ? "bitwise" : "DIFF");

  // Batch parallelism across independent trajectories.
  std::vector<flownet::NetworkState> initials(static_cast<size_t>(batch), init);
  for (auto& state : initials)
    for (double& v : state.x) v = uni(rng);
  sopts.backend = Backend::Serial;
  flownet::SimOptions batch_opts = sopts;
  batch_opts.backend = Backend::Serial;
  auto t0 = std::chrono::steady_clock::now();
  for (const auto& state : initials) flownet::simulate(sys, state, batch_opts);
  auto t1 = std::chrono::steady_clock::now();
  ts = std::chrono::duration<double, std::milli>(t1 - t0).count();
  t0 = std::chrono::steady_clock::now();
  flownet::simulate_batch(sys, initials, batch_opts);
  t1 = std::chrono::steady_clock::now();
  tp = std::chrono::duration<double, std::milli>(t1 - t0).count();
  print_row("batch_simulate", sim_n, sim_graph.edge_count(), ts, tp, "independent runs");

  return 0;
}
