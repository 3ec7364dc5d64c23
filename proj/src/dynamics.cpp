#include "flownet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flownet/errors.hpp"

namespace flownet {

Hamiltonian Hamiltonian::quadratic(std::vector<double> weights) {
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("quadratic weights must be positive");
  Hamiltonian h;
  h.quad_ = true;
  h.weights_ = std::move(weights);
  return h;
}

Hamiltonian Hamiltonian::quadratic_identity(int n) {
  return quadratic(std::vector<double>(static_cast<size_t>(n), 1.0));
}

Hamiltonian Hamiltonian::custom(std::vector<Potential> per_vertex, std::string label) {
  for (const Potential& p : per_vertex)
    if (!p.value || !p.grad) throw std::invalid_argument("custom potential missing callables");
  Hamiltonian h;
  h.quad_ = false;
  h.potentials_ = std::move(per_vertex);
  h.label_ = std::move(label);
  return h;
}

int Hamiltonian::size() const {
  return quad_ ? static_cast<int>(weights_.size()) : static_cast<int>(potentials_.size());
}

double Hamiltonian::value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != size())
    throw std::invalid_argument("hamiltonian value: size mismatch");
  double sum = 0.0;
  if (quad_) {
    for (size_t i = 0; i < x.size(); ++i) sum += 0.5 * weights_[i] * x[i] * x[i];
  } else {
    for (size_t i = 0; i < x.size(); ++i) sum += potentials_[i].value(x[i]);
  }
  return sum;
}

double Hamiltonian::grad_component(int i, double xi) const {
  return quad_ ? weights_[static_cast<size_t>(i)] * xi
               : potentials_[static_cast<size_t>(i)].grad(xi);
}

void Hamiltonian::gradient(std::span<const double> x, std::span<double> out,
                           kernels::Backend backend) const {
  if (static_cast<int>(x.size()) != size() || out.size() != x.size())
    throw std::invalid_argument("hamiltonian gradient: size mismatch");
  const long long n = static_cast<long long>(x.size());
  if (backend == kernels::Backend::OpenMP) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i)
      out[static_cast<size_t>(i)] = grad_component(static_cast<int>(i), x[static_cast<size_t>(i)]);
  } else {
    for (long long i = 0; i < n; ++i)
      out[static_cast<size_t>(i)] = grad_component(static_cast<int>(i), x[static_cast<size_t>(i)]);
  }
}

double Hamiltonian::invert_gradient(int i, double level) const {
  if (quad_) return level / weights_[static_cast<size_t>(i)];
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 200 && grad_component(i, lo) > level; ++it) lo *= 2.0;
  for (int it = 0; it < 200 && grad_component(i, hi) < level; ++it) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (grad_component(i, mid) < level)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

void NetworkSystem::validate() const {
  const int n = graph.vertex_count();
  const int m = graph.edge_count();
  if (hamiltonian.size() != n)
    throw std::invalid_argument("hamiltonian covers " + std::to_string(hamiltonian.size()) +
                                " vertices, graph has " + std::to_string(n));
  if (mode == ControlMode::Constrained) {
    if (static_cast<int>(constraints.size()) != m)
      throw std::invalid_argument("constrained mode needs one flow interval per edge");
    for (const FlowConstraint& c : constraints) validate_constraint(c);
    if (!gain.empty())
      throw std::invalid_argument("constrained mode fixes unit gains; drop the gain vector");
  } else {
    if (!constraints.empty())
      throw std::invalid_argument("unconstrained mode takes no flow intervals");
    if (!gain.empty() && static_cast<int>(gain.size()) != m)
      throw std::invalid_argument("gain vector length mismatch");
    for (double r : gain)
      if (!(r > 0.0)) throw std::invalid_argument("gains must be positive");
  }
  if (static_cast<int>(disturbance.size()) != terminals.terminal_count())
    throw std::invalid_argument("one terminal flow per terminal required");
  for (const TerminalColumn& c : terminals.columns())
    if (c.vertex >= n) throw std::invalid_argument("terminal references a missing vertex");
}

std::vector<double> NetworkSystem::external_inflow() const {
  if (terminals.empty()) return {};
  return terminals.apply(disturbance, graph.vertex_count());
}

ConstrainedNetwork NetworkSystem::network() const {
  if (mode != ControlMode::Constrained)
    throw std::logic_error("network(): system is unconstrained");
  return ConstrainedNetwork(graph, constraints);
}

NetworkSystem make_constrained_system(ConstrainedNetwork net, Hamiltonian h,
                                      TerminalPattern terminals, std::vector<double> dbar) {
  NetworkSystem sys;
  sys.mode = ControlMode::Constrained;
  sys.graph = std::move(net.graph);
  sys.constraints = std::move(net.constraints);
  sys.hamiltonian = std::move(h);
  sys.terminals = std::move(terminals);
  sys.disturbance = std::move(dbar);
  sys.validate();
  return sys;
}

NetworkSystem make_unconstrained_system(DirectedGraph g, Hamiltonian h, std::vector<double> gain,
                                        TerminalPattern terminals, std::vector<double> dbar) {
  NetworkSystem sys;
  sys.mode = ControlMode::Unconstrained;
  sys.graph = std::move(g);
  sys.hamiltonian = std::move(h);
  sys.gain = std::move(gain);
  sys.terminals = std::move(terminals);
  sys.disturbance = std::move(dbar);
  sys.validate();
  return sys;
}

namespace {

struct Workspace {
  std::vector<double> grad;
  std::vector<double> tension;
  std::vector<double> flow;
  std::vector<double> inflow;

  Workspace(const NetworkSystem& sys)
      : grad(static_cast<size_t>(sys.graph.vertex_count())),
        tension(static_cast<size_t>(sys.graph.edge_count())),
        flow(static_cast<size_t>(sys.graph.edge_count())),
        inflow(sys.external_inflow()) {}
};

// z packs (x, xc); dz receives the closed-loop derivative.
void eval_rhs(const NetworkSystem& sys, std::span<const double> z, std::span<double> dz,
              Workspace& w, kernels::Backend backend) {
  const size_t n = static_cast<size_t>(sys.graph.vertex_count());
  const size_t m = static_cast<size_t>(sys.graph.edge_count());
  std::span<const double> x = z.first(n);
  std::span<const double> xc = z.subspan(n, m);

  sys.hamiltonian.gradient(x, w.grad, backend);
  kernels::edge_tension(sys.graph, w.grad, w.tension, backend);
  if (sys.mode == ControlMode::Constrained)
    kernels::saturated_flow(w.tension, xc, sys.constraints, w.flow, backend);
  else
    kernels::proportional_flow(w.tension, xc, sys.gain, w.flow, backend);
  kernels::divergence(sys.graph, w.flow, w.inflow, dz.first(n), backend);
  std::copy(w.tension.begin(), w.tension.end(), dz.begin() + static_cast<long>(n));
}

}  // namespace

void rhs_constrained(const NetworkSystem& sys, const NetworkState& state, NetworkState& out) {
  if (sys.mode != ControlMode::Constrained)
    throw std::logic_error("rhs_constrained on an unconstrained system");
  sys.validate();
  Workspace w(sys);
  std::vector<double> z(state.x);
  z.insert(z.end(), state.xc.begin(), state.xc.end());
  std::vector<double> dz(z.size());
  eval_rhs(sys, z, dz, w, kernels::Backend::Serial);
  out.x.assign(dz.begin(), dz.begin() + sys.graph.vertex_count());
  out.xc.assign(dz.begin() + sys.graph.vertex_count(), dz.end());
}

void rhs_unconstrained(const NetworkSystem& sys, const NetworkState& state, NetworkState& out) {
  if (sys.mode != ControlMode::Unconstrained)
    throw std::logic_error("rhs_unconstrained on a constrained system");
  sys.validate();
  Workspace w(sys);
  std::vector<double> z(state.x);
  z.insert(z.end(), state.xc.begin(), state.xc.end());
  std::vector<double> dz(z.size());
  eval_rhs(sys, z, dz, w, kernels::Backend::Serial);
  out.x.assign(dz.begin(), dz.begin() + sys.graph.vertex_count());
  out.xc.assign(dz.begin() + sys.graph.vertex_count(), dz.end());
}

std::vector<double> flows(const NetworkSystem& sys, const NetworkState& state) {
  Workspace w(sys);
  sys.hamiltonian.gradient(state.x, w.grad, kernels::Backend::Serial);
  kernels::edge_tension(sys.graph, w.grad, w.tension, kernels::Backend::Serial);
  if (sys.mode == ControlMode::Constrained)
    kernels::saturated_flow(w.tension, state.xc, sys.constraints, w.flow,
                            kernels::Backend::Serial);
  else
    kernels::proportional_flow(w.tension, state.xc, sys.gain, w.flow, kernels::Backend::Serial);
  return w.flow;
}

double lyapunov_sat(const NetworkSystem& sys, const NetworkState& state) {
  if (sys.mode != ControlMode::Constrained)
    throw std::logic_error("lyapunov_sat on an unconstrained system");
  Workspace w(sys);
  sys.hamiltonian.gradient(state.x, w.grad, kernels::Backend::Serial);
  kernels::edge_tension(sys.graph, w.grad, w.tension, kernels::Backend::Serial);
  std::vector<double> arg(w.tension.size());
  for (size_t e = 0; e < arg.size(); ++e) arg[e] = -w.tension[e] - state.xc[e];
  return kernels::saturation_energy(arg, sys.constraints, kernels::Backend::Serial) +
         sys.hamiltonian.value(state.x);
}

double lyapunov_unconstrained(const NetworkSystem& sys, const NetworkState& state,
                              std::span<const double> matching_state) {
  if (sys.mode != ControlMode::Unconstrained)
    throw std::logic_error("lyapunov_unconstrained on a constrained system");
  if (matching_state.size() != state.xc.size())
    throw std::invalid_argument("matching state length mismatch");
  // Controller energy is quadratic, so the shifted storage collapses to
  // H(x) + |xc - xbar|^2 / 2.
  double acc = sys.hamiltonian.value(state.x);
  for (size_t e = 0; e < state.xc.size(); ++e) {
    double d = state.xc[e] - matching_state[e];
    acc += 0.5 * d * d;
  }
  return acc;
}

namespace {

struct LyapunovTracker {
  // Shifted constraints make the tracked energy decrease even when a matched
  // disturbance keeps acting on the loop.
  bool valid = false;
  std::vector<double> offset;                  // matching controller state
  std::vector<FlowConstraint> shifted;         // constrained mode only

  static LyapunovTracker prepare(const NetworkSystem& sys) {
    LyapunovTracker t;
    const size_t m = static_cast<size_t>(sys.graph.edge_count());
    t.offset.assign(m, 0.0);
    std::vector<double> inflow = sys.external_inflow();
    bool has_inflow = false;
    for (double b : inflow) has_inflow = has_inflow || b != 0.0;
    if (has_inflow) {
      double norm = 0.0;
      for (double b : inflow) norm += b * b;
      norm = std::sqrt(norm);
      std::vector<double> xbar = min_norm_controller_state(sys.graph, inflow);
      std::vector<double> residual = inflow;
      for (int e = 0; e < sys.graph.edge_count(); ++e) {
        residual[static_cast<size_t>(sys.graph.edge(e).head)] -= xbar[static_cast<size_t>(e)];
        residual[static_cast<size_t>(sys.graph.edge(e).tail)] += xbar[static_cast<size_t>(e)];
      }
      double rnorm = 0.0;
      for (double r : residual) rnorm += r * r;
      rnorm = std::sqrt(rnorm);
      if (rnorm > 1e-9 * (1.0 + norm)) {
        t.valid = false;  // no decrease guarantee without matching
        return t;
      }
      t.offset = std::move(xbar);
    }
    t.valid = true;
    if (sys.mode == ControlMode::Constrained) {
      t.shifted = sys.constraints;
      for (size_t e = 0; e < m; ++e) {
        t.shifted[e].lo += t.offset[e];
        t.shifted[e].hi += t.offset[e];
      }
    }
    return t;
  }

  double value(const NetworkSystem& sys, std::span<const double> z, Workspace& w) const {
    const size_t n = static_cast<size_t>(sys.graph.vertex_count());
    const size_t m = static_cast<size_t>(sys.graph.edge_count());
    std::span<const double> x = z.first(n);
    std::span<const double> xc = z.subspan(n, m);
    if (sys.mode == ControlMode::Constrained) {
      sys.hamiltonian.gradient(x, w.grad, kernels::Backend::Serial);
      kernels::edge_tension(sys.graph, w.grad, w.tension, kernels::Backend::Serial);
      std::vector<double> arg(m);
      for (size_t e = 0; e < m; ++e) arg[e] = -w.tension[e] - xc[e] + offset[e];
      return kernels::saturation_energy(arg, shifted, kernels::Backend::Serial) +
             sys.hamiltonian.value(x);
    }
    double acc = sys.hamiltonian.value(x);
    for (size_t e = 0; e < m; ++e) {
      double d = xc[e] - offset[e];
      acc += 0.5 * d * d;
    }
    return acc;
  }
};

bool all_finite(std::span<const double> v) {
  for (double a : v)
    if (!std::isfinite(a)) return false;
  return true;
}

Trajectory integrate_once(const NetworkSystem& sys, const NetworkState& initial,
                          const SimOptions& opts, double step) {
  const size_t n = static_cast<size_t>(sys.graph.vertex_count());
  const size_t m = static_cast<size_t>(sys.graph.edge_count());
  const size_t dim = n + m;

  Trajectory traj;
  traj.vertex_count = static_cast<int>(n);
  traj.edge_count = static_cast<int>(m);
  traj.step_used = step;

  Workspace w(sys);
  LyapunovTracker tracker = LyapunovTracker::prepare(sys);
  traj.lyapunov_valid = tracker.valid;

  std::vector<double> z(dim);
  std::copy(initial.x.begin(), initial.x.end(), z.begin());
  std::copy(initial.xc.begin(), initial.xc.end(), z.begin() + static_cast<long>(n));

  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), ztmp(dim);

  double inflow_total = 0.0;
  for (double b : w.inflow) inflow_total += b;
  double sum0 = 0.0;
  for (size_t v = 0; v < n; ++v) sum0 += z[v];

  const long long total_steps = static_cast<long long>(std::ceil(opts.horizon / step - 1e-12));
  const int stride = std::max(opts.record_stride, 1);

  auto record = [&](double t) {
    eval_rhs(sys, z, k1, w, opts.backend);
    traj.times.push_back(t);
    traj.x.emplace_back(z.begin(), z.begin() + static_cast<long>(n));
    traj.xc.emplace_back(z.begin() + static_cast<long>(n), z.end());
    traj.u.push_back(w.flow);
    double sum = 0.0;
    for (size_t v = 0; v < n; ++v) sum += z[v];
    traj.storage_sum.push_back(sum);
    double gmin = std::numeric_limits<double>::infinity();
    double gmax = -gmin;
    for (size_t v = 0; v < n; ++v) {
      gmin = std::min(gmin, w.grad[v]);
      gmax = std::max(gmax, w.grad[v]);
    }
    traj.grad_spread.push_back(n > 0 ? gmax - gmin : 0.0);
    double dmax = 0.0;
    for (size_t v = 0; v < n; ++v) dmax = std::max(dmax, std::abs(k1[v]));
    traj.xdot_inf.push_back(dmax);
    traj.lyapunov.push_back(tracker.valid ? tracker.value(sys, z, w)
                                          : (sys.mode == ControlMode::Constrained
                                                 ? lyapunov_sat(sys, {traj.x.back(), traj.xc.back()})
                                                 : sys.hamiltonian.value(traj.x.back())));
  };

  record(0.0);
  double v_prev = traj.lyapunov.back();

  double t = 0.0;
  for (long long k = 0; k < total_steps; ++k) {
    double h = std::min(step, opts.horizon - t);
    eval_rhs(sys, z, k1, w, opts.backend);
    for (size_t i = 0; i < dim; ++i) ztmp[i] = z[i] + 0.5 * h * k1[i];
    eval_rhs(sys, ztmp, k2, w, opts.backend);
    for (size_t i = 0; i < dim; ++i) ztmp[i] = z[i] + 0.5 * h * k2[i];
    eval_rhs(sys, ztmp, k3, w, opts.backend);
    for (size_t i = 0; i < dim; ++i) ztmp[i] = z[i] + h * k3[i];
    eval_rhs(sys, ztmp, k4, w, opts.backend);
    for (size_t i = 0; i < dim; ++i)
      z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t += h;

    if (!all_finite(z)) {
      traj.completed = false;
      traj.diagnostics_ok = false;
      traj.failure = "state left the finite range at t=" + std::to_string(t);
      record(t);
      return traj;
    }

    double sum = 0.0;
    for (size_t v = 0; v < n; ++v) sum += z[v];
    double residual = std::abs(sum - sum0 - t * inflow_total) / (1.0 + t);
    traj.max_conservation_residual = std::max(traj.max_conservation_residual, residual);

    if (tracker.valid) {
      double v_now = tracker.value(sys, z, w);
      traj.max_lyapunov_increase = std::max(traj.max_lyapunov_increase, v_now - v_prev);
      v_prev = v_now;
    }

    if ((k + 1) % stride == 0 || k + 1 == total_steps) record(t);
  }

  if (traj.max_conservation_residual > opts.conservation_tol) traj.diagnostics_ok = false;
  if (tracker.valid && traj.max_lyapunov_increase > opts.lyapunov_step_tol)
    traj.diagnostics_ok = false;
  return traj;
}

}  // namespace

Trajectory simulate(const NetworkSystem& sys, const NetworkState& initial,
                    const SimOptions& opts) {
  sys.validate();
  if (static_cast<int>(initial.x.size()) != sys.graph.vertex_count() ||
      static_cast<int>(initial.xc.size()) != sys.graph.edge_count())
    throw std::invalid_argument("initial state dimension mismatch");
  if (!(opts.step > 0.0)) throw SimulationError("step size must be positive");
  if (opts.step < 1e-12) throw SimulationError("step size underflow: " + std::to_string(opts.step));
  if (!(opts.horizon > 0.0)) throw SimulationError("horizon must be positive");

  double step = opts.step;
  Trajectory traj = integrate_once(sys, initial, opts, step);
  if (opts.refine_on_diagnostics) {
    while (!traj.diagnostics_ok && traj.completed && traj.refinements < opts.max_refinements) {
      step *= 0.5;
      if (step < 1e-12)
        throw SimulationError("step size underflow while refining diagnostics");
      int done = traj.refinements + 1;
      traj = integrate_once(sys, initial, opts, step);
      traj.refinements = done;
    }
  }
  return traj;
}

std::vector<Trajectory> simulate_batch(const NetworkSystem& sys,
                                       const std::vector<NetworkState>& initials,
                                       const SimOptions& opts) {
  std::vector<Trajectory> out(initials.size());
  const long long count = static_cast<long long>(initials.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i)
    out[static_cast<size_t>(i)] = simulate(sys, initials[static_cast<size_t>(i)], opts);
  return out;
}

std::vector<Trajectory> simulate_batch(const std::vector<NetworkSystem>& systems,
                                       const std::vector<NetworkState>& initials,
                                       const SimOptions& opts) {
  if (systems.size() != initials.size())
    throw std::invalid_argument("one initial state per system required");
  std::vector<Trajectory> out(initials.size());
  const long long count = static_cast<long long>(initials.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i)
    out[static_cast<size_t>(i)] =
        simulate(systems[static_cast<size_t>(i)], initials[static_cast<size_t>(i)], opts);
  return out;
}

namespace {

size_t tail_start_index(const Trajectory& traj, double tail_fraction) {
  if (traj.times.empty()) return 0;
  double t_end = traj.times.back();
  double t_cut = t_end * (1.0 - tail_fraction);
  size_t k = 0;
  while (k + 2 < traj.times.size() && traj.times[k] < t_cut) ++k;
  return k;
}

double inf_norm(const std::vector<double>& v) {
  double out = 0.0;
  for (double a : v) out = std::max(out, std::abs(a));
  return out;
}

}  // namespace

Classification classify_trajectory(const NetworkSystem& sys, const Trajectory& traj,
                                   const ClassifyOptions& opts) {
  Classification result;
  if (traj.times.size() < 3 || !traj.completed) {
    if (!traj.completed) {
      result.kind = TrajectoryClass::Divergent;  // left the finite range
      result.growth_rate = std::numeric_limits<double>::infinity();
    }
    return result;
  }

  const size_t tail0 = tail_start_index(traj, opts.tail_fraction);
  const size_t last = traj.times.size() - 1;

  // Linear fit of |x| over the tail catches steady drains and fills.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t count = 0;
  for (size_t k = tail0; k <= last; ++k) {
    double tx = traj.times[k];
    double ty = inf_norm(traj.x[k]);
    sx += tx;
    sy += ty;
    sxx += tx * tx;
    sxy += tx * ty;
    ++count;
  }
  double denom = static_cast<double>(count) * sxx - sx * sx;
  double slope = denom > 0.0 ? (static_cast<double>(count) * sxy - sx * sy) / denom : 0.0;

  double norm_end = inf_norm(traj.x[last]);
  double norm_start = inf_norm(traj.x[0]);
  double tail_growth = norm_end - inf_norm(traj.x[tail0]);
  double tail_span = traj.times[last] - traj.times[tail0];
  bool norm_blown = norm_end > opts.divergence_factor * (1.0 + norm_start);
  // A transient can show a positive tail slope; demand the fit be consistent
  // with the realized growth and that the growth itself is material.
  bool steady_growth = slope > opts.divergence_rate &&
                       tail_growth > 0.5 * slope * std::max(tail_span, 0.0) &&
                       tail_growth > opts.divergence_growth * (1.0 + norm_start);
  if (norm_blown || steady_growth) {
    result.kind = TrajectoryClass::Divergent;
    result.growth_rate = slope;
    return result;
  }

  double settle = 0.0;
  for (size_t k = tail0; k <= last; ++k) settle = std::max(settle, traj.xdot_inf[k]);
  if (settle >= opts.derivative_tol) return result;  // still moving: undecided

  const std::vector<double>& xT = traj.x[last];
  std::vector<double> levels(xT.size());
  for (size_t i = 0; i < xT.size(); ++i)
    levels[i] = sys.hamiltonian.grad_component(static_cast<int>(i), xT[i]);

  if (traj.grad_spread[last] < opts.consensus_tol) {
    result.kind = TrajectoryClass::Consensus;
    double mean = 0.0;
    for (double g : levels) mean += g;
    result.alpha = levels.empty() ? 0.0 : mean / static_cast<double>(levels.size());
    return result;
  }

  // Settled but spread out: clustering when the spread has stopped changing
  // and every controller integrates a sign-constant tension.
  bool spread_stable =
      std::abs(traj.grad_spread[last] - traj.grad_spread[tail0]) < opts.consensus_tol;
  bool signs_constant = true;
  {
    std::vector<double> grad(static_cast<size_t>(traj.vertex_count));
    std::vector<double> tension(static_cast<size_t>(traj.edge_count));
    std::vector<double> first(static_cast<size_t>(traj.edge_count), 0.0);
    for (size_t k = tail0; k <= last && signs_constant; ++k) {
      for (size_t i = 0; i < grad.size(); ++i)
        grad[i] = sys.hamiltonian.grad_component(static_cast<int>(i), traj.x[k][i]);
      kernels::edge_tension(sys.graph, grad, tension, kernels::Backend::Serial);
      for (size_t e = 0; e < tension.size(); ++e) {
        if (k == tail0) {
          first[e] = tension[e];
        } else if (std::abs(tension[e]) > opts.derivative_tol &&
                   std::abs(first[e]) > opts.derivative_tol &&
                   std::signbit(tension[e]) != std::signbit(first[e])) {
          signs_constant = false;
          break;
        }
      }
    }
  }
  if (!spread_stable || !signs_constant) return result;

  result.kind = TrajectoryClass::Clustering;
  std::sort(levels.begin(), levels.end());
  std::vector<double> values;
  size_t group_start = 0;
  for (size_t i = 1; i <= levels.size(); ++i) {
    if (i == levels.size() || levels[i] - levels[i - 1] > opts.consensus_tol) {
      double mean = 0.0;
      for (size_t j = group_start; j < i; ++j) mean += levels[j];
      values.push_back(mean / static_cast<double>(i - group_start));
      group_start = i;
    }
  }
  result.cluster_values = std::move(values);
  return result;
}

double consensus_alpha_for_total(const Hamiltonian& h, double total) {
  const int n = h.size();
  if (n == 0) return 0.0;
  if (h.quadratic_form()) {
    double inv = 0.0;
    for (double w : h.weights()) inv += 1.0 / w;
    return total / inv;
  }
  auto storage_at = [&](double alpha) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += h.invert_gradient(i, alpha);
    return sum;
  };
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 200 && storage_at(lo) > total; ++it) lo *= 2.0;
  for (int it = 0; it < 200 && storage_at(hi) < total; ++it) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (storage_at(mid) < total)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace flownet
