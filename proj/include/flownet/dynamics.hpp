#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flownet/constraint.hpp"
#include "flownet/graph.hpp"
#include "flownet/kernels.hpp"

namespace flownet {

// Separable storage function H(x) = sum_i H_i(x_i) with strictly convex,
// radially unbounded components.
class Hamiltonian {
 public:
  struct Potential {
    std::function<double(double)> value;
    std::function<double(double)> grad;
  };

  Hamiltonian() = default;
  static Hamiltonian quadratic(std::vector<double> weights);  // H_i = w_i x^2 / 2, w_i > 0
  static Hamiltonian quadratic_identity(int n);
  static Hamiltonian custom(std::vector<Potential> per_vertex, std::string label = "");

  int size() const;
  bool quadratic_form() const { return quad_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::string& label() const { return label_; }  // registry name, custom only

  double value(std::span<const double> x) const;
  double grad_component(int i, double xi) const;
  void gradient(std::span<const double> x, std::span<double> out,
                kernels::Backend backend = kernels::Backend::Serial) const;

  // Solve grad_i(x) = level; gradients are strictly increasing, so bracketed
  // bisection always converges.
  double invert_gradient(int i, double level) const;

 private:
  bool quad_ = true;
  std::vector<double> weights_;
  std::vector<Potential> potentials_;
  std::string label_;
};

enum class ControlMode { Constrained, Unconstrained };

struct NetworkState {
  std::vector<double> x;
  std::vector<double> xc;
};

// Closed loop of integral flow controllers on a distribution network.
// Constrained mode clamps each edge flow into its interval and fixes unit
// proportional gains; unconstrained mode applies the diagonal gain directly.
struct NetworkSystem {
  ControlMode mode = ControlMode::Constrained;
  DirectedGraph graph;
  std::vector<FlowConstraint> constraints;  // size m when constrained, empty otherwise
  Hamiltonian hamiltonian;
  TerminalPattern terminals;
  std::vector<double> disturbance;  // constant terminal flows, one per terminal
  std::vector<double> gain;         // unconstrained only; empty means unit gains

  void validate() const;
  std::vector<double> external_inflow() const;  // net inflow per vertex
  ConstrainedNetwork network() const;           // constrained mode only
};

NetworkSystem make_constrained_system(ConstrainedNetwork net, Hamiltonian h,
                                      TerminalPattern terminals = {},
                                      std::vector<double> dbar = {});
NetworkSystem make_unconstrained_system(DirectedGraph g, Hamiltonian h,
                                        std::vector<double> gain = {},
                                        TerminalPattern terminals = {},
                                        std::vector<double> dbar = {});

// xdot = B sat(-B^T grad H - xc) + inflow, xcdot = B^T grad H
void rhs_constrained(const NetworkSystem& sys, const NetworkState& state, NetworkState& out);
// xdot = -B R B^T grad H - B xc + inflow, xcdot = B^T grad H
void rhs_unconstrained(const NetworkSystem& sys, const NetworkState& state, NetworkState& out);

// The edge flows the controller currently produces.
std::vector<double> flows(const NetworkSystem& sys, const NetworkState& state);

// Energy of the saturated loop: sum_e S(-B^T grad H - xc) + H(x).
double lyapunov_sat(const NetworkSystem& sys, const NetworkState& state);

// Shifted energy for the unconstrained loop around a matching controller
// state: H(x) + |xc - xbar|^2 / 2.
double lyapunov_unconstrained(const NetworkSystem& sys, const NetworkState& state,
                              std::span<const double> matching_state);

struct SimOptions {
  double horizon = 200.0;
  double step = 1e-3;
  int record_stride = 100;  // record every k-th step plus the final state
  kernels::Backend backend = kernels::Backend::Serial;
  // Halve the step (up to max_refinements times) until the conservation and
  // Lyapunov diagnostics pass.
  bool refine_on_diagnostics = false;
  int max_refinements = 4;
  double conservation_tol = 1e-6;   // |1^T x(t) - expected| <= tol * (1 + t)
  double lyapunov_step_tol = 1e-9;  // per-step increase allowed in V
};

struct Trajectory {
  int vertex_count = 0;
  int edge_count = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> x;   // one storage vector per sample
  std::vector<std::vector<double>> xc;  // controller states per sample
  std::vector<std::vector<double>> u;   // realized flows per sample
  std::vector<double> lyapunov;
  std::vector<double> storage_sum;   // 1^T x per sample
  std::vector<double> grad_spread;   // max - min of grad H per sample
  std::vector<double> xdot_inf;      // sup norm of xdot per sample

  // Diagnostics tracked at every integrator step, not just samples.
  double max_lyapunov_increase = 0.0;
  double max_conservation_residual = 0.0;  // scaled by 1/(1+t)
  bool lyapunov_valid = false;  // false when no decrease guarantee applies
  bool diagnostics_ok = true;
  bool completed = true;        // false when the state left the finite range
  std::string failure;
  double step_used = 0.0;
  int refinements = 0;
};

Trajectory simulate(const NetworkSystem& sys, const NetworkState& initial,
                    const SimOptions& opts = {});

// Independent trajectories integrated in parallel (OpenMP across the batch).
std::vector<Trajectory> simulate_batch(const NetworkSystem& sys,
                                       const std::vector<NetworkState>& initials,
                                       const SimOptions& opts = {});
std::vector<Trajectory> simulate_batch(const std::vector<NetworkSystem>& systems,
                                       const std::vector<NetworkState>& initials,
                                       const SimOptions& opts = {});

enum class TrajectoryClass { Consensus, Clustering, Divergent, Undecided };

struct ClassifyOptions {
  double consensus_tol = 1e-3;    // spread of grad H below this counts as equal
  double derivative_tol = 1e-4;   // xdot sup norm must settle below this
  double divergence_factor = 1e3; // |x| beyond factor * (1 + |x(0)|) diverges
  double divergence_rate = 1e-3;  // or the fitted growth rate stays above this
  double divergence_growth = 0.1; // and the tail accrues this fraction of 1 + |x(0)|
  double tail_fraction = 0.2;     // samples inspected for the settled regime
};

struct Classification {
  TrajectoryClass kind = TrajectoryClass::Undecided;
  double alpha = 0.0;                  // consensus level of grad H
  std::vector<double> cluster_values;  // settled grad H levels, ascending
  double growth_rate = 0.0;            // fitted |x| slope when divergent
};

Classification classify_trajectory(const NetworkSystem& sys, const Trajectory& traj,
                                   const ClassifyOptions& opts = {});

// Consensus level alpha with sum_i (grad_i)^{-1}(alpha) equal to the conserved
// total storage.
double consensus_alpha_for_total(const Hamiltonian& h, double total);

}  // namespace flownet
