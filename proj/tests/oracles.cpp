#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oracle {

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fb,
               double fm, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fb, fm, whole, 1e-12, 48);
}

double clamp_integral(double z, double lo, double hi) {
  auto clamp = [lo, hi](double t) { return std::min(std::max(t, lo), hi); };
  return integrate(clamp, 0.0, z);
}

std::vector<double> dense_incidence(const GraphData& g) {
  const size_t n = static_cast<size_t>(g.n);
  const size_t m = g.edges.size();
  std::vector<double> b(n * m, 0.0);
  for (size_t j = 0; j < m; ++j) {
    b[static_cast<size_t>(g.edges[j].first) * m + j] -= 1.0;
    b[static_cast<size_t>(g.edges[j].second) * m + j] += 1.0;
  }
  return b;
}

std::vector<double> b_times(const GraphData& g, const std::vector<double>& edge_vec) {
  const std::vector<double> b = dense_incidence(g);
  const size_t m = g.edges.size();
  std::vector<double> out(static_cast<size_t>(g.n), 0.0);
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = 0; j < m; ++j) out[i] += b[i * m + j] * edge_vec[j];
  return out;
}

std::vector<double> bt_times(const GraphData& g, const std::vector<double>& vertex_vec) {
  const std::vector<double> b = dense_incidence(g);
  const size_t m = g.edges.size();
  std::vector<double> out(m, 0.0);
  for (size_t j = 0; j < m; ++j)
    for (size_t i = 0; i < static_cast<size_t>(g.n); ++i)
      out[j] += b[i * m + j] * vertex_vec[i];
  return out;
}

void reference_rhs_constrained(const GraphData& g, const std::vector<double>& weights,
                               const std::vector<double>& lo, const std::vector<double>& hi,
                               const std::vector<double>& inflow, const std::vector<double>& x,
                               const std::vector<double>& xc, std::vector<double>& xdot,
                               std::vector<double>& xcdot) {
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) grad[i] = weights[i] * x[i];
  std::vector<double> y = bt_times(g, grad);
  std::vector<double> u(y.size());
  for (size_t j = 0; j < y.size(); ++j)
    u[j] = std::min(std::max(-y[j] - xc[j], lo[j]), hi[j]);
  xdot = b_times(g, u);
  if (!inflow.empty())
    for (size_t i = 0; i < xdot.size(); ++i) xdot[i] += inflow[i];
  xcdot = y;
}

void reference_rhs_unconstrained(const GraphData& g, const std::vector<double>& weights,
                                 const std::vector<double>& gains,
                                 const std::vector<double>& inflow, const std::vector<double>& x,
                                 const std::vector<double>& xc, std::vector<double>& xdot,
                                 std::vector<double>& xcdot) {
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) grad[i] = weights[i] * x[i];
  std::vector<double> y = bt_times(g, grad);
  std::vector<double> u(y.size());
  for (size_t j = 0; j < y.size(); ++j)
    u[j] = -(gains.empty() ? 1.0 : gains[j]) * y[j] - xc[j];
  xdot = b_times(g, u);
  if (!inflow.empty())
    for (size_t i = 0; i < xdot.size(); ++i) xdot[i] += inflow[i];
  xcdot = y;
}

std::vector<std::vector<double>> incidence_kernel_basis(const GraphData& g) {
  const size_t n = static_cast<size_t>(g.n);
  const size_t m = g.edges.size();
  std::vector<double> a = dense_incidence(g);

  // Reduced row echelon form with partial pivoting.
  std::vector<int> pivot_of_row;
  size_t row = 0;
  for (size_t col = 0; col < m && row < n; ++col) {
    size_t best = row;
    for (size_t r = row + 1; r < n; ++r)
      if (std::abs(a[r * m + col]) > std::abs(a[best * m + col])) best = r;
    if (std::abs(a[best * m + col]) < 1e-12) continue;
    for (size_t c = 0; c < m; ++c) std::swap(a[row * m + c], a[best * m + c]);
    const double pivot = a[row * m + col];
    for (size_t c = 0; c < m; ++c) a[row * m + c] /= pivot;
    for (size_t r = 0; r < n; ++r) {
      if (r == row) continue;
      const double f = a[r * m + col];
      if (f == 0.0) continue;
      for (size_t c = 0; c < m; ++c) a[r * m + c] -= f * a[row * m + c];
    }
    pivot_of_row.push_back(static_cast<int>(col));
    ++row;
  }

  std::vector<bool> is_pivot(m, false);
  for (int c : pivot_of_row) is_pivot[static_cast<size_t>(c)] = true;

  std::vector<std::vector<double>> basis;
  for (size_t free = 0; free < m; ++free) {
    if (is_pivot[free]) continue;
    std::vector<double> v(m, 0.0);
    v[free] = 1.0;
    for (size_t r = 0; r < pivot_of_row.size(); ++r)
      v[static_cast<size_t>(pivot_of_row[r])] = -a[r * m + free];
    basis.push_back(std::move(v));
  }
  return basis;
}

bool balanced(const GraphData& g) {
  std::vector<int> net(static_cast<size_t>(g.n), 0);
  for (const auto& [tail, head] : g.edges) {
    net[static_cast<size_t>(tail)] -= 1;
    net[static_cast<size_t>(head)] += 1;
  }
  return std::all_of(net.begin(), net.end(), [](int d) { return d == 0; });
}

std::vector<bool> reachability(const GraphData& g) {
  const size_t n = static_cast<size_t>(g.n);
  std::vector<bool> reach(n * n, false);
  for (size_t v = 0; v < n; ++v) reach[v * n + v] = true;
  for (const auto& [tail, head] : g.edges)
    reach[static_cast<size_t>(tail) * n + static_cast<size_t>(head)] = true;
  for (size_t k = 0; k < n; ++k)
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        if (reach[i * n + k] && reach[k * n + j]) reach[i * n + j] = true;
  return reach;
}

bool strongly_connected(const GraphData& g) {
  const size_t n = static_cast<size_t>(g.n);
  if (n <= 1) return true;
  const std::vector<bool> reach = reachability(g);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (!reach[i * n + j]) return false;
  return true;
}

bool weakly_connected(const GraphData& g) {
  const size_t n = static_cast<size_t>(g.n);
  if (n == 0) return true;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[static_cast<size_t>(v)] != v) {
      parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
      v = parent[static_cast<size_t>(v)];
    }
    return v;
  };
  for (const auto& [tail, head] : g.edges) parent[static_cast<size_t>(find(tail))] = find(head);
  const int root = find(0);
  for (int v = 1; v < g.n; ++v)
    if (find(v) != root) return false;
  return true;
}

namespace {

// Backtracking exact cover of the edges by directed vertex-simple cycles.
bool partition_search(const GraphData& g, std::vector<bool>& used, int used_count) {
  const int m = static_cast<int>(g.edges.size());
  if (used_count == m) return true;
  int start = 0;
  while (used[static_cast<size_t>(start)]) ++start;

  // Grow a path from the start edge; close it when it returns to the origin.
  struct Frame {
    int vertex;
    std::vector<int> choices;
    size_t next = 0;
  };
  const int origin = g.edges[static_cast<size_t>(start)].first;

  std::vector<int> path{start};
  used[static_cast<size_t>(start)] = true;
  std::vector<bool> on_path(static_cast<size_t>(g.n), false);
  on_path[static_cast<size_t>(origin)] = true;

  std::function<bool(int)> extend = [&](int at) -> bool {
    if (at == origin) {
      if (partition_search(g, used, used_count + static_cast<int>(path.size()))) return true;
      return false;
    }
    if (on_path[static_cast<size_t>(at)]) return false;  // keep cycles vertex-simple
    on_path[static_cast<size_t>(at)] = true;
    for (int e = 0; e < m; ++e) {
      if (used[static_cast<size_t>(e)] || g.edges[static_cast<size_t>(e)].first != at) continue;
      used[static_cast<size_t>(e)] = true;
      path.push_back(e);
      if (extend(g.edges[static_cast<size_t>(e)].second)) return true;
      path.pop_back();
      used[static_cast<size_t>(e)] = false;
    }
    on_path[static_cast<size_t>(at)] = false;
    return false;
  };

  const bool ok = extend(g.edges[static_cast<size_t>(start)].second);
  if (!ok) used[static_cast<size_t>(start)] = false;
  return ok;
}

}  // namespace

bool cycle_partition_exists(const GraphData& g) {
  if (g.edges.empty()) return true;
  std::vector<bool> used(g.edges.size(), false);
  return partition_search(g, used, 0);
}

namespace {

void circulation_search(const GraphData& g, int cap, size_t at, std::vector<int>& net,
                        long long partial, long long& best) {
  const size_t m = g.edges.size();
  // Every remaining edge contributes at least one unit.
  if (best >= 0 && partial + static_cast<long long>(m - at) >= best) return;
  if (at == m) {
    if (std::all_of(net.begin(), net.end(), [](int d) { return d == 0; })) best = partial;
    return;
  }
  for (int v = 1; v <= cap; ++v) {
    net[static_cast<size_t>(g.edges[at].first)] -= v;
    net[static_cast<size_t>(g.edges[at].second)] += v;
    circulation_search(g, cap, at + 1, net, partial + v, best);
    net[static_cast<size_t>(g.edges[at].first)] += v;
    net[static_cast<size_t>(g.edges[at].second)] -= v;
  }
}

}  // namespace

long long min_circulation_total(const GraphData& g, int per_edge_cap) {
  std::vector<int> net(static_cast<size_t>(g.n), 0);
  long long best = -1;
  circulation_search(g, per_edge_cap, 0, net, 0, best);
  return best;
}

void pair_closed_form(double t, double x0_a, double x0_b, double xc0, double& xa, double& xb,
                      double& xc) {
  // On (delta, xc) with delta = xa - xb the loop is linear with matrix
  // [[-2, 2], [-1, 0]]; eigenvalues -1 +- i give the rotation form below.
  const double delta0 = x0_a - x0_b;
  const double mean = 0.5 * (x0_a + x0_b);
  const double decay = std::exp(-t);
  const double c = std::cos(t);
  const double s = std::sin(t);
  const double delta = decay * (delta0 * (c - s) + 2.0 * xc0 * s);
  xc = decay * (-delta0 * s + xc0 * (c + s));
  xa = mean + 0.5 * delta;
  xb = mean - 0.5 * delta;
}

GraphData random_weakly_connected(std::mt19937_64& rng, int n, int extra_edges) {
  GraphData g;
  g.n = n;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> attach(0, v - 1);
    const int other = attach(rng);
    if (rng() & 1)
      g.edges.push_back({other, v});
    else
      g.edges.push_back({v, other});
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  int added = 0;
  while (added < extra_edges) {
    const int a = pick(rng);
    const int b = pick(rng);
    if (a == b) continue;
    g.edges.push_back({a, b});
    ++added;
  }
  return g;
}

GraphData random_strongly_connected(std::mt19937_64& rng, int n, int extra_edges) {
  GraphData g;
  g.n = n;
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int k = 0; k < n; ++k)
    g.edges.push_back({order[static_cast<size_t>(k)],
                       order[static_cast<size_t>((k + 1) % n)]});
  std::uniform_int_distribution<int> pick(0, n - 1);
  int added = 0;
  while (added < extra_edges) {
    const int a = pick(rng);
    const int b = pick(rng);
    if (a == b) continue;
    g.edges.push_back({a, b});
    ++added;
  }
  return g;
}

}  // namespace oracle
