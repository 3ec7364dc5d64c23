#include "flownet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flownet {

namespace {

constexpr double kCoeffEps = 1e-12;

struct Row {
  std::vector<double> coeff;
  double bound;
};

}  // namespace

// Fourier-Motzkin elimination from the last variable down, then midpoint
// back-substitution.  Sized for the small certificate programs this library
// produces (a handful of breakpoint variables), not general LPs.
FeasibleResult fourier_motzkin_feasible(int num_vars,
                                        const std::vector<LinearConstraint>& rows) {
  if (num_vars < 0) throw std::invalid_argument("negative variable count");
  std::vector<Row> live;
  live.reserve(rows.size());
  for (const LinearConstraint& c : rows) {
    if (static_cast<int>(c.coeff.size()) != num_vars)
      throw std::invalid_argument("constraint arity mismatch");
    live.push_back({c.coeff, c.bound});
  }

  // levels[v] holds the rows present just before variable v is eliminated.
  std::vector<std::vector<Row>> levels(static_cast<size_t>(num_vars));

  for (int v = num_vars - 1; v >= 0; --v) {
    levels[static_cast<size_t>(v)] = live;
    std::vector<Row> next;
    std::vector<const Row*> uppers;  // positive coefficient on v
    std::vector<const Row*> lowers;  // negative coefficient on v
    for (const Row& r : live) {
      double a = r.coeff[static_cast<size_t>(v)];
      if (a > kCoeffEps)
        uppers.push_back(&r);
      else if (a < -kCoeffEps)
        lowers.push_back(&r);
      else
        next.push_back(r);
    }
    for (const Row* up : uppers) {
      for (const Row* down : lowers) {
        double au = up->coeff[static_cast<size_t>(v)];
        double ad = -down->coeff[static_cast<size_t>(v)];
        Row merged;
        merged.coeff.assign(static_cast<size_t>(num_vars), 0.0);
        for (int j = 0; j < v; ++j)
          merged.coeff[static_cast<size_t>(j)] =
              down->coeff[static_cast<size_t>(j)] / ad + up->coeff[static_cast<size_t>(j)] / au;
        merged.bound = down->bound / ad + up->bound / au;
        next.push_back(std::move(merged));
      }
    }
    live = std::move(next);
  }

  for (const Row& r : live)
    if (r.bound < -1e-9) return {false, {}};

  FeasibleResult result;
  result.feasible = true;
  result.point.assign(static_cast<size_t>(num_vars), 0.0);
  for (int v = 0; v < num_vars; ++v) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const Row& r : levels[static_cast<size_t>(v)]) {
      double a = r.coeff[static_cast<size_t>(v)];
      if (std::abs(a) <= kCoeffEps) continue;
      double rest = 0.0;
      for (int j = 0; j < num_vars; ++j)
        if (j != v) rest += r.coeff[static_cast<size_t>(j)] * result.point[static_cast<size_t>(j)];
      double limit = (r.bound - rest) / a;
      if (a > 0.0)
        hi = std::min(hi, limit);
      else
        lo = std::max(lo, limit);
    }
    double chosen;
    if (std::isfinite(lo) && std::isfinite(hi))
      chosen = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
      chosen = lo + 1.0;
    else if (std::isfinite(hi))
      chosen = hi - 1.0;
    else
      chosen = 0.0;
    result.point[static_cast<size_t>(v)] = chosen;
  }

  // Rounded midpoints can graze a bound; reject only real violations.
  for (const LinearConstraint& r : rows) {
    double lhs = 0.0;
    for (int j = 0; j < num_vars; ++j)
      lhs += r.coeff[static_cast<size_t>(j)] * result.point[static_cast<size_t>(j)];
    if (lhs > r.bound + 1e-7) return {false, {}};
  }
  return result;
}

}  // namespace flownet
