#include "ckm/bifurcation.hpp"

#include <algorithm>
#include <cmath>

namespace ckm {

namespace {

constexpr double kGolden = 0.6180339887498949;

bool in_regime(double b1, GainRegime regime) {
  switch (regime) {
    case GainRegime::Positive:
      return b1 > 0.0;
    case GainRegime::Negative:
      return b1 < 0.0;
    case GainRegime::Any:
      return true;
  }
  return false;
}

template <class F>
double golden_max(F&& f, double lo, double hi, double tol) {
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

// Locates the zero of the analytic chibar derivative inside [lo, hi]; falls
// back to golden-section on +-chibar when the derivative does not bracket.
double refine_extremum(const SignPattern& sigma, const ModelParams& params, Branch branch,
                       double lo, double hi, bool is_max) {
  auto deriv = [&](double x) { return chibar_derivative(sigma, x, params, branch).value_or(0.0); };
  double dlo = deriv(lo);
  const double dhi = deriv(hi);
  if (dlo != 0.0 && dhi != 0.0 && (dlo > 0.0) != (dhi > 0.0)) {
    while (hi - lo > 1e-13) {
      const double mid = 0.5 * (lo + hi);
      const double dm = deriv(mid);
      if (dm == 0.0) return mid;
      if ((dm > 0.0) == (dlo > 0.0)) {
        lo = mid;
        dlo = dm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }
  const double sign = is_max ? 1.0 : -1.0;
  return golden_max(
      [&](double x) { return sign * chibar(sigma, x, params, branch).value_or(0.0); }, lo, hi,
      1e-10);
}

}  // namespace

std::string_view to_string(BifurcationKind k) {
  return k == BifurcationKind::SaddleNode ? "saddle-node" : "pitchfork";
}

std::string_view to_string(Criticality c) {
  switch (c) {
    case Criticality::Supercritical:
      return "supercritical";
    case Criticality::Subcritical:
      return "subcritical";
    case Criticality::Unclassified:
      return "unclassified";
  }
  return "unknown";
}

NoEquilibriumCheck no_equilibrium_condition(const ModelParams& params) {
  params.validate();
  const auto sigma = SignPattern::all_plus(params.n);
  auto f = [&](double x) { return x * chi(sigma, x); };
  const auto& grid = xi_grid();
  std::size_t best = 0;
  double best_val = -INFINITY;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double val = f(grid[k]);
    if (val > best_val) {
      best_val = val;
      best = k;
    }
  }
  double max_val = best_val;
  if (best + 1 < grid.size()) {
    const double lo = best == 0 ? 0.0 : grid[best - 1];
    const double x = golden_max(f, lo, grid[best + 1], 1e-12);
    max_val = std::max(max_val, f(x));
  }
  NoEquilibriumCheck out;
  out.beta = params.beta();
  out.max_xichi = max_val;
  out.holds = out.beta > out.max_xichi;
  return out;
}

std::vector<BifurcationPoint> saddle_node_points(const SignPattern& sigma,
                                                 const ModelParams& params, GainRegime regime) {
  params.validate();
  if (sigma.size() != params.n) throw InvalidArgument("saddle_node_points: pattern length != n");
  const auto& grid = xi_grid();
  std::vector<BifurcationPoint> out;

  for (Branch branch : {Branch::Plus, Branch::Minus}) {
    const double sb = branch_sign(branch) * params.beta();
    // Interior grid only: extrema live in (0, 1).
    std::vector<double> xs;
    std::vector<double> vals;
    std::vector<double> denoms;
    for (double x : grid) {
      if (x >= 1.0) break;
      xs.push_back(x);
      const double d = sb - x * chi(sigma, x);
      denoms.push_back(d);
      vals.push_back(x / d);
    }
    for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
      // Skip stencils that straddle a pole; each side is its own segment.
      const bool same_side = (denoms[k - 1] > 0.0) == (denoms[k] > 0.0) &&
                             (denoms[k] > 0.0) == (denoms[k + 1] > 0.0);
      if (!same_side || std::abs(denoms[k]) < 1e-14) continue;
      const double left = vals[k] - vals[k - 1];
      const double right = vals[k + 1] - vals[k];
      const bool is_max = left > 0.0 && right <= 0.0;
      const bool is_min = left < 0.0 && right >= 0.0;
      if (!is_max && !is_min) continue;
      const double xi = refine_extremum(sigma, params, branch, xs[k - 1], xs[k + 1], is_max);
      const auto b1 = gain_at(sigma, xi, params, branch);
      if (!b1 || !in_regime(*b1, regime)) continue;
      BifurcationPoint pt{BifurcationKind::SaddleNode, sigma, branch, xi, *b1,
                          is_max ? Criticality::Supercritical : Criticality::Subcritical};
      // A plateau across two grid cells would be reported twice.
      if (!out.empty() && out.back().branch == branch && std::abs(out.back().xi_star - xi) < 1e-9) {
        continue;
      }
      out.push_back(std::move(pt));
    }
  }
  return out;
}

int endpoint_slope_sign(const SignPattern& sigma, const ModelParams& params, Branch branch) {
  const auto at_one = chibar(sigma, 1.0, params, branch);
  if (!at_one) return 0;
  std::vector<double> fd;
  for (int k = 8; k <= 20; ++k) {
    const double h = std::ldexp(1.0, -k);
    const auto inner = chibar(sigma, 1.0 - h, params, branch);
    if (!inner) return 0;
    fd.push_back((*at_one - *inner) / h);
  }
  // First-order one-sided differences: D(h) = D + c h + ..., so 2 D(h/2) - D(h)
  // removes the leading error term.
  std::vector<double> rich;
  for (std::size_t i = 0; i + 1 < fd.size(); ++i) rich.push_back(2.0 * fd[i + 1] - fd[i]);
  // Require the last few extrapolants to agree in sign.
  const std::size_t tail = 4;
  int sign = 0;
  for (std::size_t i = rich.size() - tail; i < rich.size(); ++i) {
    const int s = rich[i] > 0.0 ? 1 : (rich[i] < 0.0 ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign)) return 0;
    sign = s;
  }
  return sign;
}

int root_count(const SignPattern& sigma, const ModelParams& params, double b1) {
  ModelParams p = params;
  p.b1 = b1;
  return static_cast<int>(solve_equilibrium(sigma, p).size());
}

namespace {

// Roots of `sigma` with xi within `window` of 1 at gain b1.
int endpoint_roots(const SignPattern& sigma, const ModelParams& params, double b1, double window) {
  ModelParams p = params;
  p.b1 = b1;
  int count = 0;
  for (const auto& r : solve_equilibrium(sigma, p)) {
    if (r.xi > 1.0 - window && !r.boundary) ++count;
  }
  return count;
}

}  // namespace

PitchforkScan pitchfork_points(const ModelParams& params, GainRegime regime) {
  params.validate();
  const int n = params.n;
  const int interior = n - 2;
  PitchforkScan out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << interior); ++m) {
    const auto sigma = SignPattern::from_mask(n, m << 1);  // sigma_1 = sigma_n = +1
    std::vector<int> s = sigma.signs();
    s[n - 1] = -1;
    const SignPattern plus_minus(s);

    for (Branch branch : {Branch::Plus, Branch::Minus}) {
      const auto cb = chibar(sigma, 1.0, params, branch);
      if (!cb) {
        out.diagnostics.push_back("interior pattern " + sigma.to_string() + " branch " +
                                  std::string(to_string(branch)) +
                                  ": chibar has a pole at xi = 1; degenerate, unclassified");
        continue;
      }
      const double b1 = params.pK() / *cb;
      if (!in_regime(b1, regime)) continue;

      BifurcationPoint pt{BifurcationKind::Pitchfork, sigma, branch, 1.0, b1};
      const int slope = endpoint_slope_sign(plus_minus, params, branch);
      pt.criticality = slope > 0   ? Criticality::Supercritical
                       : slope < 0 ? Criticality::Subcritical
                                   : Criticality::Unclassified;

      // Twins exist where pK / b1 lies on the side of chibar(1) the curve
      // approaches from: below it for a positive slope.
      if (slope != 0) {
        const double eps = 1e-6 * std::abs(*cb);
        const double toward = *cb - slope * eps;
        const double away = *cb + slope * eps;
        const int born = endpoint_roots(plus_minus, params, params.pK() / toward, 1e-2);
        const int none = endpoint_roots(plus_minus, params, params.pK() / away, 1e-2);
        pt.confirmed = born > 0 && none == 0;
      }
      out.points.push_back(std::move(pt));
    }
  }
  return out;
}

std::vector<BranchRow> branch_diagram(const SignPattern& sigma, const ModelParams& params,
                                      const std::vector<double>& grid, Branch branch) {
  params.validate();
  if (sigma.size() != params.n) throw InvalidArgument("branch_diagram: pattern length != n");
  std::vector<BranchRow> rows;
  int segment = 0;
  std::optional<bool> prev_side;
  for (double xi : grid) {
    if (!(xi > 0.0 && xi <= 1.0)) throw InvalidArgument("branch_diagram: grid must lie in (0, 1]");
    BranchRow row;
    row.xi = xi;
    const double denom = branch_sign(branch) * params.beta() - xi * chi(sigma, xi);
    const bool side = denom > 0.0;
    if (prev_side && *prev_side != side) ++segment;
    prev_side = side;
    row.segment = segment;
    row.chibar = chibar(sigma, xi, params, branch);
    if (row.chibar && *row.chibar != 0.0) {
      row.b1 = params.pK() / *row.chibar;
      ModelParams p = params;
      p.b1 = *row.b1;
      const auto report = stability_at(equilibrium_phases(sigma, xi, branch), p);
      row.n_positive = report.n_positive;
      row.stability = report.stability;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ckm
