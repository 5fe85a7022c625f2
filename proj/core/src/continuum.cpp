#include "ckm/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace ckm {

namespace {

constexpr double kPi = std::numbers::pi;

// arcsin eta + eta sqrt(1 - eta^2) = 2 * integral_0^eta sqrt(1 - s^2) ds.
double g_eta(double eta) { return std::asin(eta) + eta * std::sqrt(std::max(0.0, 1.0 - eta * eta)); }

// Antiderivative of sqrt(1 - s^2).
double G(double s) {
  s = std::clamp(s, -1.0, 1.0);
  return 0.5 * (s * std::sqrt(std::max(0.0, 1.0 - s * s)) + std::asin(s));
}

void check_params(double a, double pK) {
  if (!(a > 0.0) || !(pK > 0.0)) throw InvalidArgument("continuum: a and pK must be positive");
}

bool covers_unit(const std::vector<Interval>& flips) {
  double len = 0.0;
  for (const auto& iv : flips) len += iv.hi - iv.lo;
  return std::abs(len - 1.0) < 1e-15;
}

std::vector<Interval> normalize(std::vector<Interval> flips) {
  for (const auto& iv : flips) {
    if (!(iv.lo >= 0.0 && iv.hi <= 1.0 && iv.lo < iv.hi)) {
      throw InvalidArgument("flip_set: intervals must satisfy 0 <= lo < hi <= 1");
    }
  }
  std::sort(flips.begin(), flips.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  for (std::size_t i = 1; i < flips.size(); ++i) {
    if (flips[i].lo < flips[i - 1].hi) throw InvalidArgument("flip_set: intervals overlap");
  }
  std::vector<Interval> out;
  for (const auto& iv : flips) {
    if (iv.lo < 0.5 && iv.hi > 0.5) {
      out.push_back({iv.lo, 0.5});
      out.push_back({0.5, iv.hi});
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

bool in_interval(const Interval& iv, double x) {
  return (x >= iv.lo && x < iv.hi) || (x == 1.0 && iv.hi == 1.0);
}

}  // namespace

std::string_view to_string(ContinuumKind k) {
  switch (k) {
    case ContinuumKind::Continuous:
      return "continuous";
    case ContinuumKind::FlippedContinuous:
      return "flipped-continuous";
    case ContinuumKind::Discontinuous:
      return "discontinuous";
  }
  return "unknown";
}

double existence_threshold(double a, double pK) {
  check_params(a, pK);
  return 0.5 * a - 0.25 * kPi * pK;
}

double c_integral(double eta, std::span<const Interval> flip_set) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("c_integral: eta must lie in (0, 1]");
  double total = G(eta) - G(-eta);
  for (const auto& iv : flip_set) {
    total -= 2.0 * (G(2.0 * eta * (iv.hi - 0.5)) - G(2.0 * eta * (iv.lo - 0.5)));
  }
  return total / (2.0 * eta);
}

std::optional<ContinuumSolution> solve_C(double a, double pK, double b1) {
  const double threshold = existence_threshold(a, pK);
  if (b1 < threshold) return std::nullopt;
  // F(eta) = (pK/2) phi(eta) - b1 decreases from +inf at 0+ to threshold - b1 <= 0 at 1.
  auto F = [&](double eta) { return 0.5 * pK * (a / pK - g_eta(eta)) / eta - b1; };
  double eta = 1.0;
  if (F(1.0) < 0.0) {
    double lo = 0.5;
    while (F(lo) <= 0.0) lo *= 0.5;
    double hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (F(mid) > 0.0 ? lo : hi) = mid;
    }
    eta = 0.5 * (lo + hi);
  }
  ContinuumSolution sol;
  sol.a = a;
  sol.pK = pK;
  sol.b1 = b1;
  sol.eta = eta;
  sol.C = g_eta(eta) / (2.0 * eta);
  sol.delta_u = std::asin(eta);
  sol.kind = ContinuumKind::Continuous;
  return sol;
}

std::optional<ContinuumSolution> solve_C_discontinuous(std::vector<Interval> flip_set, double a,
                                                       double pK, double b1) {
  check_params(a, pK);
  if (flip_set.empty()) return solve_C(a, pK, b1);
  auto flips = normalize(std::move(flip_set));

  // H(eta) = a/(2 eta) - pK C(eta) - b1 is +inf at 0+ because |C| <= 1.
  auto H = [&](double eta) { return a / (2.0 * eta) - pK * c_integral(eta, flips) - b1; };
  std::vector<double> grid;
  for (int k = 50; k >= 13; --k) grid.push_back(std::ldexp(1.0, -k));
  for (int k = 1; k <= 4096; ++k) grid.push_back(k / 4096.0);

  std::optional<double> root;
  double prev_x = grid.front();
  double prev_h = H(prev_x);
  if (prev_h <= 0.0) return std::nullopt;
  for (std::size_t k = 1; k < grid.size() && !root; ++k) {
    const double x = grid[k];
    const double h = H(x);
    if (h == 0.0) {
      root = x;
    } else if (h < 0.0) {
      double lo = prev_x;
      double hi = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (H(mid) > 0.0 ? lo : hi) = mid;
      }
      root = 0.5 * (lo + hi);
    }
    prev_x = x;
    prev_h = h;
  }
  if (!root) return std::nullopt;

  ContinuumSolution sol;
  sol.a = a;
  sol.pK = pK;
  sol.b1 = b1;
  sol.eta = *root;
  sol.C = c_integral(*root, flips);
  sol.delta_u = std::asin(*root);
  if (!(pK * sol.C + b1 > 0.0)) return std::nullopt;
  if (covers_unit(flips)) {
    sol.kind = ContinuumKind::FlippedContinuous;
    sol.flip_set = {{0.0, 1.0}};
  } else {
    sol.kind = ContinuumKind::Discontinuous;
    sol.flip_set = std::move(flips);
  }
  return sol;
}

double c_residual(const ContinuumSolution& sol) {
  return std::abs(sol.a / (2.0 * sol.eta) - sol.pK * c_integral(sol.eta, sol.flip_set) - sol.b1);
}

double U_eval(const ContinuumSolution& sol, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("U_eval: x must lie in [0, 1]");
  const double s = std::clamp(sol.a * (x - 0.5) / (sol.pK * sol.C + sol.b1), -1.0, 1.0);
  const double U = std::asin(s);
  switch (sol.kind) {
    case ContinuumKind::Continuous:
      return U;
    case ContinuumKind::FlippedContinuous:
      return kPi - U;
    case ContinuumKind::Discontinuous:
      for (const auto& iv : sol.flip_set) {
        if (in_interval(iv, x)) return iv.lo >= 0.5 ? kPi - U : -U - kPi;
      }
      return U;
  }
  return U;
}

double delta_u(const ContinuumSolution& sol) {
  if (sol.kind != ContinuumKind::Continuous) {
    throw InvalidArgument("delta_u: only defined for the continuous solution");
  }
  return std::asin(sol.eta);
}

Evaluator embed(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("embed: empty vector");
  auto values = std::make_shared<const std::vector<double>>(v.begin(), v.end());
  const std::size_t n = v.size();
  Evaluator e;
  e.fn = [values, n](double x) {
    const auto i = static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) * static_cast<double>(n));
    return (*values)[std::min(i, n - 1)];
  };
  for (std::size_t i = 1; i < n; ++i) e.breakpoints.push_back(static_cast<double>(i) / n);
  return e;
}

Evaluator profile(const ContinuumSolution& sol) {
  Evaluator e;
  e.fn = [sol](double x) { return U_eval(sol, x); };
  for (const auto& iv : sol.flip_set) {
    e.breakpoints.push_back(iv.lo);
    e.breakpoints.push_back(iv.hi);
  }
  return e;
}

double l2_distance(const Evaluator& f, const Evaluator& g, int m_sub) {
  if (m_sub < 1) throw InvalidArgument("l2_distance: m_sub must be >= 1");
  std::vector<double> pts{0.0, 1.0};
  // A floor of 64 segments keeps smooth-vs-smooth comparisons resolved.
  for (int k = 1; k < 64; ++k) pts.push_back(k / 64.0);
  for (double b : f.breakpoints) pts.push_back(b);
  for (double b : g.breakpoints) pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double sum = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double lo = std::max(0.0, pts[s]);
    const double hi = std::min(1.0, pts[s + 1]);
    if (hi <= lo) continue;
    const double h = (hi - lo) / m_sub;
    for (int k = 0; k < m_sub; ++k) {
      const double x = lo + (k + 0.5) * h;
      const double d = f(x) - g(x);
      sum += d * d * h;
    }
  }
  return std::sqrt(sum);
}

std::vector<ClSnapshot> cl_evolve(const Evaluator& g, const ModelParams& params, int M,
                                  std::pair<double, double> t_span,
                                  const std::vector<double>& sample_times,
                                  const IntegratorConfig& cfg) {
  if (M < 3) throw InvalidArgument("cl_evolve: M must be >= 3");
  ModelParams p = params;
  p.n = M;
  p.validate();
  std::vector<double> v0(M);
  for (int i = 0; i < M; ++i) v0[i] = g((i + 0.5) / M);
  OdeRhs rhs = [p](double, std::span<const double> v, std::span<double> out) {
    rotating_vector_field(v, p, out);
  };
  const auto traj = integrate(rhs, v0, t_span, cfg, sample_times);
  std::vector<ClSnapshot> out;
  out.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) out.push_back({traj.times[k], traj.states[k]});
  return out;
}

}  // namespace ckm
