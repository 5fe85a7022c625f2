#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ckm/integrator.hpp"
#include "ckm/model.hpp"

namespace ckm {

enum class ContinuumKind { Continuous, FlippedContinuous, Discontinuous };

std::string_view to_string(ContinuumKind k);

/// Half-open subinterval [lo, hi) of [0, 1]; an interval ending at 1 also
/// contains 1.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Synchronized solution of the continuum limit in the rotating frame.
struct ContinuumSolution {
  double C = 0.0;
  double b1 = 0.0;
  double a = 0.0;
  double pK = 0.0;
  double eta = 0.0;  // a / (2 (pK C + b1)), in (0, 1]
  double delta_u = 0.0;  // arcsin(eta)
  ContinuumKind kind = ContinuumKind::Continuous;
  std::vector<Interval> flip_set;  // disjoint, sorted, none straddling 1/2
};

/// a/2 - pi pK / 4.
double existence_threshold(double a, double pK);

/// Continuous solution, or nullopt when b1 is below the existence threshold.
/// Bisection on eta for b1 = (pK/2)(a/pK - arcsin eta - eta sqrt(1 - eta^2)) / eta.
std::optional<ContinuumSolution> solve_C(double a, double pK, double b1);

/// Solution whose phase is flipped on `flip_set`. An empty set defers to
/// solve_C; a set covering [0, 1] gives the flipped-continuous solution.
/// Intervals straddling 1/2 are split there. The smallest eta in (0, 1] that
/// satisfies pK C(eta) + b1 = a / (2 eta) is returned; C itself may be
/// negative. Throws InvalidArgument for malformed intervals.
std::optional<ContinuumSolution> solve_C_discontinuous(std::vector<Interval> flip_set, double a,
                                                       double pK, double b1);

/// |a / (2 eta) - pK C - b1|: residual of the defining equation, with C
/// recomputed from eta through the closed-form integral.
double c_residual(const ContinuumSolution& sol);

/// Right-hand side of the C equation for a given eta and flip set:
/// integral of sqrt(1 - (2 eta (x - 1/2))^2) off the flips minus on them.
double c_integral(double eta, std::span<const Interval> flip_set);

/// Solution profile at x in [0, 1].
double U_eval(const ContinuumSolution& sol, double x);

/// arcsin(eta); only defined for the continuous kind.
double delta_u(const ContinuumSolution& sol);

/// A function on [0, 1] together with the points where it may jump, so
/// quadrature can split there.
struct Evaluator {
  std::function<double(double)> fn;
  std::vector<double> breakpoints;

  double operator()(double x) const { return fn(x); }
};

/// Piecewise-constant function equal to v_i on [(i-1)/n, i/n).
Evaluator embed(std::span<const double> v);

/// x -> U_eval(sol, x).
Evaluator profile(const ContinuumSolution& sol);

/// Midpoint cells per segment; doubling it moves step-vs-profile distances by
/// well under 1e-6 for n >= 50.
inline constexpr int kDefaultSubsamples = 64;

/// L2(0, 1) distance by composite midpoint quadrature with m_sub cells
/// between consecutive merged breakpoints (at least 64 segments overall).
double l2_distance(const Evaluator& f, const Evaluator& g, int m_sub = kDefaultSubsamples);

struct ClSnapshot {
  double t = 0.0;
  std::vector<double> v;  // values at the collocation midpoints
  Evaluator embedded() const { return embed(v); }
};

/// Collocation of the continuum-limit equation (rotating frame, uniform
/// graphon W = p) at the M midpoints (i - 1/2)/M. This is exactly the complete
/// graph model with M nodes; the state is returned at each requested time.
std::vector<ClSnapshot> cl_evolve(const Evaluator& g, const ModelParams& params, int M,
                                  std::pair<double, double> t_span,
                                  const std::vector<double>& sample_times,
                                  const IntegratorConfig& cfg = {});

inline constexpr int kDefaultCollocationSize = 512;

}  // namespace ckm
