#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ckm/equilibria.hpp"
#include "ckm/model.hpp"
#include "ckm/spectra.hpp"

namespace ckm {

enum class BifurcationKind { SaddleNode, Pitchfork };
enum class Criticality { Supercritical, Subcritical, Unclassified };

/// Which sign of the critical gain b1* to report. The controller analysis
/// works with b1 > 0; negative gains are available for completeness.
enum class GainRegime { Positive, Negative, Any };

std::string_view to_string(BifurcationKind k);
std::string_view to_string(Criticality c);

struct BifurcationPoint {
  BifurcationKind kind = BifurcationKind::SaddleNode;
  SignPattern sigma;
  Branch branch = Branch::Plus;
  double xi_star = 0.0;
  double b1_star = 0.0;
  Criticality criticality = Criticality::Unclassified;
  /// Pitchforks only: direct root counting on both sides of b1* agrees with
  /// the derivative-sign criticality.
  bool confirmed = false;
};

struct NoEquilibriumCheck {
  bool holds = false;
  double beta = 0.0;
  double max_xichi = 0.0;  // max of xi * chi(xi) for the all-plus pattern
};

/// beta > max_{xi in [0,1]} xi chi^{+...+}(xi): no equilibrium exists at b1 = 0.
NoEquilibriumCheck no_equilibrium_condition(const ModelParams& params);

/// Interior local extrema of chibar^sigma on each pole-free segment of both
/// branches. Maxima are supercritical, minima subcritical; b1* = pK / chibar.
std::vector<BifurcationPoint> saddle_node_points(const SignPattern& sigma,
                                                 const ModelParams& params,
                                                 GainRegime regime = GainRegime::Positive);

struct PitchforkScan {
  std::vector<BifurcationPoint> points;
  std::vector<std::string> diagnostics;  // degenerate interior patterns
};

/// One pitchfork per interior pattern (sigma_2..sigma_{n-1}) at xi = 1, with
/// sigma reported as the (+, interior, +) member of the quadruple.
PitchforkScan pitchfork_points(const ModelParams& params,
                               GainRegime regime = GainRegime::Positive);

/// Sign of d chibar / d xi at xi = 1 from one-sided differences at
/// xi = 1 - 2^-k, k = 8..20, with Richardson extrapolation. 0 if the signs do
/// not settle.
int endpoint_slope_sign(const SignPattern& sigma, const ModelParams& params, Branch branch);

struct BranchRow {
  double xi = 0.0;
  std::optional<double> chibar;  // empty at a pole
  std::optional<double> b1;
  int n_positive = 0;
  StabilityClass stability = StabilityClass::Marginal;
  int segment = 0;  // increments each time the curve crosses a pole
};

/// Tabulates chibar^sigma along `grid` with the stability of v^sigma(xi) at
/// b1(xi) = pK / chibar(xi).
std::vector<BranchRow> branch_diagram(const SignPattern& sigma, const ModelParams& params,
                                      const std::vector<double>& grid,
                                      Branch branch = Branch::Plus);

/// Number of equilibria of `sigma` at gain b1 (other parameters from params).
int root_count(const SignPattern& sigma, const ModelParams& params, double b1);

}  // namespace ckm
