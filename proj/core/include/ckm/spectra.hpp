#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ckm/model.hpp"

namespace ckm {

enum class StabilityClass { AsymptoticallyStable, Unstable, Marginal };

std::string_view to_string(StabilityClass c);

struct StabilityReport {
  std::vector<double> eigenvalues;  // ascending
  int n_positive = 0;
  int n_negative = 0;
  int n_zero = 0;
  StabilityClass stability = StabilityClass::Marginal;
};

/// Jacobian of the complete-graph rotating-frame field at v. The upper
/// triangle is computed and mirrored, so the result is bitwise symmetric.
Eigen::MatrixXd jacobian(std::span<const double> v, const ModelParams& params);

/// Real spectrum of a symmetric matrix, ascending. Throws InvalidArgument when
/// A deviates from symmetry by more than 1e-12 and std::runtime_error when the
/// eigensolver does not converge.
std::vector<double> sym_eigenvalues(const Eigen::MatrixXd& A);

/// 1e-8 (1 + ||A||_F).
double default_zero_tol(const Eigen::MatrixXd& A);

/// Counts signs, treating |lambda| < zero_tol as zero.
StabilityReport classify(std::span<const double> eigs, double zero_tol);

/// jacobian -> sym_eigenvalues -> classify with default_zero_tol.
StabilityReport stability_at(std::span<const double> v, const ModelParams& params);

}  // namespace ckm
