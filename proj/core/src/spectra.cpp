#include "ckm/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ckm {

std::string_view to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::AsymptoticallyStable:
      return "stable";
    case StabilityClass::Unstable:
      return "unstable";
    case StabilityClass::Marginal:
      return "marginal";
  }
  return "unknown";
}

Eigen::MatrixXd jacobian(std::span<const double> v, const ModelParams& params) {
  const int n = params.n;
  if (static_cast<int>(v.size()) != n) throw InvalidArgument("jacobian: dimension mismatch");
  const double scale = params.pK() / n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double a = scale * std::cos(v[j] - v[i]);
      A(i, j) = a;
      A(j, i) = a;
    }
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) off += A(i, j);
    }
    A(i, i) = -off - params.b1 * std::cos(v[i]);
  }
  return A;
}

std::vector<double> sym_eigenvalues(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw InvalidArgument("sym_eigenvalues: matrix is not square");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument("sym_eigenvalues: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_eigenvalues: eigensolver did not converge");
  }
  const auto& ev = solver.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end());
  return out;
}

double default_zero_tol(const Eigen::MatrixXd& A) { return 1e-8 * (1.0 + A.norm()); }

StabilityReport classify(std::span<const double> eigs, double zero_tol) {
  StabilityReport r;
  r.eigenvalues.assign(eigs.begin(), eigs.end());
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end());
  for (double l : r.eigenvalues) {
    if (std::abs(l) < zero_tol) {
      ++r.n_zero;
    } else if (l > 0.0) {
      ++r.n_positive;
    } else {
      ++r.n_negative;
    }
  }
  if (r.n_positive > 0) {
    r.stability = StabilityClass::Unstable;
  } else if (r.n_zero > 0) {
    r.stability = StabilityClass::Marginal;
  } else {
    r.stability = StabilityClass::AsymptoticallyStable;
  }
  return r;
}

StabilityReport stability_at(std::span<const double> v, const ModelParams& params) {
  const auto A = jacobian(v, params);
  return classify(sym_eigenvalues(A), default_zero_tol(A));
}

}  // namespace ckm
