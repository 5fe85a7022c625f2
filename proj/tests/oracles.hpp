#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the library's equilibria or spectra code.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

constexpr double kPi = std::numbers::pi;

// dv_i/dt = (2i - n - 1) nu + (pK/n) sum_j sin(v_j - v_i) - b1 sin v_i, written
// out with the O(n^2) double loop.
inline Eigen::VectorXd field(const Eigen::VectorXd& v, double a, double pK, double b1) {
  const int n = static_cast<int>(v.size());
  const double nu = a / (2.0 * n);
  Eigen::VectorXd f(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::sin(v[j] - v[i]);
    f[i] = (2 * (i + 1) - n - 1) * nu + pK / n * s - b1 * std::sin(v[i]);
  }
  return f;
}

inline Eigen::MatrixXd field_jacobian(const Eigen::VectorXd& v, double pK, double b1) {
  const int n = static_cast<int>(v.size());
  Eigen::MatrixXd J(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = -b1 * std::cos(v[i]);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      J(i, j) = pK / n * std::cos(v[j] - v[i]);
      diag -= pK / n * std::cos(v[j] - v[i]);
    }
    J(i, i) = diag;
  }
  return J;
}

inline double wrap(double x) {
  double y = std::fmod(x + kPi, 2.0 * kPi);
  if (y < 0) y += 2.0 * kPi;
  return y - kPi;
}

inline double circular_gap(double x, double y) { return std::abs(wrap(x - y)); }

inline bool same_point(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double tol) {
  for (int i = 0; i < x.size(); ++i) {
    if (circular_gap(x[i], y[i]) > tol) return false;
  }
  return true;
}

// Every zero of the rotating-frame field reachable by Newton from a uniform
// grid of `per_axis`^n starting points on [-pi, pi)^n, deduplicated mod 2 pi.
inline std::vector<Eigen::VectorXd> brute_force_equilibria(int n, double a, double pK, double b1,
                                                           int per_axis) {
  std::vector<Eigen::VectorXd> found;
  std::vector<int> idx(n, 0);
  const double h = 2.0 * kPi / per_axis;
  while (true) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = -kPi + (idx[i] + 0.5) * h;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      const Eigen::VectorXd f = field(v, a, pK, b1);
      if (f.cwiseAbs().maxCoeff() < 1e-13) {
        ok = true;
        break;
      }
      Eigen::VectorXd step = field_jacobian(v, pK, b1).fullPivLu().solve(-f);
      if (!step.allFinite()) break;
      // Damped to keep Newton inside one basin.
      const double len = step.cwiseAbs().maxCoeff();
      if (len > 0.5) step *= 0.5 / len;
      v += step;
    }
    if (ok) {
      for (int i = 0; i < n; ++i) v[i] = wrap(v[i]);
      const bool seen = std::any_of(found.begin(), found.end(),
                                    [&](const Eigen::VectorXd& w) { return same_point(v, w, 1e-7); });
      if (!seen) found.push_back(v);
    }
    int k = 0;
    while (k < n && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == n) break;
  }
  return found;
}

// Eigenvalues of a symmetric 2x2 or 3x3 matrix from its characteristic
// polynomial, ascending.
inline std::vector<double> charpoly_eigenvalues(const Eigen::MatrixXd& A) {
  if (A.rows() == 2) {
    const double tr = A(0, 0) + A(1, 1);
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return {tr / 2.0 - disc, tr / 2.0 + disc};
  }
  // Trigonometric solution of the depressed cubic for real-rooted
  // lambda^3 - c2 lambda^2 + c1 lambda - c0.
  const double c2 = A.trace();
  const double c1 = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0) + A(0, 0) * A(2, 2) -
                    A(0, 2) * A(2, 0) + A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
  const double c0 = A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
                    A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
                    A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
  const double m = c2 / 3.0;
  const double p = c1 - c2 * c2 / 3.0;  // lambda = x + m: x^3 + p x + q = 0
  const double q = -c0 + c1 * m - 2.0 * m * m * m;
  std::vector<double> out(3);
  if (std::abs(p) < 1e-300) {
    for (int k = 0; k < 3; ++k) out[k] = m + std::cbrt(-q);
  } else {
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) out[k] = m + r * std::cos(theta - 2.0 * kPi * k / 3.0);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double determinant_cofactor(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  if (n == 1) return A(0, 0);
  double det = 0.0;
  for (int c = 0; c < n; ++c) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (int i = 1; i < n; ++i) {
      for (int j = 0, jj = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, jj++) = A(i, j);
      }
    }
    det += (c % 2 == 0 ? 1.0 : -1.0) * A(0, c) * determinant_cofactor(minor);
  }
  return det;
}

// Simpson quadrature of sqrt(1 - (k (x - 1/2))^2) over [lo, hi].
inline double integrand_simpson(double k, double lo, double hi, int panels = 200000) {
  const double h = (hi - lo) / panels;
  auto f = [&](double x) {
    const double s = k * (x - 0.5);
    return std::sqrt(std::max(0.0, 1.0 - s * s));
  };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace oracle
