#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ckm/model.hpp"

namespace ckm {

/// Per-oscillator choice between the principal arcsin branch (+1) and the
/// flipped branch (-1) of an equilibrium phase.
class SignPattern {
 public:
  explicit SignPattern(std::vector<int> signs);
  /// All +1 of length n.
  static SignPattern all_plus(int n);
  /// Bit i of `mask` set means sigma_{i+1} = -1.
  static SignPattern from_mask(int n, std::uint64_t mask);
  /// Parses a string of '+' and '-' characters.
  static SignPattern parse(const std::string& text);

  int size() const { return static_cast<int>(signs_.size()); }
  int operator[](int i) const { return signs_[i]; }
  const std::vector<int>& signs() const { return signs_; }
  int count_negative() const;
  std::uint64_t mask() const;
  SignPattern flipped() const;
  /// Exchanges entries i and j (zero based).
  SignPattern swapped(int i, int j) const;
  std::string to_string() const;

  friend bool operator==(const SignPattern&, const SignPattern&) = default;

 private:
  std::vector<int> signs_;
};

/// Which sign of pK chi + b1 a branch of equilibria lives on.
enum class Branch { Plus, Minus };

inline double branch_sign(Branch b) { return b == Branch::Plus ? 1.0 : -1.0; }
std::string_view to_string(Branch b);

struct EquilibriumRecord {
  SignPattern sigma;
  double xi = 0.0;
  double C_D = 0.0;
  Branch branch = Branch::Plus;
  std::vector<double> v;
  double residual = 0.0;
  bool boundary = false;  // root sits at xi = 1
};

/// (1/n) sum_i sigma_i sqrt(1 - ((2i-n-1) xi / (n-1))^2) for xi in [0, 1].
double chi(const SignPattern& sigma, double xi);
/// d chi / d xi on [0, 1); diverges at 1 unless the end terms cancel.
double chi_derivative(const SignPattern& sigma, double xi);

/// xi / (+-beta - xi chi(xi)); nullopt when the denominator is below 1e-14.
std::optional<double> chibar(const SignPattern& sigma, double xi, const ModelParams& params,
                             Branch branch = Branch::Plus);
/// Analytic d chibar / d xi; nullopt at a pole.
std::optional<double> chibar_derivative(const SignPattern& sigma, double xi,
                                        const ModelParams& params, Branch branch = Branch::Plus);

/// Phase vector v^sigma for a given xi on `branch`.
std::vector<double> equilibrium_phases(const SignPattern& sigma, double xi, Branch branch);

/// Gain b1 that places the branch point of `sigma` at xi (pK / chibar).
std::optional<double> gain_at(const SignPattern& sigma, double xi, const ModelParams& params,
                              Branch branch = Branch::Plus);

/// The scan grid on (0, 1]: 4096 uniform points plus geometric points
/// accumulating at 1.
const std::vector<double>& xi_grid();

/// All equilibria of pattern `sigma` at gain params.b1 (nonzero).
///
/// Roots of pK (+-beta - xi chi) = b1 xi are bracketed on xi_grid() and
/// bisected to machine precision; each root is turned into v^sigma and its
/// residual checked against 1e-9. An empty result means no equilibrium.
std::vector<EquilibriumRecord> solve_equilibrium(const SignPattern& sigma,
                                                 const ModelParams& params);

struct Enumeration {
  std::vector<EquilibriumRecord> records;
  /// multiplicity[mask] = number of roots for SignPattern::from_mask(n, mask).
  std::vector<int> multiplicity;
};

inline constexpr int kMaxEnumerationSize = 20;

/// solve_equilibrium over all 2^n patterns; n <= kMaxEnumerationSize.
Enumeration enumerate_equilibria(const ModelParams& params, int threads = 1);

}  // namespace ckm
