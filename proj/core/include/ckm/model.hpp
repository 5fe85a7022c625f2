#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ckm {

/// Thrown when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class GraphKind { Complete, RandomDense, RandomSparse };

std::string_view to_string(GraphKind kind);
GraphKind graph_kind_from_string(std::string_view name);

/// Scalars of the controlled Kuramoto model on a uniform graph.
///
/// The stationary input b0, the frequency step nu and the ratio beta are
/// derived on demand so they can never drift from (n, a, p, K, V1).
struct ModelParams {
  int n = 3;
  double a = 1.0;
  double K = 0.5;
  double p = 1.0;
  std::optional<double> gamma;  // sparse exponent, only for RandomSparse
  double b1 = 0.2;
  double V1 = 1.0;
  double V0 = 1.0;
  std::uint64_t seed = 1;

  double pK() const { return p * K; }
  double nu() const { return a / (2.0 * n); }
  double beta() const { return (n - 1) * nu() / pK(); }
  /// V1 minus the mean natural frequency; equals V1 for uniform spacing.
  double b0() const;
  /// Desired motion V(t) = V1 t + V0.
  double desired(double t) const { return V1 * t + V0; }

  /// Throws InvalidArgument unless n >= 3, a > 0, K > 0 and p in (0, 1].
  void validate() const;
};

/// Uniformly spaced frequencies a(2i - n - 1) / (2n), i = 1..n.
std::vector<double> natural_frequencies(int n, double a);

/// V1 minus the mean of `frequencies`.
double stationary_input(std::span<const double> frequencies, double V1);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double x);

/// Coupling weights of one graph realization plus its scaling factor.
///
/// Weights are kept dense (row-major) for inspection and export. For 0/1
/// random graphs a compressed neighbor list is kept alongside so the vector
/// field costs O(edges) instead of O(n^2).
class WeightMatrix {
 public:
  WeightMatrix(int n, GraphKind kind, double alpha_n, std::vector<double> weights);

  int n() const { return n_; }
  GraphKind kind() const { return kind_; }
  double alpha_n() const { return alpha_n_; }
  double operator()(int i, int j) const { return weights_[static_cast<std::size_t>(i) * n_ + j]; }
  std::span<const double> weights() const { return weights_; }

  /// True when every entry equals the same value (complete graph).
  bool is_uniform() const { return uniform_value_.has_value(); }
  double uniform_value() const { return uniform_value_.value_or(0.0); }

  /// Column indices j with w_ij != 0, for row i.
  std::span<const int> neighbors(int i) const;
  std::size_t edge_count() const { return col_.size(); }
  /// Fraction of nonzero entries over all n^2 slots.
  double density() const;

  friend bool operator==(const WeightMatrix& x, const WeightMatrix& y);

 private:
  int n_;
  GraphKind kind_;
  double alpha_n_;
  std::vector<double> weights_;
  std::optional<double> uniform_value_;
  std::vector<std::size_t> row_start_;
  std::vector<int> col_;
};

/// Samples (or fills) the weight matrix for `kind`.
///
/// Complete fills every entry with p. Random kinds draw one Bernoulli variable
/// per unordered pair i <= j from a counter-based stream keyed by
/// (params.seed, i, j) and mirror it, so the result depends only on the seed.
/// Sparse graphs use edge probability alpha_n * min(1/alpha_n, p) with
/// alpha_n = n^-gamma.
WeightMatrix build_graph(GraphKind kind, const ModelParams& params);

/// Lab-frame right-hand side:
/// du_i/dt = w_i + K/(n alpha_n) sum_j w_ij sin(u_j - u_i) + b1 sin(V(t) - u_i) + b0.
void vector_field(double t, std::span<const double> u, const ModelParams& params,
                  const WeightMatrix& W, std::span<double> dudt);
std::vector<double> vector_field(double t, std::span<const double> u, const ModelParams& params,
                                 const WeightMatrix& W);

/// Complete-graph rotating-frame field for v = u - V(t):
/// dv_i/dt = (2i - n - 1) nu + (pK/n) sum_j sin(v_j - v_i) - b1 sin v_i.
void rotating_vector_field(std::span<const double> v, const ModelParams& params,
                           std::span<double> dvdt);
std::vector<double> rotating_vector_field(std::span<const double> v, const ModelParams& params);

/// Rotating-frame field for an arbitrary weight matrix (b0 = V1 makes it
/// autonomous). Reduces to rotating_vector_field when W is uniform.
void rotating_vector_field(std::span<const double> v, const ModelParams& params,
                           const WeightMatrix& W, std::span<double> dvdt);

/// Callable wrapper around the rotating-frame field with cached frequencies.
class RotatingSystem {
 public:
  RotatingSystem(ModelParams params, WeightMatrix W);
  void operator()(double t, std::span<const double> v, std::span<double> dvdt) const;
  const ModelParams& params() const { return params_; }
  const WeightMatrix& graph() const { return W_; }

 private:
  ModelParams params_;
  WeightMatrix W_;
  std::vector<double> omega_;
};

/// i.i.d. uniform phases on [-pi, pi], keyed by `seed` (independent of the
/// graph stream).
std::vector<double> random_initial_phases(int n, std::uint64_t seed);

/// Uniform double in [0, 1) from a counter-based stream.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

}  // namespace ckm
