#include "ckm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ckm {

namespace {

constexpr std::uint64_t kGraphStream = 0x6772617068ULL;  // "graph"
constexpr std::uint64_t kPhaseStream = 0x7068617365ULL;  // "phase"

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(got) +
                          " vs " + std::to_string(want) + ")");
  }
}

// sum_j w_ij sin(v_j - v_i) for all i, written into `out`.
void coupling_sums(std::span<const double> v, const WeightMatrix& W, std::span<double> out) {
  const int n = W.n();
  if (W.is_uniform()) {
    double s = 0.0;
    double c = 0.0;
    for (double x : v) {
      s += std::sin(x);
      c += std::cos(x);
    }
    const double w = W.uniform_value();
    for (int i = 0; i < n; ++i) {
      out[i] = w * (std::cos(v[i]) * s - std::sin(v[i]) * c);
    }
    return;
  }
  std::vector<double> sn(n);
  std::vector<double> cs(n);
  for (int i = 0; i < n; ++i) {
    sn[i] = std::sin(v[i]);
    cs[i] = std::cos(v[i]);
  }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    double c = 0.0;
    for (int j : W.neighbors(i)) {
      const double w = W(i, j);
      s += w * sn[j];
      c += w * cs[j];
    }
    out[i] = cs[i] * s - sn[i] * c;
  }
}

}  // namespace

std::string_view to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::Complete:
      return "complete";
    case GraphKind::RandomDense:
      return "dense";
    case GraphKind::RandomSparse:
      return "sparse";
  }
  return "unknown";
}

GraphKind graph_kind_from_string(std::string_view name) {
  if (name == "complete") return GraphKind::Complete;
  if (name == "dense") return GraphKind::RandomDense;
  if (name == "sparse") return GraphKind::RandomSparse;
  throw InvalidArgument("unknown graph kind '" + std::string(name) +
                        "' (expected complete, dense or sparse)");
}

double ModelParams::b0() const { return stationary_input(natural_frequencies(n, a), V1); }

void ModelParams::validate() const {
  if (n < 3) throw InvalidArgument("n must be at least 3");
  if (!(a > 0.0)) throw InvalidArgument("frequency spread a must be positive");
  if (!(K > 0.0)) throw InvalidArgument("coupling K must be positive");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("graphon value p must lie in (0, 1]");
  if (!std::isfinite(b1) || !std::isfinite(V1) || !std::isfinite(V0)) {
    throw InvalidArgument("b1, V1 and V0 must be finite");
  }
  if (gamma && !(*gamma > 0.0 && *gamma < 0.5)) {
    throw InvalidArgument("sparse exponent gamma must lie in (0, 1/2)");
  }
}

std::vector<double> natural_frequencies(int n, double a) {
  if (n < 3) throw InvalidArgument("natural_frequencies: n must be at least 3");
  if (!(a > 0.0)) throw InvalidArgument("natural_frequencies: a must be positive");
  std::vector<double> w(n);
  for (int i = 1; i <= n; ++i) {
    w[i - 1] = a * (2 * i - n - 1) / (2.0 * n);
  }
  return w;
}

double stationary_input(std::span<const double> frequencies, double V1) {
  if (frequencies.empty()) throw InvalidArgument("stationary_input: empty frequency vector");
  // Pairwise summation from both ends keeps the symmetric case exactly zero.
  double sum = 0.0;
  std::size_t lo = 0;
  std::size_t hi = frequencies.size();
  while (hi - lo > 1) {
    sum += frequencies[lo++] + frequencies[--hi];
  }
  if (hi > lo) sum += frequencies[lo];
  return V1 - sum / static_cast<double>(frequencies.size());
}

double wrap_angle(double x) {
  double r = std::remainder(x, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

WeightMatrix::WeightMatrix(int n, GraphKind kind, double alpha_n, std::vector<double> weights)
    : n_(n), kind_(kind), alpha_n_(alpha_n), weights_(std::move(weights)) {
  if (n < 1) throw InvalidArgument("WeightMatrix: n must be positive");
  check_size(weights_.size(), static_cast<std::size_t>(n) * n, "WeightMatrix");
  if (!(alpha_n > 0.0)) throw InvalidArgument("WeightMatrix: alpha_n must be positive");
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("WeightMatrix: weights must be finite and nonnegative");
    }
  }
  const double first = weights_.front();
  if (std::all_of(weights_.begin(), weights_.end(), [&](double w) { return w == first; })) {
    uniform_value_ = first;
  }
  row_start_.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      if ((*this)(i, j) != 0.0) col_.push_back(j);
    }
    row_start_[i + 1] = col_.size();
  }
}

std::span<const int> WeightMatrix::neighbors(int i) const {
  return std::span<const int>(col_).subspan(row_start_[i], row_start_[i + 1] - row_start_[i]);
}

double WeightMatrix::density() const {
  return static_cast<double>(col_.size()) / (static_cast<double>(n_) * n_);
}

bool operator==(const WeightMatrix& x, const WeightMatrix& y) {
  return x.n_ == y.n_ && x.kind_ == y.kind_ && x.alpha_n_ == y.alpha_n_ && x.weights_ == y.weights_;
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(stream));
  const std::uint64_t bits = splitmix64(key + splitmix64(counter));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

WeightMatrix build_graph(GraphKind kind, const ModelParams& params) {
  params.validate();
  const int n = params.n;
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  if (kind == GraphKind::Complete) {
    return WeightMatrix(n, kind, 1.0, std::vector<double>(nn, params.p));
  }

  double alpha_n = 1.0;
  double prob = params.p;
  if (kind == GraphKind::RandomSparse) {
    if (!params.gamma) throw InvalidArgument("sparse graphs require gamma in (0, 1/2)");
    alpha_n = std::pow(static_cast<double>(n), -*params.gamma);
    // Truncated graphon min(1/alpha_n, W); a no-op for W = p <= 1 < n^gamma.
    prob = alpha_n * std::min(1.0 / alpha_n, params.p);
  }

  std::vector<double> w(nn, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const std::uint64_t counter = static_cast<std::uint64_t>(i) * n + j;
      const double edge = counter_uniform(params.seed, kGraphStream, counter) < prob ? 1.0 : 0.0;
      w[static_cast<std::size_t>(i) * n + j] = edge;
      w[static_cast<std::size_t>(j) * n + i] = edge;
    }
  }
  return WeightMatrix(n, kind, alpha_n, std::move(w));
}

void vector_field(double t, std::span<const double> u, const ModelParams& params,
                  const WeightMatrix& W, std::span<double> dudt) {
  const int n = params.n;
  check_size(u.size(), n, "vector_field");
  check_size(dudt.size(), n, "vector_field");
  check_size(W.n(), n, "vector_field");
  coupling_sums(u, W, dudt);
  const double gain = params.K / (n * W.alpha_n());
  const double V = params.desired(t);
  const double b0 = params.b0();
  const auto omega = natural_frequencies(n, params.a);
  for (int i = 0; i < n; ++i) {
    dudt[i] = omega[i] + gain * dudt[i] + params.b1 * std::sin(V - u[i]) + b0;
  }
}

std::vector<double> vector_field(double t, std::span<const double> u, const ModelParams& params,
                                 const WeightMatrix& W) {
  std::vector<double> out(u.size());
  vector_field(t, u, params, W, out);
  return out;
}

void rotating_vector_field(std::span<const double> v, const ModelParams& params,
                           std::span<double> dvdt) {
  const int n = params.n;
  check_size(v.size(), n, "rotating_vector_field");
  check_size(dvdt.size(), n, "rotating_vector_field");
  double s = 0.0;
  double c = 0.0;
  for (double x : v) {
    s += std::sin(x);
    c += std::cos(x);
  }
  const double nu = params.nu();
  const double scale = params.pK() / n;
  for (int i = 0; i < n; ++i) {
    const double si = std::sin(v[i]);
    const double ci = std::cos(v[i]);
    dvdt[i] = (2 * (i + 1) - n - 1) * nu + scale * (ci * s - si * c) - params.b1 * si;
  }
}

std::vector<double> rotating_vector_field(std::span<const double> v, const ModelParams& params) {
  std::vector<double> out(v.size());
  rotating_vector_field(v, params, out);
  return out;
}

void rotating_vector_field(std::span<const double> v, const ModelParams& params,
                           const WeightMatrix& W, std::span<double> dvdt) {
  const int n = params.n;
  check_size(v.size(), n, "rotating_vector_field");
  check_size(dvdt.size(), n, "rotating_vector_field");
  check_size(W.n(), n, "rotating_vector_field");
  coupling_sums(v, W, dvdt);
  const double gain = params.K / (n * W.alpha_n());
  const double nu = params.nu();
  for (int i = 0; i < n; ++i) {
    dvdt[i] = (2 * (i + 1) - n - 1) * nu + gain * dvdt[i] - params.b1 * std::sin(v[i]);
  }
}

RotatingSystem::RotatingSystem(ModelParams params, WeightMatrix W)
    : params_(std::move(params)), W_(std::move(W)) {
  params_.validate();
  check_size(W_.n(), params_.n, "RotatingSystem");
  omega_ = natural_frequencies(params_.n, params_.a);
}

void RotatingSystem::operator()(double /*t*/, std::span<const double> v,
                                std::span<double> dvdt) const {
  const int n = params_.n;
  coupling_sums(v, W_, dvdt);
  const double gain = params_.K / (n * W_.alpha_n());
  for (int i = 0; i < n; ++i) {
    dvdt[i] = omega_[i] + gain * dvdt[i] - params_.b1 * std::sin(v[i]);
  }
}

std::vector<double> random_initial_phases(int n, std::uint64_t seed) {
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    u[i] = std::numbers::pi * (2.0 * counter_uniform(seed, kPhaseStream, i) - 1.0);
  }
  return u;
}

}  // namespace ckm
