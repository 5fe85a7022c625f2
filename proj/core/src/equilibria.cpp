#include "ckm/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace ckm {

namespace {

constexpr double kPoleTol = 1e-14;
constexpr double kResidualTol = 1e-9;
constexpr double kClampTol = 1e-12;

// (2i - n - 1) / (n - 1) for i = 1..n; exactly -1 and +1 at the ends.
std::vector<double> offsets(int n) {
  if (n < 2) throw InvalidArgument("sign patterns need at least two entries");
  std::vector<double> c(n);
  for (int i = 1; i <= n; ++i) c[i - 1] = static_cast<double>(2 * i - n - 1) / (n - 1);
  return c;
}

double safe_sqrt_term(double cx) {
  const double r = 1.0 - cx * cx;
  return r > 0.0 ? std::sqrt(r) : 0.0;
}

double clamped_asin(double s) {
  if (s > 1.0) {
    if (s > 1.0 + kClampTol) throw std::domain_error("arcsin argument above 1");
    s = 1.0;
  } else if (s < -1.0) {
    if (s < -1.0 - kClampTol) throw std::domain_error("arcsin argument below -1");
    s = -1.0;
  }
  return std::asin(s);
}

std::vector<double> build_grid() {
  constexpr int kUniform = 4096;
  std::vector<double> g;
  for (int k = 1; k <= kUniform; ++k) g.push_back(static_cast<double>(k) / kUniform);
  // Geometric refinement at both ends: chibar derivatives blow up near 1 and
  // roots move towards 0 as b1 grows.
  for (int k = 13; k <= 60; ++k) {
    g.push_back(std::ldexp(1.0, -k));
    g.push_back(1.0 - std::ldexp(1.0, -k));
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  g.erase(std::remove_if(g.begin(), g.end(), [](double x) { return !(x > 0.0 && x <= 1.0); }),
          g.end());
  return g;
}

// chi^sigma on xi_grid() through a cached table of the square-root terms.
class ChiScanner {
 public:
  explicit ChiScanner(int n) : n_(n), grid_(xi_grid()), table_(grid_.size() * n) {
    const auto c = offsets(n);
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      for (int i = 0; i < n; ++i) table_[k * n + i] = safe_sqrt_term(c[i] * grid_[k]);
    }
  }

  double chi_at(const SignPattern& sigma, std::size_t k) const {
    double s = 0.0;
    const double* row = &table_[k * n_];
    for (int i = 0; i < n_; ++i) s += sigma[i] * row[i];
    return s / n_;
  }

  const std::vector<double>& grid() const { return grid_; }

 private:
  int n_;
  const std::vector<double>& grid_;
  std::vector<double> table_;
};

double root_function(const SignPattern& sigma, double xi, double pK, double beta, double b1,
                     double s) {
  return pK * (s * beta - xi * chi(sigma, xi)) - b1 * xi;
}

double bisect(const SignPattern& sigma, double lo, double hi, double flo, double pK, double beta,
              double b1, double s) {
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo < 1e-16) break;
    const double fm = root_function(sigma, mid, pK, beta, b1, s);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<EquilibriumRecord> solve_with(const ChiScanner& scan, const SignPattern& sigma,
                                          const ModelParams& params) {
  const double pK = params.pK();
  const double beta = params.beta();
  const double b1 = params.b1;
  const auto& grid = scan.grid();
  std::vector<EquilibriumRecord> out;

  for (Branch branch : {Branch::Plus, Branch::Minus}) {
    const double s = branch_sign(branch);
    std::vector<double> roots;
    // Limit xi -> 0+ of the root function is s * pK * beta.
    double x_prev = 0.0;
    double f_prev = s * pK * beta;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x = grid[k];
      const double f = pK * (s * beta - x * scan.chi_at(sigma, k)) - b1 * x;
      if (f == 0.0) {
        roots.push_back(x);
      } else if (f_prev != 0.0 && (f < 0.0) != (f_prev < 0.0)) {
        roots.push_back(bisect(sigma, x_prev, x, f_prev, pK, beta, b1, s));
      }
      x_prev = x;
      f_prev = f;
    }

    for (double xi : roots) {
      EquilibriumRecord rec{sigma, xi, chi(sigma, xi), branch, equilibrium_phases(sigma, xi, branch)};
      rec.boundary = 1.0 - xi <= 1e-12;
      const auto f = rotating_vector_field(rec.v, params);
      for (double r : f) rec.residual = std::max(rec.residual, std::abs(r));
      if (!(rec.residual < kResidualTol)) {
        throw std::runtime_error("equilibrium residual check failed for sigma " +
                                 sigma.to_string() + " (residual " +
                                 std::to_string(rec.residual) + ")");
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace

SignPattern::SignPattern(std::vector<int> signs) : signs_(std::move(signs)) {
  if (signs_.empty()) throw InvalidArgument("SignPattern: empty pattern");
  for (int s : signs_) {
    if (s != 1 && s != -1) throw InvalidArgument("SignPattern: entries must be +1 or -1");
  }
}

SignPattern SignPattern::all_plus(int n) { return SignPattern(std::vector<int>(n, 1)); }

SignPattern SignPattern::from_mask(int n, std::uint64_t mask) {
  if (n < 1 || n > 63) throw InvalidArgument("SignPattern::from_mask: n out of range");
  std::vector<int> s(n);
  for (int i = 0; i < n; ++i) s[i] = (mask >> i) & 1U ? -1 : 1;
  return SignPattern(std::move(s));
}

SignPattern SignPattern::parse(const std::string& text) {
  std::vector<int> s;
  for (char ch : text) {
    if (ch == '+') {
      s.push_back(1);
    } else if (ch == '-') {
      s.push_back(-1);
    } else {
      throw InvalidArgument("SignPattern::parse: expected only '+' and '-' in '" + text + "'");
    }
  }
  return SignPattern(std::move(s));
}

int SignPattern::count_negative() const {
  return static_cast<int>(std::count(signs_.begin(), signs_.end(), -1));
}

std::uint64_t SignPattern::mask() const {
  std::uint64_t m = 0;
  for (int i = 0; i < size() && i < 64; ++i) {
    if (signs_[i] < 0) m |= std::uint64_t{1} << i;
  }
  return m;
}

SignPattern SignPattern::flipped() const {
  auto s = signs_;
  for (int& x : s) x = -x;
  return SignPattern(std::move(s));
}

SignPattern SignPattern::swapped(int i, int j) const {
  auto s = signs_;
  std::swap(s.at(i), s.at(j));
  return SignPattern(std::move(s));
}

std::string SignPattern::to_string() const {
  std::string out;
  for (int s : signs_) out.push_back(s > 0 ? '+' : '-');
  return out;
}

std::string_view to_string(Branch b) { return b == Branch::Plus ? "+" : "-"; }

double chi(const SignPattern& sigma, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw InvalidArgument("chi: xi must lie in [0, 1]");
  const int n = sigma.size();
  const auto c = offsets(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += sigma[i] * safe_sqrt_term(c[i] * xi);
  return s / n;
}

double chi_derivative(const SignPattern& sigma, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw InvalidArgument("chi_derivative: xi must lie in [0, 1]");
  const int n = sigma.size();
  const auto c = offsets(n);
  // Mirror nodes i and n+1-i share c^2; pairing them lets opposite signs
  // cancel exactly instead of producing inf - inf at xi = 1.
  double s = 0.0;
  for (int i = 0; i < n / 2; ++i) {
    const int weight = sigma[i] + sigma[n - 1 - i];
    if (weight == 0) continue;
    const double c2 = c[i] * c[i];
    s += weight * c2 * xi / std::sqrt(1.0 - c2 * xi * xi);
  }
  // The middle node of odd n has c = 0 and contributes nothing.
  return -s / n;
}

std::optional<double> chibar(const SignPattern& sigma, double xi, const ModelParams& params,
                             Branch branch) {
  const double denom = branch_sign(branch) * params.beta() - xi * chi(sigma, xi);
  if (std::abs(denom) < kPoleTol) return std::nullopt;
  return xi / denom;
}

std::optional<double> chibar_derivative(const SignPattern& sigma, double xi,
                                        const ModelParams& params, Branch branch) {
  const double sb = branch_sign(branch) * params.beta();
  const double denom = sb - xi * chi(sigma, xi);
  if (std::abs(denom) < kPoleTol) return std::nullopt;
  return (sb + xi * xi * chi_derivative(sigma, xi)) / (denom * denom);
}

std::vector<double> equilibrium_phases(const SignPattern& sigma, double xi, Branch branch) {
  const int n = sigma.size();
  const auto c = offsets(n);
  const double s = branch_sign(branch);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    const double phi = s * clamped_asin(c[i] * xi);
    if (sigma[i] > 0) {
      v[i] = phi;
    } else if (phi >= 0.0) {
      v[i] = std::numbers::pi - phi;
    } else {
      v[i] = -phi - std::numbers::pi;
    }
  }
  return v;
}

std::optional<double> gain_at(const SignPattern& sigma, double xi, const ModelParams& params,
                              Branch branch) {
  const auto cb = chibar(sigma, xi, params, branch);
  if (!cb || *cb == 0.0) return std::nullopt;
  return params.pK() / *cb;
}

const std::vector<double>& xi_grid() {
  static const std::vector<double> grid = build_grid();
  return grid;
}

std::vector<EquilibriumRecord> solve_equilibrium(const SignPattern& sigma,
                                                 const ModelParams& params) {
  params.validate();
  if (sigma.size() != params.n) throw InvalidArgument("solve_equilibrium: pattern length != n");
  if (params.b1 == 0.0) throw InvalidArgument("solve_equilibrium: b1 must be nonzero");
  return solve_with(ChiScanner(params.n), sigma, params);
}

Enumeration enumerate_equilibria(const ModelParams& params, int threads) {
  params.validate();
  if (params.n > kMaxEnumerationSize) {
    throw InvalidArgument("enumerate_equilibria: n = " + std::to_string(params.n) +
                          " exceeds the exhaustive budget of " +
                          std::to_string(kMaxEnumerationSize));
  }
  if (params.b1 == 0.0) throw InvalidArgument("enumerate_equilibria: b1 must be nonzero");
  const int n = params.n;
  const std::uint64_t count = std::uint64_t{1} << n;
  const ChiScanner scan(n);
  std::vector<std::vector<EquilibriumRecord>> per_mask(count);

  const int workers = std::max(1, threads);
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](int w) {
    try {
      for (std::uint64_t m = w; m < count; m += workers) {
        per_mask[m] = solve_with(scan, SignPattern::from_mask(n, m), params);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Enumeration out;
  out.multiplicity.resize(count);
  for (std::uint64_t m = 0; m < count; ++m) {
    out.multiplicity[m] = static_cast<int>(per_mask[m].size());
    for (auto& r : per_mask[m]) out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace ckm
