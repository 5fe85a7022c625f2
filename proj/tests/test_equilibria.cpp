#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include <ckm/equilibria.hpp>

#include "oracles.hpp"

using namespace ckm;

namespace {

ModelParams params_for(int n, double b1, double a = 1.0, double pK = 0.5) {
  ModelParams p;
  p.n = n;
  p.a = a;
  p.K = pK;
  p.p = 1.0;
  p.b1 = b1;
  return p;
}

Eigen::VectorXd as_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double sine_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::sin(x);
  return s;
}

// Location of the maximum of xi / (beta - xi chi) for the all-plus pattern on
// a dense grid, computed straight from the definition.
double fold_location(int n, double beta) {
  double best = 0.0;
  double best_x = 0.0;
  for (int k = 1; k < 200000; ++k) {
    const double x = k / 200000.0;
    double c = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double ci = static_cast<double>(2 * i - n - 1) / (n - 1);
      c += std::sqrt(1.0 - ci * ci * x * x);
    }
    const double val = x / (beta - x * c / n);
    if (val > best) {
      best = val;
      best_x = x;
    }
  }
  return best_x;
}

void check_against_oracle(int n, double b1, int per_axis) {
  const auto p = params_for(n, b1);
  const auto en = enumerate_equilibria(p);
  const auto ref = oracle::brute_force_equilibria(n, p.a, p.pK(), p.b1, per_axis);
  CHECK(en.records.size() == (std::size_t{1} << n));
  CHECK(ref.size() == en.records.size());
  for (const auto& r : en.records) {
    const auto v = as_vec(r.v);
    const auto hits = std::count_if(ref.begin(), ref.end(), [&](const Eigen::VectorXd& w) {
      return oracle::same_point(v, w, 1e-6);
    });
    CHECK_MESSAGE(hits == 1, "pattern " << r.sigma.to_string());
  }
}

}  // namespace

TEST_CASE("sign patterns") {
  const auto s = SignPattern::parse("+-+-");
  CHECK(s.size() == 4);
  CHECK(s[1] == -1);
  CHECK(s.count_negative() == 2);
  CHECK(SignPattern::from_mask(4, s.mask()) == s);
  CHECK(s.flipped().to_string() == "-+-+");
  CHECK(s.swapped(0, 1).to_string() == "-++-");
  CHECK(SignPattern::all_plus(3).to_string() == "+++");
  CHECK_THROWS_AS(SignPattern::parse("+x"), InvalidArgument);
  CHECK_THROWS_AS(SignPattern(std::vector<int>{1, 0}), InvalidArgument);
}

TEST_CASE("chi values and flip antisymmetry") {
  CHECK(chi(SignPattern::all_plus(6), 0.0) == doctest::Approx(1.0));
  CHECK(chi(SignPattern::all_plus(3), 1.0) == doctest::Approx(1.0 / 3.0));
  const auto s = SignPattern::parse("+--+-+");
  for (double x = 0.0; x <= 1.0; x += 0.01) CHECK(chi(s.flipped(), x) == -chi(s, x));
  CHECK_THROWS_AS(chi(s, 1.1), InvalidArgument);
  CHECK_THROWS_AS(chi(s, -0.1), InvalidArgument);
}

TEST_CASE("chi derivative matches central differences") {
  const auto s = SignPattern::parse("+-++-");
  for (double x : {0.1, 0.4, 0.77, 0.95}) {
    const double h = 1e-6;
    const double fd = (chi(s, x + h) - chi(s, x - h)) / (2 * h);
    CHECK(chi_derivative(s, x) == doctest::Approx(fd).epsilon(1e-7));
  }
  // End terms with opposite signs cancel, leaving a finite slope at 1.
  CHECK(std::isfinite(chi_derivative(SignPattern::parse("++-"), 1.0)));
}

TEST_CASE("chibar limits, boundedness and poles") {
  auto p = params_for(5, 0.2);
  const auto all = SignPattern::all_plus(5);
  CHECK(std::abs(*chibar(all, 1e-12, p)) < 1e-11);
  // beta = 0.8 exceeds max xi chi, so the all-plus curve is bounded and positive.
  for (double x : xi_grid()) {
    const auto v = chibar(all, x, p);
    REQUIRE(v);
    CHECK(*v > 0.0);
  }

  // n = 4, beta = 0.1: some pattern has a sign change of the denominator.
  auto q = params_for(4, 0.2);
  q.K = (q.n - 1) * q.nu() / 0.1;
  CHECK(q.beta() == doctest::Approx(0.1));
  bool any_pole = false;
  for (std::uint64_t m = 0; m < 16; ++m) {
    const auto s = SignPattern::from_mask(4, m);
    double prev = q.beta();
    for (double x : xi_grid()) {
      const double d = q.beta() - x * chi(s, x);
      if ((d > 0) != (prev > 0)) any_pole = true;
      prev = d;
    }
  }
  CHECK(any_pole);
}

TEST_CASE("chibar derivative matches central differences") {
  auto p = params_for(6, 0.3);
  const auto s = SignPattern::parse("+-+--+");
  for (Branch b : {Branch::Plus, Branch::Minus}) {
    for (double x : {0.2, 0.5, 0.9}) {
      const double h = 1e-6;
      const double fd = (*chibar(s, x + h, p, b) - *chibar(s, x - h, p, b)) / (2 * h);
      CHECK(*chibar_derivative(s, x, p, b) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("all-plus pattern at case (i) gains: one root below the fold") {
  const auto p = params_for(5, 0.2);
  const auto recs = solve_equilibrium(SignPattern::all_plus(5), p);
  const double xi0 = fold_location(5, p.beta());
  const auto below = std::count_if(recs.begin(), recs.end(), [&](const auto& r) { return r.xi < xi0; });
  CHECK(below == 1);
  for (const auto& r : recs) CHECK(r.residual < 1e-9);
}

TEST_CASE("large gain: every pattern has a root near (n-1) nu / b1") {
  const auto p = params_for(6, 1e3);
  const double expect = (p.n - 1) * p.nu() / p.b1;
  for (std::uint64_t m = 0; m < 64; ++m) {
    const auto recs = solve_equilibrium(SignPattern::from_mask(6, m), p);
    REQUIRE(!recs.empty());
    const bool near = std::any_of(recs.begin(), recs.end(), [&](const auto& r) {
      return std::abs(r.xi - expect) < 1e-3 * expect;
    });
    CHECK(near);
  }
}

TEST_CASE("records satisfy the equilibrium invariants") {
  for (int n : {3, 4, 5, 6}) {
    for (double b1 : {0.15, 0.4, 2.0}) {
      const auto p = params_for(n, b1);
      const auto en = enumerate_equilibria(p);
      int total = 0;
      for (int m : en.multiplicity) total += m;
      CHECK(total == static_cast<int>(en.records.size()));
      std::map<std::string, std::vector<double>> cd;
      for (const auto& r : en.records) {
        CHECK(r.residual < 1e-9);
        CHECK(std::abs(sine_sum(r.v)) < 1e-9);
        CHECK(std::abs(oracle::field(as_vec(r.v), p.a, p.pK(), p.b1).cwiseAbs().maxCoeff()) < 1e-9);
        double c = 0.0;
        for (double x : r.v) c += std::cos(x) / n;
        CHECK(std::abs(c - r.C_D) < 1e-9);
        // The branch agrees with the sign of pK C + b1.
        CHECK((p.pK() * r.C_D + p.b1 > 0) == (r.branch == Branch::Plus));
        cd[r.sigma.to_string()].push_back(r.C_D);
      }
      // Pairing: swapping a (-, +) mirror pair keeps C_D.
      for (const auto& r : en.records) {
        for (int i = 0; i < n / 2; ++i) {
          if (r.sigma[i] == -1 && r.sigma[n - 1 - i] == 1) {
            const auto& other = cd[r.sigma.swapped(i, n - 1 - i).to_string()];
            const bool found = std::any_of(other.begin(), other.end(),
                                           [&](double c) { return std::abs(c - r.C_D) < 1e-9; });
            CHECK(found);
          }
        }
      }
    }
  }
}

TEST_CASE("phases follow the arcsin reconstruction") {
  const auto s = SignPattern::parse("+-+-");
  const double xi = 0.6;
  const auto v = equilibrium_phases(s, xi, Branch::Plus);
  const double c[4] = {-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0};
  CHECK(v[0] == doctest::Approx(std::asin(c[0] * xi)));
  CHECK(v[1] == doctest::Approx(-std::asin(c[1] * xi) - M_PI));
  CHECK(v[2] == doctest::Approx(std::asin(c[2] * xi)));
  CHECK(v[3] == doctest::Approx(M_PI - std::asin(c[3] * xi)));
  // xi = 1 is clamped exactly at the ends.
  const auto w = equilibrium_phases(SignPattern::all_plus(4), 1.0, Branch::Plus);
  CHECK(w[3] == doctest::Approx(M_PI / 2));
}

TEST_CASE("enumeration matches the brute-force oracle at n = 3") {
  check_against_oracle(3, 2.0, 24);
}

TEST_CASE("enumeration matches the brute-force oracle at n = 4 with large gain") {
  check_against_oracle(4, 5.0, 14);
}

TEST_CASE("no isolated equilibrium without control when the drift condition holds") {
  // n = 3, a = 1, pK = 0.2: beta = 5/3 exceeds max xi chi (at most 1).
  const auto ref = oracle::brute_force_equilibria(3, 1.0, 0.2, 0.0, 16);
  CHECK(ref.empty());
}

TEST_CASE("enumeration is independent of the worker count") {
  const auto p = params_for(7, 0.3);
  const auto one = enumerate_equilibria(p, 1);
  const auto four = enumerate_equilibria(p, 4);
  REQUIRE(one.records.size() == four.records.size());
  CHECK(one.multiplicity == four.multiplicity);
  for (std::size_t k = 0; k < one.records.size(); ++k) {
    CHECK(one.records[k].sigma == four.records[k].sigma);
    CHECK(one.records[k].xi == four.records[k].xi);
  }
}

TEST_CASE("solver preconditions") {
  auto p = params_for(21, 0.3);
  CHECK_THROWS_AS(enumerate_equilibria(p), InvalidArgument);
  p = params_for(4, 0.0);
  CHECK_THROWS_AS(solve_equilibrium(SignPattern::all_plus(4), p), InvalidArgument);
  p = params_for(4, 0.3);
  CHECK_THROWS_AS(solve_equilibrium(SignPattern::all_plus(5), p), InvalidArgument);
}
