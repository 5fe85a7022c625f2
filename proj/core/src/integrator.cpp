#include "ckm/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ckm/model.hpp"
#include "dop853_tableau.hpp"

namespace ckm {

namespace tab = detail::dop853;

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kErrorExponent = -1.0 / 8.0;

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw InvalidArgument("rtol and atol must be positive");
  if (h_init < 0.0) throw InvalidArgument("h_init must be nonnegative (0 = automatic)");
  if (!(h_max > 0.0)) throw InvalidArgument("h_max must be positive");
  if (h_init > h_max) throw InvalidArgument("h_init must not exceed h_max");
  if (max_steps < 1) throw InvalidArgument("max_steps must be at least 1");
}

Dop853::Dop853(OdeRhs rhs, std::vector<double> y0, double t0, double t_bound, IntegratorConfig cfg)
    : rhs_(std::move(rhs)),
      cfg_(cfg),
      n_(y0.size()),
      t_(t0),
      t_old_(t0),
      t_bound_(t_bound),
      direction_(t_bound >= t0 ? 1.0 : -1.0),
      y_(std::move(y0)) {
  cfg_.validate();
  if (n_ == 0) throw InvalidArgument("integrator: empty state");
  for (double v : y_) {
    if (!std::isfinite(v)) throw InvalidArgument("integrator: initial state is not finite");
  }
  y_old_ = y_;
  f_.resize(n_);
  work_.resize(n_);
  k_.assign(tab::kStagesExtended, std::vector<double>(n_));
  dense_coef_.assign(tab::kInterpolatorPower, std::vector<double>(n_));
  eval(t_, y_, f_);
  h_abs_ = cfg_.h_init > 0.0 ? cfg_.h_init : initial_step();
}

void Dop853::eval(double t, std::span<const double> y, std::span<double> out) {
  rhs_(t, y, out);
  ++evals_;
  for (double v : out) {
    if (!std::isfinite(v)) {
      throw IntegrationError(IntegrationError::Kind::NonFinite,
                             "non-finite derivative at t = " + std::to_string(t));
    }
  }
}

// Hairer-Wanner starting step heuristic.
double Dop853::initial_step() {
  const double span = std::abs(t_bound_ - t_);
  if (span == 0.0) return 0.0;
  std::vector<double> scaled(n_);
  for (std::size_t i = 0; i < n_; ++i) scaled[i] = y_[i] / (cfg_.atol + std::abs(y_[i]) * cfg_.rtol);
  const double d0 = rms(scaled);
  for (std::size_t i = 0; i < n_; ++i) scaled[i] = f_[i] / (cfg_.atol + std::abs(y_[i]) * cfg_.rtol);
  const double d1 = rms(scaled);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);

  std::vector<double> y1(n_);
  std::vector<double> f1(n_);
  for (std::size_t i = 0; i < n_; ++i) y1[i] = y_[i] + h0 * direction_ * f_[i];
  eval(t_ + h0 * direction_, y1, f1);
  for (std::size_t i = 0; i < n_; ++i) {
    scaled[i] = (f1[i] - f_[i]) / (cfg_.atol + std::abs(y_[i]) * cfg_.rtol);
  }
  const double d2 = rms(scaled) / h0;
  const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                   : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
  return std::min({100.0 * h0, h1, span, cfg_.h_max});
}

void Dop853::step() {
  if (done()) return;
  if (steps_ >= cfg_.max_steps) {
    throw IntegrationError(IntegrationError::Kind::StepBudget,
                           "step budget of " + std::to_string(cfg_.max_steps) +
                               " exhausted at t = " + std::to_string(t_));
  }
  const double min_step = 10.0 * std::abs(std::nextafter(t_, direction_ * INFINITY) - t_);
  double h_abs = std::clamp(h_abs_, min_step, cfg_.h_max);
  bool rejected = false;
  std::vector<double> y_new(n_);

  while (true) {
    if (h_abs < min_step) {
      throw IntegrationError(IntegrationError::Kind::StepUnderflow,
                             "step size underflow at t = " + std::to_string(t_));
    }
    double t_new = t_ + h_abs * direction_;
    if (direction_ * (t_new - t_bound_) > 0.0) t_new = t_bound_;
    const double h = t_new - t_;
    h_abs = std::abs(h);

    k_[0] = f_;
    for (int s = 1; s < tab::kStages; ++s) {
      for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) acc += tab::A[s][j] * k_[j][i];
        work_[i] = y_[i] + h * acc;
      }
      eval(t_ + tab::C[s] * h, work_, k_[s]);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (int j = 0; j < tab::kStages; ++j) acc += tab::B[j] * k_[j][i];
      y_new[i] = y_[i] + h * acc;
    }
    eval(t_new, y_new, k_[tab::kStages]);

    double err5 = 0.0;
    double err3 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double scale = cfg_.atol + std::max(std::abs(y_[i]), std::abs(y_new[i])) * cfg_.rtol;
      double e5 = 0.0;
      double e3 = 0.0;
      for (int j = 0; j <= tab::kStages; ++j) {
        e5 += tab::E5[j] * k_[j][i];
        e3 += tab::E3[j] * k_[j][i];
      }
      e5 /= scale;
      e3 /= scale;
      err5 += e5 * e5;
      err3 += e3 * e3;
    }
    double error_norm = 0.0;
    if (err5 != 0.0 || err3 != 0.0) {
      error_norm = h_abs * err5 / std::sqrt((err5 + 0.01 * err3) * static_cast<double>(n_));
    }

    if (error_norm < 1.0) {
      double factor = error_norm == 0.0
                          ? kMaxFactor
                          : std::min(kMaxFactor, kSafety * std::pow(error_norm, kErrorExponent));
      if (rejected) factor = std::min(1.0, factor);
      h_prev_ = h;
      y_old_.swap(y_);
      y_.swap(y_new);
      f_ = k_[tab::kStages];
      t_old_ = t_;
      t_ = t_new;
      h_abs_ = h_abs * factor;
      dense_ready_ = false;
      ++steps_;
      return;
    }
    h_abs *= std::max(kMinFactor, kSafety * std::pow(error_norm, kErrorExponent));
    rejected = true;
  }
}

void Dop853::prepare_dense() {
  const double h = h_prev_;
  for (int s = tab::kStages + 1; s < tab::kStagesExtended; ++s) {
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (int j = 0; j < s; ++j) acc += tab::A[s][j] * k_[j][i];
      work_[i] = y_old_[i] + h * acc;
    }
    eval(t_old_ + tab::C[s] * h, work_, k_[s]);
  }
  for (std::size_t i = 0; i < n_; ++i) {
    const double dy = y_[i] - y_old_[i];
    const double f_old = k_[0][i];
    dense_coef_[0][i] = dy;
    dense_coef_[1][i] = h * f_old - dy;
    dense_coef_[2][i] = 2.0 * dy - h * (f_[i] + f_old);
    for (int r = 0; r < tab::kInterpolatorPower - 3; ++r) {
      double acc = 0.0;
      for (int j = 0; j < tab::kStagesExtended; ++j) acc += tab::D[r][j] * k_[j][i];
      dense_coef_[3 + r][i] = h * acc;
    }
  }
  dense_ready_ = true;
}

void Dop853::dense(double t, std::span<double> out) {
  if (steps_ == 0 || t == t_) {
    std::copy(y_.begin(), y_.end(), out.begin());
    return;
  }
  if (!dense_ready_) prepare_dense();
  const double x = (t - t_old_) / h_prev_;
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int r = tab::kInterpolatorPower - 1; r >= 0; --r) {
      acc += dense_coef_[r][i];
      acc *= (r % 2 == 0) ? x : 1.0 - x;
    }
    out[i] = y_old_[i] + acc;
  }
}

Trajectory integrate(const OdeRhs& field, std::span<const double> u0,
                     std::pair<double, double> t_span, const IntegratorConfig& cfg,
                     const std::optional<std::vector<double>>& sample_times) {
  const auto [t0, t1] = t_span;
  if (!(t1 != t0)) throw InvalidArgument("integrate: empty time span");
  const double dir = t1 > t0 ? 1.0 : -1.0;
  Dop853 stepper(field, std::vector<double>(u0.begin(), u0.end()), t0, t1, cfg);
  Trajectory out;

  if (!sample_times) {
    out.times.push_back(t0);
    out.states.emplace_back(u0.begin(), u0.end());
    while (!stepper.done()) {
      stepper.step();
      out.times.push_back(stepper.t());
      out.states.emplace_back(stepper.y().begin(), stepper.y().end());
    }
    return out;
  }

  const auto& ts = *sample_times;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (dir * (ts[k] - t0) < 0.0 || dir * (ts[k] - t1) > 0.0) {
      throw InvalidArgument("integrate: sample time outside the integration span");
    }
    if (k > 0 && !(dir * (ts[k] - ts[k - 1]) > 0.0)) {
      throw InvalidArgument("integrate: sample times must be strictly monotone");
    }
  }
  std::vector<double> buf(u0.size());
  std::size_t next = 0;
  while (next < ts.size() && ts[next] == t0) {
    out.times.push_back(t0);
    out.states.emplace_back(u0.begin(), u0.end());
    ++next;
  }
  while (next < ts.size()) {
    stepper.step();
    while (next < ts.size() && dir * (ts[next] - stepper.t()) <= 0.0) {
      stepper.dense(ts[next], buf);
      out.times.push_back(ts[next]);
      out.states.push_back(buf);
      ++next;
    }
  }
  return out;
}

std::vector<double> integrate_fixed(const OdeRhs& field, std::span<const double> u0, double t0,
                                    double t1, int steps) {
  if (steps < 1) throw InvalidArgument("integrate_fixed: steps must be positive");
  const std::size_t n = u0.size();
  const double h = (t1 - t0) / steps;
  std::vector<double> y(u0.begin(), u0.end());
  std::vector<double> work(n);
  std::vector<std::vector<double>> k(tab::kStages, std::vector<double>(n));
  for (int step = 0; step < steps; ++step) {
    const double t = t0 + step * h;
    field(t, y, k[0]);
    for (int s = 1; s < tab::kStages; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) acc += tab::A[s][j] * k[j][i];
        work[i] = y[i] + h * acc;
      }
      field(t + tab::C[s] * h, work, k[s]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < tab::kStages; ++j) acc += tab::B[j] * k[j][i];
      y[i] += h * acc;
    }
  }
  return y;
}

SteadyState steady_state(const OdeRhs& field, std::span<const double> u0,
                         const IntegratorConfig& cfg, double t_max, double window, double eps) {
  if (!(window > 0.0) || !(window < t_max)) {
    throw InvalidArgument("steady_state: window must lie in (0, t_max)");
  }
  if (!(eps > 0.0)) throw InvalidArgument("steady_state: eps must be positive");
  IntegratorConfig local = cfg;
  // The monitor only looks at step ends; keep several samples per window.
  local.h_max = std::min(cfg.h_max, window / 4.0);
  local.h_init = std::min(local.h_init, local.h_max);
  Dop853 stepper(field, std::vector<double>(u0.begin(), u0.end()), 0.0, t_max, local);

  auto sup = [](std::span<const double> f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  };
  std::optional<double> quiet_since;
  if (sup(stepper.dydt()) < eps) quiet_since = 0.0;
  while (!stepper.done()) {
    stepper.step();
    if (sup(stepper.dydt()) < eps) {
      if (!quiet_since) quiet_since = stepper.t();
      if (stepper.t() - *quiet_since >= window) {
        return {{stepper.y().begin(), stepper.y().end()}, true, stepper.t()};
      }
    } else {
      quiet_since.reset();
    }
  }
  return {{stepper.y().begin(), stepper.y().end()}, false, stepper.t()};
}

}  // namespace ckm
