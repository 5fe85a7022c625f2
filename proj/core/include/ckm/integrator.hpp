#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ckm {

/// Right-hand side f(t, y) -> dydt.
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct IntegratorConfig {
  double rtol = 1e-9;
  double atol = 1e-11;
  double h_init = 0.0;  // 0 selects the starting step automatically
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 1'000'000;

  void validate() const;
};

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { StepBudget, StepUnderflow, NonFinite };
  IntegrationError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;

  std::size_t size() const { return times.size(); }
  const std::vector<double>& back() const { return states.back(); }
};

/// Adaptive DOP853 stepper with 7th-order dense output.
///
/// Each call to step() performs one accepted step towards t_bound. The local
/// error estimate is held below atol + rtol * |y| in the RMS sense.
class Dop853 {
 public:
  Dop853(OdeRhs rhs, std::vector<double> y0, double t0, double t_bound, IntegratorConfig cfg);

  bool done() const { return t_ == t_bound_; }
  void step();

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  std::span<const double> y() const { return y_; }
  /// Derivative at (t(), y()).
  std::span<const double> dydt() const { return f_; }

  /// Interpolated state at `t` inside the last accepted step.
  void dense(double t, std::span<double> out);

  long steps() const { return steps_; }
  long rhs_evals() const { return evals_; }

 private:
  void eval(double t, std::span<const double> y, std::span<double> out);
  double initial_step();
  void prepare_dense();

  OdeRhs rhs_;
  IntegratorConfig cfg_;
  std::size_t n_;
  double t_;
  double t_old_;
  double t_bound_;
  double direction_;
  double h_abs_;
  double h_prev_ = 0.0;
  std::vector<double> y_;
  std::vector<double> y_old_;
  std::vector<double> f_;
  std::vector<std::vector<double>> k_;  // stage derivatives, extended
  std::vector<std::vector<double>> dense_coef_;
  std::vector<double> work_;
  bool dense_ready_ = false;
  long steps_ = 0;
  long evals_ = 0;
};

/// Integrates from t_span.first to t_span.second. Without `sample_times` the
/// result holds the initial point and every accepted step; otherwise exactly
/// the requested times (which must be monotone in the integration direction
/// and lie inside the span), evaluated by dense output.
Trajectory integrate(const OdeRhs& field, std::span<const double> u0,
                     std::pair<double, double> t_span, const IntegratorConfig& cfg = {},
                     const std::optional<std::vector<double>>& sample_times = std::nullopt);

/// Same tableau with a fixed step and no error control; used for order checks.
std::vector<double> integrate_fixed(const OdeRhs& field, std::span<const double> u0, double t0,
                                    double t1, int steps);

struct SteadyState {
  std::vector<double> state;
  bool converged = false;
  double t_reached = 0.0;
};

/// Integrates an autonomous field until sup|f(u)| stays below `eps` for a
/// trailing window of length `window`, or until t_max.
SteadyState steady_state(const OdeRhs& field, std::span<const double> u0,
                         const IntegratorConfig& cfg = {}, double t_max = 200.0,
                         double window = 10.0, double eps = 1e-9);

}  // namespace ckm
