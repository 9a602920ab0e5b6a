#pragma once

// Explicit Runge-Kutta integrators for y' = f(t, y) on Eigen vector states.
// The adaptive method is Dormand-Prince 5(4) with max-norm error control;
// fixed-step RK4 is kept for convergence studies.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phonobus {

enum class Method { rk4, rk45 };

struct IntegratorConfig {
  Method method = Method::rk45;
  double dt = 1e-3;  // rk4 step (us)
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::size_t save_stride = 0;  // keep every n-th sampled state; 0 keeps none
  double min_step = 1e-12;
  std::size_t max_steps = 50'000'000;
  // Optional upper bound on the adaptive step as a function of time, used to
  // keep the stepper from jumping over narrow pulses.
  std::function<double(double)> max_step;

  void validate() const {
    if (method == Method::rk4 && !(dt > 0.0)) throw std::invalid_argument("IntegratorConfig: dt must be > 0");
    if (method == Method::rk45 && !(rel_tol > 0.0 && abs_tol > 0.0)) {
      throw std::invalid_argument("IntegratorConfig: tolerances must be > 0");
    }
  }
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t) : std::runtime_error(format(what, t)), time_(t) {}
  double time() const { return time_; }

 private:
  static std::string format(const std::string& what, double t) {
    std::ostringstream os;
    os.precision(12);
    os << what << " at t = " << t << " us";
    return os.str();
  }
  double time_;
};

namespace detail {

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, double atol, double rtol) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = std::abs(err(i)) / scale;
    if (std::isnan(r)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace detail

/// Integrates from t0 to each of the increasing `sample_times`, calling
/// `observe(index, t, y)` at every sample. sample_times[0] must equal t0.
template <class State, class Rhs, class Observer>
State integrate(Rhs&& f, State y, const std::vector<double>& sample_times, const IntegratorConfig& cfg,
                Observer&& observe) {
  cfg.validate();
  if (sample_times.empty()) throw std::invalid_argument("integrate: no sample times");
  for (std::size_t i = 1; i < sample_times.size(); ++i) {
    if (!(sample_times[i] > sample_times[i - 1])) throw std::invalid_argument("integrate: sample times not increasing");
  }
  double t = sample_times.front();
  observe(std::size_t{0}, t, y);

  if (cfg.method == Method::rk4) {
    State k1, k2, k3, k4;
    for (std::size_t s = 1; s < sample_times.size(); ++s) {
      const double span = sample_times[s] - t;
      const auto n = static_cast<long>(std::ceil(span / cfg.dt - 1e-9));
      const double h = span / static_cast<double>(std::max(1L, n));
      for (long i = 0; i < std::max(1L, n); ++i) {
        k1 = f(t, y);
        k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
        k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
        k4 = f(t + h, State(y + h * k3));
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = sample_times[s - 1] + static_cast<double>(i + 1) * h;
      }
      t = sample_times[s];
      if (!y.allFinite()) throw IntegrationError("non-finite state", t);
      observe(s, t, y);
    }
    return y;
  }

  // Dormand-Prince 5(4) tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  // Dense-output coefficients (Hairer and Wanner).
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  // Steps never stop at intermediate samples, which are interpolated, so the
  // final state does not depend on how many samples are requested.
  const double t_final = sample_times.back();
  const double total = t_final - t;
  double h = cfg.max_step ? std::min(total, cfg.max_step(t)) : total;
  h = std::min(h, 1e-3 * total + 1e-12);
  State k1 = f(t, y), k2, k3, k4, k5, k6, k7, y_new, err, r2, r3, r4, r5;
  std::size_t steps = 0;
  std::size_t next = 1;

  while (next < sample_times.size()) {
    if (++steps > cfg.max_steps) throw IntegrationError("step budget exhausted", t);
    double step = h;
    if (cfg.max_step) step = std::min(step, cfg.max_step(t));
    bool last = false;
    if (t + step >= t_final || t_final - (t + step) < 1e-12 * std::max(1.0, std::abs(t_final))) {
      step = t_final - t;
      last = true;
    }
    if (step < cfg.min_step && !last) throw IntegrationError("step size underflow", t);

    k2 = f(t + c2 * step, State(y + step * (a21 * k1)));
    k3 = f(t + c3 * step, State(y + step * (a31 * k1 + a32 * k2)));
    k4 = f(t + c4 * step, State(y + step * (a41 * k1 + a42 * k2 + a43 * k3)));
    k5 = f(t + c5 * step, State(y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    k6 = f(t + step, State(y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    y_new = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = f(t + step, y_new);
    err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double en = detail::error_norm(err, y, y_new, cfg.abs_tol, cfg.rel_tol);
    if (!std::isfinite(en) || !y_new.allFinite()) {
      h = 0.25 * step;
      if (h < cfg.min_step) throw IntegrationError("non-finite state", t);
      continue;
    }
    const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    if (en > 1.0) {
      h = step * factor;
      if (h < cfg.min_step) throw IntegrationError("step size underflow", t);
      continue;
    }

    const double t_new = last ? t_final : t + step;
    bool dense_ready = false;
    while (next < sample_times.size() && sample_times[next] <= t_new) {
      if (sample_times[next] == t_new || next + 1 == sample_times.size()) {
        observe(next, sample_times[next], y_new);
      } else {
        if (!dense_ready) {
          r2 = y_new - y;
          r3 = step * k1 - r2;
          r4 = r2 - step * k7 - r3;
          r5 = step * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
          dense_ready = true;
        }
        const double th = (sample_times[next] - t) / step;
        const State ys = y + th * (r2 + (1.0 - th) * (r3 + th * (r4 + (1.0 - th) * r5)));
        observe(next, sample_times[next], ys);
      }
      ++next;
    }
    t = t_new;
    y.swap(y_new);
    k1.swap(k7);
    h = step * factor;
  }
  return y;
}

/// Uniform grid of `n` points from t0 to t1 inclusive.
inline std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  if (n < 2) throw std::invalid_argument("uniform_grid: need at least 2 points");
  if (!(t1 > t0)) throw std::invalid_argument("uniform_grid: empty time span");
  std::vector<double> ts(n);
  for (std::size_t i = 0; i < n; ++i) {
    ts[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  ts.back() = t1;
  return ts;
}

}  // namespace phonobus
