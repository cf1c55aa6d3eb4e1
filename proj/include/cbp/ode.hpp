#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "cbp/error.hpp"

namespace cbp::num {

struct OdeResult {
  double value = 0;
  bool absorbed = false;  //!< state dropped below the absorption floor
  std::size_t steps = 0;
  std::size_t rejected = 0;
};

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_floor = 1e-300;  //!< absorption threshold
  std::size_t max_steps = 1'000'000;
};

//! Integrate the autonomous scalar ODE y' = f(y) from 0 to `t_end` with the
//! Dormand-Prince 5(4) embedded pair and per-step relative error control.
template <class F>
OdeResult integrate_autonomous(F&& f, double y0, double t_end,
                               OdeOptions const& opts = {}) {
  // Butcher tableau
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                   a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                   e4 = b4 - 393.0 / 640, e5 = b5 - -92097.0 / 339200,
                   e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

  OdeResult res;
  res.value = y0;
  if (t_end <= 0) return res;

  double t = 0;
  double y = y0;
  double k1 = f(y);
  double h = std::min(t_end, 1e-3 * std::abs(y) / std::max(std::abs(k1), 1e-300));
  h = std::max(h, 1e-12 * t_end);

  while (t < t_end) {
    if (res.steps + res.rejected > opts.max_steps) {
      throw Error(ErrorCode::indeterminate, "ODE step budget exhausted");
    }
    if (y < opts.abs_floor) {
      res.value = 0;
      res.absorbed = true;
      return res;
    }
    h = std::min(h, t_end - t);
    double k2 = f(y + h * a21 * k1);
    double k3 = f(y + h * (a31 * k1 + a32 * k2));
    double k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    double k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    double k6 =
        f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    double y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    double k7 = f(y_new);
    double err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double scale = opts.rel_tol * std::max({std::abs(y), std::abs(y_new),
                                            opts.abs_floor});
    double ratio = std::abs(err) / scale;
    if (ratio <= 1.0 && std::isfinite(y_new)) {
      t = (t_end - t <= h) ? t_end : t + h;
      y = y_new;
      k1 = k7;
      ++res.steps;
    } else {
      ++res.rejected;
    }
    double factor = ratio > 0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
    if (!std::isfinite(factor)) factor = 0.2;
    h *= std::clamp(factor, 0.2, 5.0);
    if (h < 1e-15 * std::max(t, 1.0) && t < t_end) {
      if (y < 1e3 * opts.abs_floor) {
        res.value = 0;
        res.absorbed = true;
        return res;
      }
      throw Error(ErrorCode::indeterminate, "ODE step size underflow");
    }
  }
  if (y < opts.abs_floor) {
    res.value = 0;
    res.absorbed = true;
  } else {
    res.value = y;
  }
  return res;
}

}  // namespace cbp::num
