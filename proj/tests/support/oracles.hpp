#pragma once

// Reference computations kept independent of the library: plain composite
// rules, bisection and fixed-step RK4.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Bisection on a sign change, to |b - a| <= tol.
inline double bisect(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  double fa = f(a);
  if ((fa < 0) == (f(b) < 0)) throw std::runtime_error("bisect: no sign change");
  while (b - a > tol) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// First root after `a` of f, scanning in steps of `step` then bisecting.
inline double first_root(const std::function<double(double)>& f, double a, double limit, double step) {
  double x = a + step;
  double fx_prev = f(x);
  for (double y = x + step; y <= limit; y += step) {
    const double fy = f(y);
    if ((fy < 0) != (fx_prev < 0)) return bisect(f, y - step, y);
    fx_prev = fy;
  }
  throw std::runtime_error("first_root: none");
}

/// Eigenvalues of [[a, b], [c, d]] by the textbook formula (real case).
inline std::array<double, 2> eig2(double a, double b, double c, double d) {
  const double tr = a + d;
  const double disc = std::max(0.0, tr * tr - 4.0 * (a * d - b * c));
  return {0.5 * (tr + std::sqrt(disc)), 0.5 * (tr - std::sqrt(disc))};
}

/// Fixed-step RK4 for the linear system z' = A(x) z, x' = eps, with the
/// radius carried as a logarithm and the direction renormalised each step.
/// Returns the x where log|z| first rises through log(delta) after having
/// been below it.
inline double linear_exit_rk4(const std::function<std::array<double, 4>(double)>& A, double x0,
                              std::array<double, 2> z0, double eps, double delta, double h, double x_end) {
  double x = x0;
  double logr = std::log(std::hypot(z0[0], z0[1]));
  double u1 = z0[0] / std::hypot(z0[0], z0[1]);
  double u2 = z0[1] / std::hypot(z0[0], z0[1]);
  bool inside = logr <= std::log(delta);
  auto f = [&](double xx, double a1, double a2) {
    const auto m = A(xx);
    return std::array<double, 2>{m[0] * a1 + m[1] * a2, m[2] * a1 + m[3] * a2};
  };
  while (x < x_end) {
    const auto k1 = f(x, u1, u2);
    const auto k2 = f(x + 0.5 * h * eps, u1 + 0.5 * h * k1[0], u2 + 0.5 * h * k1[1]);
    const auto k3 = f(x + 0.5 * h * eps, u1 + 0.5 * h * k2[0], u2 + 0.5 * h * k2[1]);
    const auto k4 = f(x + h * eps, u1 + h * k3[0], u2 + h * k3[1]);
    const double n1 = u1 + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    const double n2 = u2 + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    const double norm = std::hypot(n1, n2);
    const double prev = logr;
    logr += std::log(norm);
    u1 = n1 / norm;
    u2 = n2 / norm;
    const double x_prev = x;
    x += h * eps;
    const double ld = std::log(delta);
    if (!inside && logr <= ld) inside = true;
    if (inside && prev < ld && logr >= ld) return x_prev + (x - x_prev) * (ld - prev) / (logr - prev);
  }
  throw std::runtime_error("linear_exit_rk4: no exit");
}

}  // namespace oracle
